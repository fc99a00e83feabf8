"""P1 finite-element Helmholtz solver with Cartesian PML.

The scattered field solves

    div(Lambda grad u_s) + k^2 s_x s_y n u_s = -k^2 (n - 1) u_i

with ``Lambda = diag(s_y/s_x, s_x/s_y)`` and ``s(t) = 1 + i sigma(t)/k`` in
the layer, homogeneous Dirichlet data on the box. The matrix does not depend
on the source, so it is factored once per index and reused for every
incidence direction.

Integrals over D use the 3-point interior Gauss rule. The same points carry
the load, the far-field representation and the Jacobian, which makes the
Jacobian the exact derivative of the discrete far-field map.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import TAG_D, ProbePoints, TriangleMesh, Zoning, barycentric

logger = logging.getLogger(__name__)

PML_REFLECTION = 1e-6

# barycentric coordinates of the 3-point degree-2 Gauss rule
_QUAD_BARY = np.array(
    [[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]
)


def gamma(k: float, dim: int = 2) -> complex:
    """Far-field normalisation constant of the Atkinson expansion."""
    if dim == 2:
        return np.exp(1j * np.pi / 4) / np.sqrt(8 * np.pi * k)
    if dim == 3:
        return 1.0 / (4 * np.pi)
    raise ValueError("dim must be 2 or 3")


class SolverError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IndexField:
    """Piecewise-constant refraction index ``n = sum eta_i 1_{Z_i}``, 1 outside D."""

    zoning: Zoning
    eta: np.ndarray
    real: bool = False

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=complex).copy()
        if eta.shape != (self.zoning.n_zones,):
            raise ValueError("one parameter per zone expected")
        if self.real:
            eta = eta.real.astype(complex)
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)

    @property
    def mesh(self) -> TriangleMesh:
        return self.zoning.mesh

    @cached_property
    def element_values(self) -> np.ndarray:
        """Index value on each D element (D-local order)."""
        return self.eta[self.zoning.labels]

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        owner = self.mesh.locate(points)
        out = np.ones(len(points), dtype=complex)
        dpos = np.full(self.mesh.n_triangles, -1)
        dpos[self.mesh.d_elements] = np.arange(self.mesh.n_d)
        hit = owner >= 0
        j = dpos[owner[hit]]
        vals = out[hit]
        vals[j >= 0] = self.element_values[j[j >= 0]]
        out[hit] = vals
        return out

    def with_eta(self, eta: np.ndarray) -> "IndexField":
        return IndexField(self.zoning, eta, self.real)

    @classmethod
    def constant(cls, zoning: Zoning, value: complex, real: bool = False) -> "IndexField":
        return cls(zoning, np.full(zoning.n_zones, value, dtype=complex), real)


@dataclass(frozen=True)
class DirectionGrid:
    """Uniform directions ``start + j*aperture/M`` with weight ``aperture/M``."""

    angles: np.ndarray
    weights: np.ndarray
    start: float = 0.0
    aperture: float = 2 * np.pi

    @classmethod
    def uniform(cls, m: int, start: float = 0.0, stop: float = 2 * np.pi) -> "DirectionGrid":
        if m < 1:
            raise ValueError("at least one direction")
        aperture = stop - start
        if not 0 < aperture <= 2 * np.pi + 1e-12:
            raise ValueError("aperture must lie in (0, 2 pi]")
        ang = start + aperture * np.arange(m) / m
        return cls(ang, np.full(m, aperture / m), float(start), float(aperture))

    @property
    def vectors(self) -> np.ndarray:
        return np.column_stack([np.cos(self.angles), np.sin(self.angles)])

    @property
    def full(self) -> bool:
        return abs(self.aperture - 2 * np.pi) < 1e-12

    def __len__(self) -> int:
        return len(self.angles)


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Nodal P1 scattered field for one plane wave; the incident part is exact."""

    mesh: TriangleMesh
    k: float
    angle: float
    scattered: np.ndarray

    @property
    def direction(self) -> np.ndarray:
        return np.array([np.cos(self.angle), np.sin(self.angle)])

    @property
    def incident(self) -> np.ndarray:
        return np.exp(1j * self.k * self.mesh.vertices @ self.direction)

    @property
    def total(self) -> np.ndarray:
        return self.incident + self.scattered


# ---------------------------------------------------------------------------
# discretisation
# ---------------------------------------------------------------------------


def pml_sigma0(thickness: float, reflection: float = PML_REFLECTION) -> float:
    """Quadratic-profile strength giving the requested round-trip reflection."""
    return 3.0 * np.log(1.0 / reflection) / (2.0 * thickness)


class FEMSpace:
    """Geometry-dependent FEM operators for one mesh and wave number."""

    def __init__(self, mesh: TriangleMesh, k: float, reflection: float = PML_REFLECTION):
        if k <= 0:
            raise ValueError("k must be positive")
        self.mesh = mesh
        self.k = float(k)
        p = mesh.vertices
        t = mesh.triangles
        area = mesh.areas
        c = mesh.centroids

        # P1 gradients
        x, y = p[t, 0], p[t, 1]
        bx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
        by = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
        gx = bx / (2 * area[:, None])
        gy = by / (2 * area[:, None])

        # PML stretching evaluated at centroids
        thick = mesh.half_width - mesh.pml_start
        s0 = pml_sigma0(thick, reflection)
        depth = np.clip(np.abs(c) - mesh.pml_start, 0.0, None)
        s = 1.0 + 1j * s0 * (depth / thick) ** 2 / self.k
        sx, sy = s[:, 0], s[:, 1]

        kxx = (sy / sx)[:, None, None] * gx[:, :, None] * gx[:, None, :]
        kyy = (sx / sy)[:, None, None] * gy[:, :, None] * gy[:, None, :]
        kloc = area[:, None, None] * (kxx + kyy)
        mref = (np.ones((3, 3)) + np.eye(3)) / 12.0
        mloc = (area * sx * sy)[:, None, None] * mref[None]
        rows = np.repeat(t, 3, axis=1).ravel()
        cols = np.tile(t, (1, 3)).ravel()
        nv = mesh.n_vertices
        base = sp.coo_matrix(
            ((kloc - self.k**2 * mloc).ravel(), (rows, cols)), shape=(nv, nv)
        ).tocsr()

        d = mesh.d_elements
        self._d_rows = rows.reshape(-1, 9)[d].ravel()
        self._d_cols = cols.reshape(-1, 9)[d].ravel()
        self._d_mass = area[d][:, None] * mref.ravel()[None, :]

        bnd = np.zeros(nv, dtype=bool)
        bnd[mesh.boundary_vertices] = True
        self.free = np.flatnonzero(~bnd)
        self._base = base

        # quadrature in D: points, weights, owner (D-local), basis values
        tri_d = t[d]
        self.quad_points = np.einsum("qa,eab->eqb", _QUAD_BARY, p[tri_d]).reshape(-1, 2)
        self.quad_weights = np.repeat(area[d] / 3.0, 3)
        self.quad_owner = np.repeat(np.arange(len(d)), 3)
        qrows = np.repeat(np.arange(3 * len(d)), 3)
        qcols = np.repeat(tri_d, 3, axis=0).ravel()
        qvals = np.tile(_QUAD_BARY, (len(d), 1)).ravel()
        # P1 interpolation from nodes to D quadrature points
        self.interp = sp.csr_matrix((qvals, (qrows, qcols)), shape=(3 * len(d), nv))
        # load operator: b_j = sum_q w_q phi_j(x_q) f(x_q)
        self.load = (self.interp.multiply(self.quad_weights[:, None])).T.tocsr()

    def incident_at_quad(self, angles: np.ndarray) -> np.ndarray:
        dirs = np.column_stack([np.cos(angles), np.sin(angles)])
        return np.exp(1j * self.k * self.quad_points @ dirs.T)

    def matrix(self, n_values: np.ndarray) -> sp.csr_matrix:
        """System matrix for the index given per D element."""
        contrast = np.asarray(n_values, dtype=complex) - 1.0
        md = sp.coo_matrix(
            ((contrast[:, None] * self._d_mass).ravel(), (self._d_rows, self._d_cols)),
            shape=self._base.shape,
        ).tocsr()
        return self._base - self.k**2 * md

    def factor(self, n_values: np.ndarray) -> "Factorization":
        a = self.matrix(n_values)[self.free][:, self.free].tocsc()
        try:
            lu = spla.splu(a, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise SolverError(f"singular Helmholtz system: {exc}") from exc
        return Factorization(self, np.asarray(n_values, dtype=complex), lu)


class Factorization:
    """LU factors of the system for one index; solves any number of sources."""

    def __init__(self, space: FEMSpace, n_values: np.ndarray, lu):
        self.space = space
        self.n_values = n_values
        self._lu = lu

    def solve(self, angles: np.ndarray) -> np.ndarray:
        """Nodal scattered fields, one column per incidence angle."""
        angles = np.atleast_1d(np.asarray(angles, dtype=float))
        return self.solve_sources(self.space.incident_at_quad(angles))

    def solve_sources(self, uinc: np.ndarray) -> np.ndarray:
        """Scattered fields for incident fields given at the D quadrature points."""
        sp_ = self.space
        uinc = np.asarray(uinc, dtype=complex).reshape(len(sp_.quad_weights), -1)
        contrast = (self.n_values - 1.0)[sp_.quad_owner]
        rhs = sp_.k**2 * (sp_.load @ (contrast[:, None] * uinc))
        us = np.zeros((sp_.mesh.n_vertices, uinc.shape[1]), dtype=complex)
        if np.any(contrast != 0):
            us[sp_.free] = self._lu.solve(np.ascontiguousarray(rhs[sp_.free]))
        if not np.all(np.isfinite(us)):
            raise SolverError("non-finite scattered field")
        return us


_SPACES: dict = {}


def fem_space(mesh: TriangleMesh, k: float) -> FEMSpace:
    """Cached FEMSpace per (mesh, k)."""
    key = (id(mesh), float(k))
    hit = _SPACES.get(key)
    if hit is None or hit.mesh is not mesh:
        if len(_SPACES) > 8:
            _SPACES.clear()
        hit = FEMSpace(mesh, k)
        _SPACES[key] = hit
    return hit


def _check_index(mesh: TriangleMesh, n: IndexField) -> None:
    if n.mesh is not mesh:
        raise ValueError("index zoning does not live on this mesh")


def solve_total_field(
    mesh: TriangleMesh, n: IndexField, k: float, direction
) -> ComplexField:
    """Total field for the plane wave ``exp(i k theta.x)``.

    ``direction`` is either an angle or a unit vector.
    """
    _check_index(mesh, n)
    direction = np.asarray(direction, dtype=float)
    angle = float(np.arctan2(direction[1], direction[0])) if direction.ndim else float(direction)
    fac = fem_space(mesh, k).factor(n.element_values)
    return ComplexField(mesh, float(k), angle, fac.solve(np.array([angle]))[:, 0])


def total_at_quad(space: FEMSpace, angles: np.ndarray, scattered: np.ndarray) -> np.ndarray:
    """Exact incident plus interpolated scattered field at D quadrature points."""
    return space.incident_at_quad(angles) + space.interp @ scattered


def far_field_from_quad(
    space: FEMSpace, n_values: np.ndarray, utot_q: np.ndarray, meas_angles: np.ndarray
) -> np.ndarray:
    """``int_D exp(-i k xhat.z) k^2 (n-1) u dz`` for each measurement angle.

    Returns an array (M_m, n_fields).
    """
    xh = np.column_stack([np.cos(meas_angles), np.sin(meas_angles)])
    contrast = (np.asarray(n_values) - 1.0)[space.quad_owner]
    kern = np.exp(-1j * space.k * xh @ space.quad_points.T)
    kern *= (space.k**2 * space.quad_weights * contrast)[None, :]
    return kern @ utot_q


def far_field(
    mesh: TriangleMesh, n: IndexField, k: float, u: ComplexField, grid: DirectionGrid
) -> np.ndarray:
    """Far-field pattern of ``u`` on the directions of ``grid``."""
    _check_index(mesh, n)
    if u.mesh is not mesh:
        raise ValueError("field does not live on this mesh")
    space = fem_space(mesh, k)
    uq = total_at_quad(space, np.array([u.angle]), u.scattered[:, None])
    return far_field_from_quad(space, n.element_values, uq, grid.angles)[:, 0]


def interpolate(values: np.ndarray, mesh: TriangleMesh, points: ProbePoints) -> np.ndarray:
    """Barycentric interpolation of nodal values at probe points.

    ``values`` may be (n_vertices,) or (n_vertices, m).
    """
    tri = mesh.triangles[points.owners]
    v = mesh.vertices[tri]
    out = []
    for p, t in zip(points.points, v):
        lam = barycentric(t, p)
        if np.any(lam < -1e-9):
            raise ValueError("probe point outside its owning element")
        out.append(lam)
    lam = np.array(out)
    vals = np.asarray(values)[tri]
    if vals.ndim == 2:
        return np.einsum("pa,pa->p", lam, vals)
    return np.einsum("pa,pam->pm", lam, vals)


def interpolation_matrix(mesh: TriangleMesh, points: ProbePoints) -> sp.csr_matrix:
    """Sparse (n_points, n_vertices) P1 interpolation operator."""
    tri = mesh.triangles[points.owners]
    v = mesh.vertices[tri]
    lam = np.array([barycentric(t, p) for p, t in zip(points.points, v)])
    if np.any(lam < -1e-9):
        raise ValueError("probe point outside its owning element")
    rows = np.repeat(np.arange(len(points)), 3)
    return sp.csr_matrix((lam.ravel(), (rows, tri.ravel())), shape=(len(points), mesh.n_vertices))
