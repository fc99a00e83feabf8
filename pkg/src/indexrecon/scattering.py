"""Index-to-far-field map and its Jacobian on the zone basis.

Row convention for stacked data (residuals, Jacobian rows): measurement
major, ``row = m * M_e + e`` for measurement direction m and incidence e,
which is ``FarFieldData.values.ravel()``.

The Jacobian uses mixed reciprocity,

    dF(n) dn (theta, xhat) = int_D k^2 u_n(-xhat, z) u_n(theta, z) dn(z) dz,

so it only needs total fields for the incidence set ``Gamma_e`` and for the
reversed measurement set ``-Gamma_m``; directions shared by both sets are
solved once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .forward import (
    DirectionGrid,
    FEMSpace,
    IndexField,
    far_field_from_quad,
    fem_space,
    total_at_quad,
)
from .mesh import TriangleMesh, Zoning

MATCH_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FarFieldData:
    """``values[m, e] = u_inf(theta_e, xhat_m)``."""

    values: np.ndarray
    grid_e: DirectionGrid
    grid_m: DirectionGrid
    k: float

    def __post_init__(self):
        if self.values.shape != (len(self.grid_m), len(self.grid_e)):
            raise ValueError("far-field values do not match the direction grids")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite far-field values")

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weight per entry, w_m * w_e."""
        return np.outer(self.grid_m.weights, self.grid_e.weights)

    def norm(self) -> float:
        return weighted_norm(self.values, self.weights)

    def with_values(self, values: np.ndarray) -> "FarFieldData":
        return FarFieldData(values, self.grid_e, self.grid_m, self.k)


def weighted_norm(values: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sqrt(np.sum(weights * np.abs(values) ** 2)))


def solve_directions(grid_e: DirectionGrid, grid_m: DirectionGrid):
    """Angles to solve for and the positions of Gamma_e and -Gamma_m in them."""
    angles: list[float] = []
    vecs: list[np.ndarray] = []

    def index_of(a):
        v = np.array([np.cos(a), np.sin(a)])
        for i, w in enumerate(vecs):
            if np.max(np.abs(v - w)) < MATCH_TOL:
                return i
        angles.append(float(a))
        vecs.append(v)
        return len(angles) - 1

    idx_e = np.array([index_of(a) for a in grid_e.angles], dtype=int)
    idx_m = np.array([index_of(a + np.pi) for a in grid_m.angles], dtype=int)
    return np.array(angles), idx_e, idx_m


@dataclass(eq=False)
class ForwardState:
    """Forward solves for one index: fields, far field, quadrature values."""

    n: IndexField
    angles: np.ndarray
    scattered: np.ndarray  # (n_vertices, n_angles)
    utot_q: np.ndarray  # (n_quad, n_angles)
    far: FarFieldData


class ScatteringModel:
    """Far-field map for a fixed mesh, wave number and pair of grids."""

    def __init__(self, mesh: TriangleMesh, k: float, grid_e: DirectionGrid,
                 grid_m: DirectionGrid, with_reversed: bool = True):
        self.mesh = mesh
        self.k = float(k)
        self.grid_e = grid_e
        self.grid_m = grid_m
        self.space: FEMSpace = fem_space(mesh, k)
        if with_reversed:
            self.angles, self.idx_e, self.idx_m = solve_directions(grid_e, grid_m)
        else:
            self.angles = np.asarray(grid_e.angles, dtype=float)
            self.idx_e = np.arange(len(grid_e))
            self.idx_m = None

    def solve(self, n: IndexField) -> ForwardState:
        if n.mesh is not self.mesh:
            raise ValueError("index zoning does not live on this mesh")
        nv = n.element_values
        fac = self.space.factor(nv)
        us = fac.solve(self.angles)
        uq = total_at_quad(self.space, self.angles, us)
        vals = far_field_from_quad(self.space, nv, uq[:, self.idx_e], self.grid_m.angles)
        far = FarFieldData(vals, self.grid_e, self.grid_m, self.k)
        return ForwardState(n, self.angles, us, uq, far)

    def element_jacobian(self, state: ForwardState) -> np.ndarray:
        """Jacobian with one column per D element, shape (M_m*M_e, n_d)."""
        return self._aggregate(state, self._element_aggregator())

    def jacobian(self, state: ForwardState, zoning: Zoning,
                 columns: np.ndarray | None = None) -> np.ndarray:
        """Jacobian on the zone basis; optionally only the given zone columns."""
        if zoning.mesh is not self.mesh:
            raise ValueError("zoning does not live on this mesh")
        agg = self._zone_aggregator(zoning)
        if columns is not None:
            agg = agg[:, np.asarray(columns, dtype=int)]
        return self._aggregate(state, agg)

    def _element_aggregator(self):
        sp_ = self.space
        nq = len(sp_.quad_weights)
        return sp.csr_matrix(
            (self.k**2 * sp_.quad_weights, (np.arange(nq), sp_.quad_owner)),
            shape=(nq, self.mesh.n_d),
        )

    def _zone_aggregator(self, zoning: Zoning):
        sp_ = self.space
        nq = len(sp_.quad_weights)
        cols = zoning.labels[sp_.quad_owner]
        return sp.csr_matrix(
            (self.k**2 * sp_.quad_weights, (np.arange(nq), cols)),
            shape=(nq, zoning.n_zones),
        )

    def _aggregate(self, state: ForwardState, agg) -> np.ndarray:
        if self.idx_m is None:
            raise ValueError("model built without reversed measurement solves")
        ue = state.utot_q[:, self.idx_e]
        um = state.utot_q[:, self.idx_m]
        me, mm = ue.shape[1], um.shape[1]
        out = np.empty((mm * me, agg.shape[1]), dtype=complex)
        aggT = agg.T.tocsr()
        for m in range(mm):
            out[m * me:(m + 1) * me] = (aggT @ (ue * um[:, m:m + 1])).T
        return out


def evaluate_F(mesh: TriangleMesh, n: IndexField, k: float,
               grid_e: DirectionGrid, grid_m: DirectionGrid) -> FarFieldData:
    """Far-field data of ``n`` for all incidence/measurement pairs."""
    return ScatteringModel(mesh, k, grid_e, grid_m, with_reversed=False).solve(n).far


def assemble_jacobian(mesh: TriangleMesh, n: IndexField, k: float,
                      grid_e: DirectionGrid, grid_m: DirectionGrid) -> np.ndarray:
    """Jacobian of the far-field map with respect to the zone parameters."""
    model = ScatteringModel(mesh, k, grid_e, grid_m)
    return model.jacobian(model.solve(n), n.zoning)
