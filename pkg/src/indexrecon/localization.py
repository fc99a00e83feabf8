"""Defect localization from two far-field data sets.

With F the far-field operators of the reference index n and of the
measured state n*, the indicator is

    S(z) = ( sum_j |<conj(u_n(., z)), psi_j>|^2 / sigma_j )^(-1)

where (sigma_j, psi_j) is either an eigensystem of
W# = |W + W*| + |W - W*|, W = (I + 2 i k |gamma|^2 F_n)(F_* - F_n), or a
right-singular system of F_* - F_n. The second form accepts partial
apertures, Gamma_e != Gamma_m, and complex indices. S is large where n and
n* differ and vanishes elsewhere; the series is truncated at sigma_j >
delta sigma_1 because noise swamps the small singular values.

Inner products on direction space carry the grid weights; the spectral
vectors are orthonormal for that weighted product.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .forward import gamma, interpolation_matrix
from .mesh import ProbePoints
from .scattering import FarFieldData, ForwardState, ScatteringModel

EIGEN = "eigensystem"
SINGULAR = "singular"


class DegenerateDataError(ValueError):
    """No spectral value above the cutoff: no detectable defect."""


@dataclass(frozen=True)
class SpectralSystem:
    values: np.ndarray  # descending, >= 0
    vectors: np.ndarray  # columns psi_j, weighted-orthonormal
    weights: np.ndarray  # direction weights of the vectors' space
    variant: str


@dataclass(frozen=True, eq=False)
class LocalizationMap:
    probes: ProbePoints
    raw: np.ndarray
    truncation: int
    variant: str = EIGEN

    @property
    def normalized(self) -> np.ndarray:
        return normalize(self.raw)

    def superlevel(self, threshold: float) -> np.ndarray:
        """Probe indices where the normalized indicator is >= threshold."""
        return np.flatnonzero(self.normalized >= threshold)

    def to_csv(self, path) -> None:
        s = self.normalized
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y", "S", "S_normalized"])
            for (x, y), a, b in zip(self.probes.points, self.raw, s):
                w.writerow([repr(float(x)), repr(float(y)), repr(float(a)), repr(float(b))])


def read_localization_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    pts = np.array([[float(r["x"]), float(r["y"])] for r in rows])
    raw = np.array([float(r["S"]) for r in rows])
    nrm = np.array([float(r["S_normalized"]) for r in rows])
    return pts, raw, nrm


def normalize(values: np.ndarray) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    return v / v.max()


def farfield_operator(u: FarFieldData) -> np.ndarray:
    """Quadrature matrix of ``(F g)(xhat) = int u_inf(theta, xhat) g(theta)``."""
    return u.values * u.grid_e.weights[None, :]


def build_W(F_truth: np.ndarray, F_n: np.ndarray, k: float, gam: complex | None = None) -> np.ndarray:
    if F_truth.shape != F_n.shape or F_n.shape[0] != F_n.shape[1]:
        raise ValueError("W needs square far-field operators of equal size")
    g2 = abs(gamma(k) if gam is None else gam) ** 2
    eye = np.eye(F_n.shape[0])
    return (eye + 2j * k * g2 * F_n) @ (F_truth - F_n)


def _abs_hermitian(h: np.ndarray) -> np.ndarray:
    lam, v = la.eigh(h)
    return (v * np.abs(lam)) @ v.conj().T


def w_sharp(W: np.ndarray) -> np.ndarray:
    """``|W + W*| + |W - W*|`` with ``|L| = (L* L)^(1/2)``."""
    W = np.asarray(W, dtype=complex)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("W must be square")
    herm = W + W.conj().T
    skew = W - W.conj().T
    # |skew| = |-i skew| and -i skew is Hermitian
    out = _abs_hermitian(herm) + _abs_hermitian(-1j * skew)
    return 0.5 * (out + out.conj().T)


def spectral_system(A: np.ndarray, variant: str, weights_in: np.ndarray | None = None,
                    weights_out: np.ndarray | None = None) -> SpectralSystem:
    """Eigensystem of a Hermitian PSD operator or right-singular system.

    ``A`` is a matrix acting on coefficient vectors over a direction grid
    with quadrature ``weights_in`` (and ``weights_out`` for the range,
    singular variant). Uniform weights reduce to plain decompositions.
    """
    A = np.asarray(A, dtype=complex)
    m_in = A.shape[1]
    wi = np.ones(m_in) if weights_in is None else np.asarray(weights_in, float)
    si = np.sqrt(wi)
    if variant == EIGEN:
        if A.shape[0] != A.shape[1]:
            raise ValueError("eigensystem variant needs a square operator")
        if not np.allclose(wi, wi[0]):
            raise ValueError("eigensystem variant needs uniform weights")
        lam, v = la.eigh(0.5 * (A + A.conj().T))
        order = np.argsort(lam)[::-1]
        vals = np.clip(lam[order], 0.0, None)
        vecs = v[:, order] / si[:, None]
        return SpectralSystem(vals, vecs, wi, EIGEN)
    if variant == SINGULAR:
        wo = np.ones(A.shape[0]) if weights_out is None else np.asarray(weights_out, float)
        At = np.sqrt(wo)[:, None] * A / si[None, :]
        try:
            _, s, vh = la.svd(At, full_matrices=False)
        except la.LinAlgError as exc:
            raise ValueError(f"SVD failed: {exc}") from exc
        vecs = vh.conj().T / si[:, None]
        return SpectralSystem(s, vecs, wi, SINGULAR)
    raise ValueError(f"unknown variant {variant!r}")


def weighted_spectral_operator(data: FarFieldData, reference: FarFieldData, variant: str):
    """The operator whose spectrum drives the indicator, and its weights."""
    if variant == EIGEN:
        if not (data.grid_e.full and data.grid_m.full and len(data.grid_e) == len(data.grid_m)):
            raise ValueError("eigensystem variant needs Gamma_e = Gamma_m = full circle")
        W = build_W(farfield_operator(data), farfield_operator(reference), data.k)
        return w_sharp(W), None
    diff = data.values - reference.values
    # operator L2(Gamma_e) -> L2(Gamma_m) with kernel u*_inf - u_inf
    return diff * data.grid_e.weights[None, :], data.grid_m.weights


def choose_variant(data: FarFieldData, real: bool) -> str:
    full = data.grid_e.full and data.grid_m.full and len(data.grid_e) == len(data.grid_m)
    return EIGEN if (full and real) else SINGULAR


def default_delta(noise: float) -> float:
    return max(1e-4, noise**2)


def indicator(system: SpectralSystem, test_fields: np.ndarray, probes: ProbePoints,
              delta: float) -> LocalizationMap:
    """Truncated Picard indicator.

    ``test_fields[p, e]`` is the total field u_n(theta_e, z_p) at probe p.
    """
    sig = system.values
    if len(sig) == 0 or not sig[0] > 0:
        raise DegenerateDataError("no positive spectral value: no detectable defect")
    keep = np.flatnonzero(sig > delta * sig[0])
    if len(keep) == 0:
        raise DegenerateDataError("all spectral values below the cutoff")
    psi = system.vectors[:, keep]
    coef = (test_fields * system.weights[None, :]) @ psi
    series = np.sum(np.abs(coef) ** 2 / sig[keep][None, :], axis=1)
    return LocalizationMap(probes, 1.0 / series, len(keep), system.variant)


def probe_fields(model: ScatteringModel, state: ForwardState, probes: ProbePoints) -> np.ndarray:
    """u_n(theta, z) for theta in Gamma_e at each probe (exact incident part)."""
    ang = state.angles[model.idx_e]
    dirs = np.column_stack([np.cos(ang), np.sin(ang)])
    inc = np.exp(1j * model.k * probes.points @ dirs.T)
    P = interpolation_matrix(model.mesh, probes)
    return inc + P @ state.scattered[:, model.idx_e]


def localize(model: ScatteringModel, state: ForwardState, data: FarFieldData,
             probes: ProbePoints, delta: float, variant: str | None = None) -> LocalizationMap:
    """Indicator comparing the data with the reference solved in ``state``."""
    if variant is None:
        variant = choose_variant(data, state.n.real)
    if np.all(data.values == state.far.values):
        raise DegenerateDataError("data equal the reference: no defect")
    op, wout = weighted_spectral_operator(data, state.far, variant)
    system = spectral_system(op, variant, data.grid_e.weights, wout)
    return indicator(system, probe_fields(model, state, probes), probes, delta)
