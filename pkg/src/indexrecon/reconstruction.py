"""Regularized Gauss-Newton for the piecewise-constant index.

Each iteration solves

    (J^H W J + mu A) (eta_{p+1} - eta_0) = -J^H W (F(n_p) - u_eps - J (eta_p - eta_0))

with ``W`` the direction-grid weights, ``A`` the zone areas (the L2(D)
Gram matrix of the zone basis) and ``mu = c2 / (2 c1)``. Only the free
zones are updated; the others stay at their initial values.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .forward import IndexField
from .mesh import TriangleMesh, Zoning
from .scattering import FarFieldData, ForwardState, ScatteringModel

logger = logging.getLogger(__name__)


class ReconstructionError(RuntimeError):
    pass


@dataclass
class GNConfig:
    c2: float = 1e-2
    stop_tol: float = 1e-4
    max_iters: int = 20
    c1: float | None = None  # default 1/||u_eps||^2
    real_constraint: bool = False

    def __post_init__(self):
        if self.c2 <= 0 or self.stop_tol <= 0:
            raise ValueError("c2 and stop_tol must be positive")
        if self.c1 is not None and self.c1 <= 0:
            raise ValueError("c1 must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class GNRecord:
    iteration: int
    fidelity: float
    step: float
    rel_error: float = float("nan")
    eta: np.ndarray | None = field(default=None, repr=False)


@dataclass
class GNTrace:
    """Per-iteration history; ``initial_fidelity`` is that of the start point."""

    records: list[GNRecord] = field(default_factory=list)
    initial_fidelity: float = float("nan")
    initial_error: float = float("nan")
    converged: bool = False

    def __len__(self) -> int:
        return len(self.records)

    @property
    def final_fidelity(self) -> float:
        return self.records[-1].fidelity if self.records else self.initial_fidelity

    @property
    def final_error(self) -> float:
        return self.records[-1].rel_error if self.records else self.initial_error

    def extend(self, other: "GNTrace") -> None:
        offset = self.records[-1].iteration if self.records else 0
        for r in other.records:
            self.records.append(GNRecord(r.iteration + offset, r.fidelity, r.step,
                                         r.rel_error, r.eta))
        self.converged = other.converged

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "fidelity", "step", "rel_error"])
            for r in self.records:
                w.writerow([r.iteration, repr(r.fidelity), repr(r.step), repr(r.rel_error)])

    @classmethod
    def from_csv(cls, path) -> "GNTrace":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        recs = [GNRecord(int(r["iter"]), float(r["fidelity"]), float(r["step"]),
                         float(r["rel_error"])) for r in rows]
        return cls(records=recs)


@dataclass
class GNResult:
    index: IndexField
    trace: GNTrace
    state: ForwardState

    def __iter__(self):
        yield self.index
        yield self.trace


def l2_norm(zoning: Zoning, eta: np.ndarray) -> float:
    """L2(D) norm of the piecewise-constant function with zone values eta."""
    return float(np.sqrt(np.sum(zoning.zone_areas * np.abs(eta) ** 2)))


def relative_error(n: IndexField, truth) -> float:
    """Relative L2(D) error; ``truth`` is an IndexField on the same mesh or
    an array of values per D element."""
    mesh = n.mesh
    t = truth.element_values if isinstance(truth, IndexField) else np.asarray(truth)
    if len(t) != mesh.n_d:
        raise ValueError("truth must give one value per D element")
    a = mesh.areas[mesh.d_elements]
    num = np.sum(a * np.abs(n.element_values - t) ** 2)
    den = np.sum(a * np.abs(t) ** 2)
    return float(np.sqrt(num / den))


def normal_equations(J: np.ndarray, w: np.ndarray, b: np.ndarray, reg: np.ndarray,
                     real: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Regularized normal equations (J* W J + diag(reg)) x = -J* W b.

    With ``real`` the system is restricted to real updates: real parts of
    the Hermitian matrix and of the right-hand side.
    """
    JhW = J.conj().T * w[None, :]
    a = JhW @ J
    rhs = -JhW @ b
    if real:
        a, rhs = a.real, rhs.real
    return a + np.diag(reg), rhs


def gauss_newton(
    mesh: TriangleMesh,
    zoning: Zoning,
    n0: IndexField,
    data: FarFieldData,
    cfg: GNConfig,
    *,
    free: np.ndarray | None = None,
    truth=None,
    model: ScatteringModel | None = None,
    start: IndexField | None = None,
    state: ForwardState | None = None,
    keep_snapshots: bool = False,
) -> GNResult:
    """Run Gauss-Newton from ``start`` (default ``n0``), regularized towards ``n0``.

    Parameters
    ----------
    free : indices of the zones to update (default: all)
    truth : reference index (IndexField or per-element values) for e_p
    model : reuse an existing ScatteringModel for the data grids
    state : forward solves already computed at ``start``
    """
    if n0.zoning is not zoning or (start is not None and start.zoning is not zoning):
        raise ValueError("indices must be defined on the given zoning")
    if zoning.mesh is not mesh:
        raise ValueError("zoning does not live on this mesh")
    if model is None:
        model = ScatteringModel(mesh, data.k, data.grid_e, data.grid_m)
    if len(model.grid_e) != len(data.grid_e) or len(model.grid_m) != len(data.grid_m):
        raise ValueError("model grids and data grids differ")
    real = cfg.real_constraint or n0.real
    free = np.arange(zoning.n_zones) if free is None else np.asarray(free, dtype=int)
    c1 = cfg.c1 if cfg.c1 is not None else 1.0 / data.norm() ** 2
    mu = cfg.c2 / (2.0 * c1)
    w = data.weights.ravel()
    areas = zoning.zone_areas
    eta0 = n0.eta.copy()
    current = start if start is not None else n0
    eta = current.eta.copy()
    if state is None or state.n is not current:
        state = model.solve(current)

    def err(idx):
        return relative_error(idx, truth) if truth is not None else float("nan")

    def fidelity(st):
        return c1 * float(np.sum(w * np.abs(st.far.values.ravel() - data.values.ravel()) ** 2))

    trace = GNTrace(initial_fidelity=fidelity(state), initial_error=err(current))
    for it in range(1, cfg.max_iters + 1):
        r = state.far.values.ravel() - data.values.ravel()
        if not np.all(np.isfinite(r)):
            raise ReconstructionError("non-finite residual")
        J = model.jacobian(state, zoning, free)
        x_p = eta[free] - eta0[free]
        a, rhs = normal_equations(J, w, r - J @ x_p, mu * areas[free], real)
        try:
            if real:
                x = la.solve(a, rhs, assume_a="pos").astype(complex)
            else:
                x = la.solve(a, rhs, assume_a="her")
        except (la.LinAlgError, ValueError) as exc:
            raise ReconstructionError(f"normal equations failed: {exc}") from exc
        new_eta = eta.copy()
        new_eta[free] = eta0[free] + x
        if not np.all(np.isfinite(new_eta)):
            raise ReconstructionError("non-finite update")
        step = l2_norm(zoning, new_eta - eta) / (1.0 + l2_norm(zoning, eta))
        eta = new_eta
        current = n0.with_eta(eta)
        state = model.solve(current)
        rec = GNRecord(it, fidelity(state), step, err(current),
                       eta.copy() if keep_snapshots else None)
        trace.records.append(rec)
        logger.info("GN it %d: fidelity %.4e step %.3e error %.4f",
                    it, rec.fidelity, step, rec.rel_error)
        if step < cfg.stop_tol:
            trace.converged = True
            break
    return GNResult(current, trace, state)
