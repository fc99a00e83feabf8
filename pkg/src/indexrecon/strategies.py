"""Reconstruction strategies driven by defect localization.

* selective: reconstruct only the zones the localization flags,
* adaptive: split the most defective zone in four and reconstruct again,
* combined: selection first, then adaptive refinement inside the selection.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .forward import IndexField
from .localization import DegenerateDataError, LocalizationMap, default_delta, localize
from .mesh import MIN_SPLIT_SIZE, MIN_ZONE_SIZE, Zoning, probe_points, split_zone
from .reconstruction import GNConfig, GNResult, GNTrace, gauss_newton
from .scattering import FarFieldData, ForwardState, ScatteringModel

logger = logging.getLogger(__name__)


class EmptySelectionError(ValueError):
    """No zone selected, or no defect distinguishable from the noise."""


@dataclass
class StrategyConfig:
    threshold: float = 0.1
    n_max: int = 76
    min_split_size: int = MIN_SPLIT_SIZE
    min_zone_size: int = MIN_ZONE_SIZE
    gn: GNConfig = field(default_factory=GNConfig)
    noise: float = 0.02
    delta: float | None = None
    variant: str | None = "singular"
    detect_factor: float = 2.0
    seed: int = 0
    anchor: str = "initial"

    def __post_init__(self):
        if self.anchor not in ("initial", "previous"):
            raise ValueError("anchor must be 'initial' or 'previous'")
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie in (0, 1)")
        if self.n_max < 4:
            raise ValueError("n_max must be >= 4")

    @property
    def picard_delta(self) -> float:
        return default_delta(self.noise) if self.delta is None else self.delta


@dataclass
class StrategyResult:
    index: IndexField
    trace: GNTrace
    zonings: list[Zoning] = field(default_factory=list)
    free: np.ndarray | None = None
    selection: np.ndarray | None = None  # D-local elements selected
    splits: list[np.ndarray] = field(default_factory=list)  # elements of each split zone
    maps: list[LocalizationMap] = field(default_factory=list)

    @property
    def n_free(self) -> int:
        return len(self.free) if self.free is not None else self.index.zoning.n_zones


def zone_indicator(lmap: LocalizationMap, zoning: Zoning) -> np.ndarray:
    """Per-zone maximum of the normalized indicator (probes = D centroids)."""
    if len(lmap.probes) != zoning.mesh.n_d:
        raise ValueError("probes must be the D-element centroids of the zoning's mesh")
    s = lmap.normalized
    out = np.full(zoning.n_zones, -np.inf)
    np.maximum.at(out, zoning.labels, s)
    return out


def select_zones(lmap: LocalizationMap, zoning: Zoning, threshold: float) -> np.ndarray:
    """Zones whose indicator maximum exceeds ``threshold`` times the largest.

    The zones attaining the maximum are always kept, so ``threshold = 1``
    returns the argmax zones rather than nothing.
    """
    si = zone_indicator(lmap, zoning)
    top = si.max()
    sel = np.flatnonzero((si > threshold * top) | (si >= top))
    if len(sel) == 0:
        raise EmptySelectionError(f"no zone above threshold {threshold}")
    return sel


def check_detectable(data: FarFieldData, state: ForwardState, cfg: StrategyConfig) -> None:
    gap = np.sqrt(np.sum(data.weights * np.abs(data.values - state.far.values) ** 2))
    if gap == 0:
        raise DegenerateDataError("data equal the reference: no defect")
    if gap <= cfg.detect_factor * cfg.noise * data.norm():
        raise EmptySelectionError(
            f"data misfit {gap / data.norm():.4f} within {cfg.detect_factor} x noise "
            f"level: no detectable defect"
        )


def _localize(model, state, data, cfg):
    return localize(model, state, data, probe_points(model.mesh), cfg.picard_delta, cfg.variant)


def selective_reconstruction(model: ScatteringModel, zoning: Zoning, n0: IndexField,
                             data: FarFieldData, cfg: StrategyConfig,
                             truth=None) -> StrategyResult:
    """Localize against ``n0``, then run Gauss-Newton on the selected zones only."""
    state = model.solve(n0)
    check_detectable(data, state, cfg)
    lmap = _localize(model, state, data, cfg)
    free = select_zones(lmap, zoning, cfg.threshold)
    logger.info("selective: %d of %d zones selected", len(free), zoning.n_zones)
    res = gauss_newton(model.mesh, zoning, n0, data, cfg.gn, free=free, truth=truth,
                       model=model, state=state)
    elements = np.flatnonzero(np.isin(zoning.labels, free))
    return StrategyResult(res.index, res.trace, [zoning], free, elements, maps=[lmap])


def _duplicate(eta: np.ndarray, i: int) -> np.ndarray:
    return np.concatenate([eta, np.full(3, eta[i])])


def project(values: np.ndarray, zoning: Zoning) -> np.ndarray:
    """Area-weighted zone means of per-element values (L2 projection)."""
    mesh = zoning.mesh
    a = mesh.areas[mesh.d_elements]
    acc = np.zeros(zoning.n_zones, dtype=complex)
    np.add.at(acc, zoning.labels, a * values)
    return acc / zoning.zone_areas


def adaptive_refinement(model: ScatteringModel, zoning: Zoning, n0: IndexField,
                        data: FarFieldData, cfg: StrategyConfig, truth=None,
                        free: np.ndarray | None = None,
                        state: ForwardState | None = None,
                        base: np.ndarray | None = None) -> StrategyResult:
    """Split the most defective zone in four, reconstruct, repeat.

    Stops when another split would exceed ``cfg.n_max`` free zones or no
    free zone has more than ``cfg.min_split_size`` elements. Each inner
    Gauss-Newton run starts from the previous iterate; with
    ``cfg.anchor == "initial"`` it stays regularized towards ``n0``
    (projected on the current zoning), with ``"previous"`` towards the
    previous iterate. ``base`` gives per-element anchor values when they
    differ from ``n0`` (default ``n0`` itself).
    """
    if n0.zoning is not zoning:
        raise ValueError("n0 must live on the zoning")
    free = np.arange(zoning.n_zones) if free is None else np.asarray(free, dtype=int)
    current = n0
    base = n0.element_values if base is None else np.asarray(base)
    if state is None:
        state = model.solve(current)
    trace = GNTrace(initial_fidelity=np.nan)
    history = [zoning]
    splits: list[np.ndarray] = []
    maps: list[LocalizationMap] = []
    loop = 0
    while len(free) + 3 <= cfg.n_max:
        sizes = zoning.sizes[free]
        cand = free[sizes > cfg.min_split_size]
        if len(cand) == 0:
            break
        lmap = _localize(model, state, data, cfg)
        maps.append(lmap)
        si = zone_indicator(lmap, zoning)[cand]
        target = int(cand[np.flatnonzero(si == si.max()).min()])
        splits.append(zoning.zones[target].copy())
        old_n = zoning.n_zones
        zoning = split_zone(zoning, target, seed=cfg.seed + loop)
        free = np.concatenate([free, np.arange(old_n, old_n + 3)])
        eta = _duplicate(current.eta, target)
        current = IndexField(zoning, eta, current.real)
        if not np.array_equal(current.element_values, state.n.element_values):
            raise AssertionError("splitting must not change the index")
        state.n = current
        if cfg.anchor == "initial":
            anchor = IndexField(zoning, project(base, zoning), current.real)
        else:
            anchor = current
        res = gauss_newton(model.mesh, zoning, anchor, data, cfg.gn, free=free,
                           truth=truth, model=model, start=current, state=state)
        if loop == 0:
            trace.initial_fidelity = res.trace.initial_fidelity
            trace.initial_error = res.trace.initial_error
        trace.extend(res.trace)
        current, state = res.index, res.state
        history.append(zoning)
        loop += 1
        logger.info("refinement %d: N=%d, error %.4f", loop, len(free), res.trace.final_error)
    return StrategyResult(current, trace, history, free, splits=splits, maps=maps)


def combined(model: ScatteringModel, zoning: Zoning, n0: IndexField, data: FarFieldData,
             cfg: StrategyConfig, truth=None) -> StrategyResult:
    """Selection on ``zoning`` against ``n0``, then adaptive refinement that
    starts from one zone covering the selected elements; everything else
    stays at ``n0``."""
    mesh = model.mesh
    state = model.solve(n0)
    check_detectable(data, state, cfg)
    lmap = _localize(model, state, data, cfg)
    sel_zones = select_zones(lmap, zoning, cfg.threshold)
    selected = np.flatnonzero(np.isin(zoning.labels, sel_zones))
    rest = np.flatnonzero(~np.isin(zoning.labels, sel_zones))
    labels = np.empty(mesh.n_d, dtype=int)
    labels[selected] = 0
    labels[rest] = 1 + np.arange(len(rest))
    root = Zoning(labels, 1 + len(rest), mesh)
    values = n0.element_values
    a = mesh.areas[mesh.d_elements]
    root_value = np.sum(a[selected] * values[selected]) / np.sum(a[selected])
    eta = np.concatenate([[root_value], values[rest]])
    start = IndexField(root, eta, n0.real)
    if not np.allclose(start.element_values, values):
        state = None
    else:
        state.n = start
    res = adaptive_refinement(model, root, start, data, cfg, truth=truth,
                              free=np.array([0]), state=state, base=values)
    res.selection = selected
    res.maps.insert(0, lmap)
    return res
