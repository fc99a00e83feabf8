"""End-to-end runs assembled from a configuration: meshes, data, strategies."""

from __future__ import annotations

import functools
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .forward import IndexField
from .localization import LocalizationMap, default_delta, localize
from .mesh import TriangleMesh, Zoning, build_disc_mesh, partition_zones, probe_points
from .reconstruction import gauss_newton
from .scattering import FarFieldData, ScatteringModel
from .strategies import (
    StrategyResult,
    adaptive_refinement,
    combined,
    project,
    selective_reconstruction,
)
from .synthetic import add_noise, element_zoning, make_truth, truth_index

logger = logging.getLogger(__name__)


@functools.lru_cache(maxsize=8)
def _mesh(radius, k, epw, buffer, pml, seed) -> TriangleMesh:
    return build_disc_mesh(radius, k, epw, pml_thickness=pml, buffer=buffer, seed=seed)


def reconstruction_mesh(cfg: ExperimentConfig) -> TriangleMesh:
    m = cfg.mesh
    return _mesh(m.radius, cfg.k, m.epw, m.buffer, m.pml, m.seed)


def data_mesh(cfg: ExperimentConfig) -> TriangleMesh:
    m, d = cfg.mesh, cfg.data
    return _mesh(m.radius, cfg.k, d.mesh_epw, m.buffer, m.pml, d.mesh_seed)


def synthesize(cfg: ExperimentConfig) -> tuple[FarFieldData, FarFieldData]:
    """Noise-free far fields of the scenario on the data mesh and the noisy copy."""
    grid_e, grid_m = cfg.grids()
    truth = make_truth(cfg.scenario, data_mesh(cfg), cfg.k, grid_e, grid_m)
    return truth, add_noise(truth, cfg.data.noise, cfg.data.noise_seed)


def initial_index(cfg: ExperimentConfig, zoning: Zoning) -> IndexField:
    """The scenario's reference index projected on ``zoning``."""
    mesh = zoning.mesh
    values = cfg.scenario.reference(mesh.centroids[mesh.d_elements])
    if zoning.n_zones == mesh.n_d:
        eta = np.empty(mesh.n_d, dtype=complex)
        eta[zoning.labels] = values
    else:
        eta = project(values, zoning)
    return IndexField(zoning, eta, cfg.real)


@dataclass
class RunOutcome:
    strategy: str
    result: StrategyResult
    mesh: TriangleMesh
    wall_time: float
    selection: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.result.trace.converged

    @property
    def final_error(self) -> float:
        return self.result.trace.final_error

    @property
    def n_params(self) -> int:
        return self.result.n_free


def reconstruct(cfg: ExperimentConfig, data: FarFieldData) -> RunOutcome:
    """Run the configured strategy against ``data``."""
    t0 = time.perf_counter()
    mesh = reconstruction_mesh(cfg)
    model = ScatteringModel(mesh, cfg.k, data.grid_e, data.grid_m)
    truth = truth_index(cfg.scenario, mesh)
    strategy = cfg.recon.strategy
    scfg = cfg.strategy_config()
    if strategy == "full":
        n = cfg.recon.zones or mesh.n_d
        zoning = partition_zones(mesh, n, cfg.recon.zone_seed)
        n0 = initial_index(cfg, zoning)
        res = gauss_newton(mesh, zoning, n0, data, cfg.gn_config(), truth=truth, model=model)
        result = StrategyResult(res.index, res.trace, [zoning], np.arange(zoning.n_zones))
    elif strategy == "selective":
        zoning = (element_zoning(mesh) if cfg.recon.zones == 0
                  else partition_zones(mesh, cfg.recon.zones, cfg.recon.zone_seed))
        result = selective_reconstruction(model, zoning, initial_index(cfg, zoning), data,
                                          scfg, truth=truth)
    elif strategy == "adaptive":
        zoning = partition_zones(mesh, cfg.recon.zones or 1, cfg.recon.zone_seed)
        result = adaptive_refinement(model, zoning, initial_index(cfg, zoning), data, scfg,
                                     truth=truth)
    elif strategy == "combined":
        zoning = element_zoning(mesh)
        result = combined(model, zoning, initial_index(cfg, zoning), data, scfg, truth=truth)
    else:  # guarded by config validation
        raise ValueError(strategy)
    wall = time.perf_counter() - t0
    logger.info("%s: N=%d error %.4f in %.1fs", strategy, result.n_free,
                result.trace.final_error, wall)
    return RunOutcome(strategy, result, mesh, wall, result.selection)


def localization_map(cfg: ExperimentConfig, data: FarFieldData,
                     reference: str = "initial") -> LocalizationMap:
    """Indicator of ``data`` against the initial guess or the exact index."""
    mesh = reconstruction_mesh(cfg)
    zoning = element_zoning(mesh)
    if reference == "initial":
        n = initial_index(cfg, zoning)
    elif reference == "truth":
        n = truth_index(cfg.scenario, mesh)
        n = IndexField(zoning, n.eta, cfg.real)
    else:
        raise ValueError(f"unknown reference {reference!r}")
    model = ScatteringModel(mesh, cfg.k, data.grid_e, data.grid_m)
    state = model.solve(n)
    delta = cfg.strategy.delta if cfg.strategy.delta is not None else default_delta(cfg.data.noise)
    variant = None if cfg.strategy.variant == "auto" else cfg.strategy.variant
    return localize(model, state, data, probe_points(mesh), delta, variant)

