"""Scenario definitions, exact far fields on a data mesh, calibrated noise."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .forward import DirectionGrid, IndexField
from .mesh import TriangleMesh, Zoning
from .scattering import FarFieldData, ScatteringModel


@dataclass(frozen=True)
class Disc:
    center: tuple[float, float]
    radius: float
    value: complex

    def contains(self, pts: np.ndarray) -> np.ndarray:
        c = np.asarray(self.center)
        return np.sum((pts - c) ** 2, axis=1) < self.radius**2


@dataclass(frozen=True)
class Scenario:
    """Index built from a background value and overlaid discs.

    ``known`` discs belong to the reference state; ``perturbations`` are
    the defects to be found. Later discs override earlier ones.
    """

    name: str
    background: complex
    known: tuple[Disc, ...] = ()
    perturbations: tuple[Disc, ...] = ()
    real: bool = True

    def truth(self, pts: np.ndarray) -> np.ndarray:
        out = np.full(len(pts), self.background, dtype=complex)
        for d in self.known + self.perturbations:
            out[d.contains(pts)] = d.value
        return out

    def reference(self, pts: np.ndarray) -> np.ndarray:
        """The state before the perturbations: initial guess n0."""
        out = np.full(len(pts), self.background, dtype=complex)
        for d in self.known:
            out[d.contains(pts)] = d.value
        return out

    def perturbed(self, pts: np.ndarray) -> np.ndarray:
        mask = np.zeros(len(pts), dtype=bool)
        for d in self.perturbations:
            mask |= d.contains(pts)
        return mask


# The complex multi-zone stand-in: absorbing background with two known
# inclusions and an absorbing central perturbation.
SCENARIOS: dict[str, Scenario] = {
    "disc-in-disc": Scenario(
        "disc-in-disc", 1.3, perturbations=(Disc((0.3, 0.3), 0.3, 1.6),)
    ),
    "homogeneous": Scenario("homogeneous", 1.3),
    "complex-multizone": Scenario(
        "complex-multizone",
        1.2 + 0.05j,
        known=(
            Disc((-0.45, 0.4), 0.3, 1.45 + 0.1j),
            Disc((0.45, -0.45), 0.3, 1.1 + 0.15j),
        ),
        perturbations=(Disc((0.0, 0.0), 0.3, 1.6 + 0.25j),),
        real=False,
    ),
}


class ScenarioError(KeyError):
    pass


def get_scenario(name: str, extra: dict[str, Scenario] | None = None) -> Scenario:
    table = dict(SCENARIOS)
    if extra:
        table.update(extra)
    try:
        return table[name]
    except KeyError:
        raise ScenarioError(f"unknown scenario {name!r}") from None


def element_zoning(mesh: TriangleMesh) -> Zoning:
    return Zoning(np.arange(mesh.n_d), mesh.n_d, mesh)


def truth_index(scenario: Scenario, mesh: TriangleMesh) -> IndexField:
    """Per-element index with each D element sampled at its centroid."""
    pts = mesh.centroids[mesh.d_elements]
    return IndexField(element_zoning(mesh), scenario.truth(pts), real=scenario.real)


def make_truth(scenario: Scenario | str, data_mesh: TriangleMesh, k: float,
               grid_e: DirectionGrid, grid_m: DirectionGrid) -> FarFieldData:
    """Exact far fields of the scenario index on ``data_mesh``."""
    if isinstance(scenario, str):
        scenario = get_scenario(scenario)
    n = truth_index(scenario, data_mesh)
    model = ScatteringModel(data_mesh, k, grid_e, grid_m, with_reversed=False)
    return model.solve(n).far


def add_noise(u: FarFieldData, eps: float, seed: int = 0) -> FarFieldData:
    """Add complex Gaussian noise rescaled to relative weighted norm ``eps``."""
    if eps < 0:
        raise ValueError("noise level must be non-negative")
    if eps == 0:
        return u.with_values(u.values.copy())
    rng = np.random.default_rng(seed)
    shape = u.values.shape
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    w = u.weights
    scale = eps * u.norm() / np.sqrt(np.sum(w * np.abs(noise) ** 2))
    return u.with_values(u.values + scale * noise)
