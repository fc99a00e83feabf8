"""Shared reference set-up for the experiment scripts.

k = 5, unit disc, reconstruction mesh at 20 elements per wavelength (seed 7),
data on an independent mesh at 40 elements per wavelength (seed 101).
"""

from __future__ import annotations

import argparse
import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from indexrecon.forward import DirectionGrid, IndexField
from indexrecon.mesh import TriangleMesh, build_disc_mesh
from indexrecon.scattering import FarFieldData, ScatteringModel
from indexrecon.strategies import project
from indexrecon.synthetic import (
    Scenario,
    add_noise,
    element_zoning,
    get_scenario,
    make_truth,
    truth_index,
)

K = 5.0


@dataclass
class Setup:
    mesh: TriangleMesh
    data_mesh: TriangleMesh
    scenario: Scenario
    grid_e: DirectionGrid
    grid_m: DirectionGrid
    model: ScatteringModel
    truth_data: FarFieldData
    truth: IndexField

    def data(self, noise: float, seed: int) -> FarFieldData:
        return add_noise(self.truth_data, noise, seed)

    def n0(self, zoning=None) -> IndexField:
        """Reference index on ``zoning`` (default: one zone per element)."""
        z = element_zoning(self.mesh) if zoning is None else zoning
        ref = self.scenario.reference(self.mesh.centroids[self.mesh.d_elements])
        eta = ref if zoning is None else project(ref, z)
        return IndexField(z, eta, self.scenario.real)

    @property
    def omega(self) -> np.ndarray:
        return self.scenario.perturbed(self.mesh.centroids[self.mesh.d_elements])


def build(scenario: str = "disc-in-disc", m_e: int = 30, m_m: int = 30,
          m_stop: float = 2 * np.pi, epw: float = 20, data_epw: float = 40) -> Setup:
    s = get_scenario(scenario)
    mesh = build_disc_mesh(1.0, K, epw, seed=7)
    dmesh = build_disc_mesh(1.0, K, data_epw, seed=101)
    ge, gm = DirectionGrid.uniform(m_e), DirectionGrid.uniform(m_m, 0.0, m_stop)
    model = ScatteringModel(mesh, K, ge, gm)
    return Setup(mesh, dmesh, s, ge, gm, model, make_truth(s, dmesh, K, ge, gm),
                 truth_index(s, mesh))


def parser(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--seeds", type=int, nargs="+", default=[3], help="noise seeds")
    p.add_argument("--noise", type=float, nargs="+", default=[0.02])
    p.add_argument("-o", "--output", type=Path, default=Path("results"))
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def setup_logging(verbose: bool) -> None:
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


def write_rows(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    for r in rows:
        print("  ".join(f"{k}={v}" for k, v in r.items()))
    print(f"-> {path}")
