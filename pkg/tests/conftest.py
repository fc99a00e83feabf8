import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from indexrecon.forward import DirectionGrid, IndexField  # noqa: E402
from indexrecon.mesh import build_disc_mesh  # noqa: E402
from indexrecon.scattering import ScatteringModel  # noqa: E402
from indexrecon.synthetic import add_noise, element_zoning, get_scenario, make_truth  # noqa: E402

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture]
)
settings.load_profile("default")

K = 5.0


@pytest.fixture(scope="session")
def coarse_mesh():
    """Small reconstruction mesh (10 elements per wavelength)."""
    return build_disc_mesh(1.0, K, 10, seed=3)


@pytest.fixture(scope="session")
def coarse_data_mesh():
    return build_disc_mesh(1.0, K, 14, seed=11)


@pytest.fixture(scope="session")
def grid12():
    return DirectionGrid.uniform(12)


@pytest.fixture(scope="session")
def coarse_model(coarse_mesh, grid12):
    return ScatteringModel(coarse_mesh, K, grid12, grid12)


@pytest.fixture(scope="session")
def coarse_truth(coarse_data_mesh, grid12):
    return make_truth(get_scenario("disc-in-disc"), coarse_data_mesh, K, grid12, grid12)


@pytest.fixture(scope="session")
def coarse_data(coarse_truth):
    return add_noise(coarse_truth, 0.02, seed=5)


@pytest.fixture(scope="session")
def coarse_n0(coarse_mesh):
    return IndexField.constant(element_zoning(coarse_mesh), 1.3, real=True)


# -- reference-scale set-up shared by the acceptance suite -----------------------

@pytest.fixture(scope="session")
def ref_mesh():
    return build_disc_mesh(1.0, K, 20, seed=7)


@pytest.fixture(scope="session")
def ref_data_mesh():
    return build_disc_mesh(1.0, K, 40, seed=101)


@pytest.fixture(scope="session")
def grid30():
    return DirectionGrid.uniform(30)


@pytest.fixture(scope="session")
def ref_model(ref_mesh, grid30):
    return ScatteringModel(ref_mesh, K, grid30, grid30)


@pytest.fixture(scope="session")
def ref_truth(ref_data_mesh, grid30):
    return make_truth(get_scenario("disc-in-disc"), ref_data_mesh, K, grid30, grid30)


@pytest.fixture(scope="session")
def ref_data(ref_truth):
    return add_noise(ref_truth, 0.02, seed=3)


@pytest.fixture(scope="session")
def ref_omega(ref_mesh):
    pts = ref_mesh.centroids[ref_mesh.d_elements]
    return get_scenario("disc-in-disc").perturbed(pts)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from report import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
