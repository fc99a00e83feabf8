import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indexrecon.forward import DirectionGrid
from indexrecon.synthetic import (
    SCENARIOS,
    Disc,
    ScenarioError,
    add_noise,
    get_scenario,
    make_truth,
    truth_index,
)

K = 5.0


def _rel_gap(a, b):
    return a.with_values(a.values - b.values).norm() / b.norm()


@settings(max_examples=50)
@given(eps=st.floats(1e-4, 0.5), seed=st.integers(0, 2**32 - 1))
def test_noise_calibration_exact(coarse_truth, eps, seed):
    noisy = add_noise(coarse_truth, eps, seed)
    assert abs(_rel_gap(noisy, coarse_truth) - eps) <= 1e-12


def test_noise_zero_is_identity(coarse_truth):
    out = add_noise(coarse_truth, 0.0, seed=3)
    assert np.array_equal(out.values, coarse_truth.values)
    assert out.values is not coarse_truth.values


def test_noise_seeds(coarse_truth):
    a = add_noise(coarse_truth, 0.02, 1)
    b = add_noise(coarse_truth, 0.02, 2)
    c = add_noise(coarse_truth, 0.02, 1)
    assert not np.array_equal(a.values, b.values)
    assert np.array_equal(a.values, c.values)
    assert np.isclose(_rel_gap(a, coarse_truth), _rel_gap(b, coarse_truth), rtol=0, atol=1e-12)


def test_negative_noise_rejected(coarse_truth):
    with pytest.raises(ValueError):
        add_noise(coarse_truth, -0.01)


def test_unknown_scenario():
    with pytest.raises(ScenarioError):
        get_scenario("no-such-scenario")
    custom = {"x": SCENARIOS["homogeneous"]}
    assert get_scenario("x", custom).background == 1.3


def test_scenario_layers():
    s = get_scenario("complex-multizone")
    pts = np.array([[0.0, 0.0], [-0.45, 0.4], [0.45, -0.45], [0.9, 0.0]])
    assert np.allclose(s.truth(pts), [1.6 + 0.25j, 1.45 + 0.1j, 1.1 + 0.15j, 1.2 + 0.05j])
    assert np.allclose(s.reference(pts), [1.2 + 0.05j, 1.45 + 0.1j, 1.1 + 0.15j, 1.2 + 0.05j])
    assert s.perturbed(pts).tolist() == [True, False, False, False]
    d = Disc((0.0, 0.0), 0.5, 2.0)
    assert d.contains(np.array([[0.49, 0.0], [0.51, 0.0]])).tolist() == [True, False]


def test_truth_index_sampling(coarse_mesh):
    n = truth_index(get_scenario("disc-in-disc"), coarse_mesh)
    c = coarse_mesh.centroids[coarse_mesh.d_elements]
    inside = np.hypot(c[:, 0] - 0.3, c[:, 1] - 0.3) < 0.3
    assert np.all(n.element_values[inside] == 1.6)
    assert np.all(n.element_values[~inside] == 1.3)
    assert n.real


def test_truth_deterministic(coarse_data_mesh):
    g = DirectionGrid.uniform(4)
    a = make_truth("disc-in-disc", coarse_data_mesh, K, g, g)
    b = make_truth(get_scenario("disc-in-disc"), coarse_data_mesh, K, g, g)
    assert np.array_equal(a.values, b.values)
