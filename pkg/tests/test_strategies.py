import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indexrecon.forward import IndexField
from indexrecon.localization import DegenerateDataError, LocalizationMap
from indexrecon.mesh import partition_zones, probe_points, zoning_from_groups
from indexrecon.reconstruction import GNConfig
from indexrecon.strategies import (
    EmptySelectionError,
    StrategyConfig,
    adaptive_refinement,
    combined,
    project,
    select_zones,
    selective_reconstruction,
    zone_indicator,
)
from indexrecon.synthetic import add_noise, element_zoning, get_scenario, truth_index

FAST = GNConfig(max_iters=2, real_constraint=True)


def _map(mesh, raw):
    return LocalizationMap(probe_points(mesh), np.asarray(raw, float), 1)


@pytest.mark.parametrize("kw", [dict(threshold=0.0), dict(threshold=1.0), dict(n_max=3),
                                dict(anchor="other")])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        StrategyConfig(**kw)


def test_select_extremes(coarse_mesh, rng):
    z = partition_zones(coarse_mesh, 12, seed=0)
    lmap = _map(coarse_mesh, rng.uniform(0.01, 1.0, coarse_mesh.n_d))
    assert np.array_equal(select_zones(lmap, z, 1e-12), np.arange(12))
    si = zone_indicator(lmap, z)
    assert np.array_equal(select_zones(lmap, z, 1.0), [np.argmax(si)])


def test_select_ties_at_one(coarse_mesh):
    z = partition_zones(coarse_mesh, 5, seed=0)
    raw = np.full(coarse_mesh.n_d, 0.2)
    raw[z.zones[1][0]] = raw[z.zones[3][-1]] = 1.0
    assert select_zones(_map(coarse_mesh, raw), z, 1.0).tolist() == [1, 3]


def test_zone_indicator_is_zone_max(coarse_mesh, rng):
    z = partition_zones(coarse_mesh, 7, seed=2)
    raw = rng.uniform(0.1, 2.0, coarse_mesh.n_d)
    si = zone_indicator(_map(coarse_mesh, raw), z)
    assert np.allclose(si, [raw[m].max() / raw.max() for m in z.zones])
    with pytest.raises(ValueError):
        zone_indicator(LocalizationMap(probe_points(coarse_mesh), raw[:10], 1), z)


@settings(max_examples=100)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 60),
       t1=st.floats(1e-6, 1.0), t2=st.floats(1e-6, 1.0))
def test_superlevel_monotone(coarse_mesh, seed, n, t1, t2):
    t1, t2 = sorted((t1, t2))
    rng = np.random.default_rng(seed)
    z = partition_zones(coarse_mesh, n, seed % 97)
    lmap = _map(coarse_mesh, rng.exponential(size=coarse_mesh.n_d))
    a, b = select_zones(lmap, z, t1), select_zones(lmap, z, t2)
    assert set(b) <= set(a)


def test_project_conserves_integral(coarse_mesh, rng):
    z = partition_zones(coarse_mesh, 9, seed=1)
    v = rng.normal(size=coarse_mesh.n_d) + 1j * rng.normal(size=coarse_mesh.n_d)
    a = coarse_mesh.areas[coarse_mesh.d_elements]
    assert np.isclose(np.sum(project(v, z) * z.zone_areas), np.sum(a * v))
    assert np.allclose(project(np.full(coarse_mesh.n_d, 2.0), z), 2.0)


# -- strategies on the coarse set-up ---------------------------------------------

@pytest.fixture(scope="module")
def coarse_truth_index(coarse_mesh):
    return truth_index(get_scenario("disc-in-disc"), coarse_mesh)


def test_selective_frozen_exact(coarse_model, coarse_data, coarse_n0, coarse_truth_index):
    cfg = StrategyConfig(gn=FAST)
    res = selective_reconstruction(coarse_model, coarse_n0.zoning, coarse_n0, coarse_data,
                                   cfg, truth=coarse_truth_index)
    frozen = np.setdiff1d(np.arange(coarse_n0.zoning.n_zones), res.free)
    assert 0 < len(res.free) < coarse_n0.zoning.n_zones
    assert np.array_equal(res.index.eta[frozen], coarse_n0.eta[frozen])
    assert np.array_equal(np.sort(res.selection), np.sort(res.free))
    assert res.trace.final_error < res.trace.initial_error
    again = selective_reconstruction(coarse_model, coarse_n0.zoning, coarse_n0, coarse_data,
                                     cfg, truth=coarse_truth_index)
    assert np.array_equal(again.index.eta, res.index.eta)


def test_selective_null_case(coarse_model, coarse_n0):
    clean = coarse_model.solve(coarse_n0).far
    cfg = StrategyConfig(threshold=0.99, gn=FAST)
    with pytest.raises(EmptySelectionError):
        selective_reconstruction(coarse_model, coarse_n0.zoning, coarse_n0,
                                 add_noise(clean, 0.02, 1), cfg)
    with pytest.raises(DegenerateDataError):
        selective_reconstruction(coarse_model, coarse_n0.zoning, coarse_n0, clean,
                                 StrategyConfig(noise=0.0, gn=FAST))


def test_adaptive_single_split(coarse_model, coarse_mesh, coarse_data):
    z = partition_zones(coarse_mesh, 1)
    n0 = IndexField.constant(z, 1.3, real=True)
    res = adaptive_refinement(coarse_model, z, n0, coarse_data, StrategyConfig(n_max=4, gn=FAST))
    assert len(res.splits) == 1
    assert [h.n_zones for h in res.zonings] == [1, 4]
    assert res.n_free == 4 and len(res.trace) >= 1


def test_adaptive_budget_and_growth(coarse_model, coarse_mesh, coarse_data,
                                    coarse_truth_index):
    z = partition_zones(coarse_mesh, 1)
    n0 = IndexField.constant(z, 1.3, real=True)
    cfg = StrategyConfig(n_max=13, gn=FAST)
    res = adaptive_refinement(coarse_model, z, n0, coarse_data, cfg, truth=coarse_truth_index)
    counts = [h.n_zones for h in res.zonings]
    assert counts == [1, 4, 7, 10, 13]
    assert len(res.splits) == 4
    for before, after, elems in zip(res.zonings, res.zonings[1:], res.splits):
        assert after.n_zones == before.n_zones + 3
        assert len(elems) > 16
    again = adaptive_refinement(coarse_model, z, n0, coarse_data, cfg, truth=coarse_truth_index)
    assert np.array_equal(again.index.element_values, res.index.element_values)


def test_adaptive_size_floor_terminates(coarse_model, coarse_mesh, coarse_data):
    adj = coarse_mesh.d_adjacency
    group, frontier = {0}, [0]
    while len(group) < 40:
        e = frontier.pop(0)
        for nb in adj[e]:
            if len(group) < 40 and int(nb) not in group:
                group.add(int(nb))
                frontier.append(int(nb))
    g = np.array(sorted(group))
    rest = np.setdiff1d(np.arange(coarse_mesh.n_d), g)
    z = zoning_from_groups(coarse_mesh, [g, rest])
    n0 = IndexField.constant(z, 1.3, real=True)
    cfg = StrategyConfig(n_max=10_000, gn=FAST)
    res = adaptive_refinement(coarse_model, z, n0, coarse_data, cfg, free=np.array([0]))
    final = res.zonings[-1]
    assert np.all(final.sizes[res.free] <= 16)
    # the frozen zone never moves
    assert np.array_equal(final.zones[1], rest)
    assert res.index.eta[1] == 1.3


@pytest.mark.parametrize("anchor", ["initial", "previous"])
def test_combined_runs(coarse_model, coarse_data, coarse_n0, coarse_truth_index, anchor):
    cfg = StrategyConfig(n_max=10, gn=FAST, anchor=anchor)
    res = combined(coarse_model, coarse_n0.zoning, coarse_n0, coarse_data, cfg,
                   truth=coarse_truth_index)
    assert res.n_free <= 10
    unselected = np.setdiff1d(np.arange(coarse_n0.zoning.n_zones), res.selection)
    assert np.array_equal(res.index.element_values[unselected], coarse_n0.eta[unselected])
    assert np.isfinite(res.trace.final_error)
    assert res.zonings[0].sizes[0] == len(res.selection)
