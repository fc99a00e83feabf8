import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indexrecon.forward import DirectionGrid, IndexField, gamma
from indexrecon.localization import (
    EIGEN,
    SINGULAR,
    DegenerateDataError,
    LocalizationMap,
    build_W,
    choose_variant,
    default_delta,
    farfield_operator,
    localize,
    normalize,
    read_localization_csv,
    spectral_system,
    w_sharp,
)
from indexrecon.mesh import probe_points
from indexrecon.scattering import FarFieldData
from indexrecon.synthetic import add_noise, element_zoning, get_scenario, truth_index

K = 5.0


def _rand(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


# -- operators --------------------------------------------------------------------

def test_farfield_operator_zero_and_constant():
    g = DirectionGrid.uniform(8)
    assert np.all(farfield_operator(FarFieldData(np.zeros((8, 8), complex), g, g, K)) == 0)
    F = farfield_operator(FarFieldData(np.full((8, 8), 2 - 1j), g, g, K))
    assert np.allclose(F, (2 - 1j) * 2 * np.pi / 8)
    assert np.linalg.matrix_rank(F) == 1


def test_farfield_operator_grid_stable():
    # smooth kernel u(theta, xhat) = exp(i cos(theta - xhat)) applied to g = 1
    def apply(m):
        g = DirectionGrid.uniform(m)
        u = np.exp(1j * np.cos(g.angles[None, :] - g.angles[:, None]))
        return farfield_operator(FarFieldData(u, g, g, K)) @ np.ones(m)
    a, b = apply(16), apply(32)
    assert np.allclose(a, b[::2], rtol=1e-10)


def test_build_W_cases(rng):
    A, B = _rand(rng, 3, 3), _rand(rng, 3, 3)
    assert np.all(build_W(A, A, K) == 0)
    assert np.allclose(build_W(A, np.zeros((3, 3)), K), A)
    g2 = 1 / (8 * np.pi * K)
    ref = np.zeros((3, 3), complex)
    for i in range(3):
        for j in range(3):
            for l in range(3):
                ref[i, j] += ((i == l) + 2j * K * g2 * B[i, l]) * (A[l, j] - B[l, j])
    assert np.allclose(build_W(A, B, K), ref)
    assert np.allclose(build_W(A, B, K, gamma(K)), ref)
    with pytest.raises(ValueError):
        build_W(A, _rand(rng, 3, 2), K)


def test_w_sharp_cases(rng):
    assert np.all(w_sharp(np.zeros((3, 3))) == 0)
    assert np.allclose(w_sharp(np.array([[0, 1], [0, 0]])), 2 * np.eye(2))
    X = _rand(rng, 4, 4)
    P = X @ X.conj().T
    assert np.allclose(w_sharp(P), 2 * P)
    with pytest.raises(ValueError):
        w_sharp(np.ones((2, 3)))


@settings(max_examples=100)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 12))
def test_w_sharp_hermitian_psd(seed, m):
    W = _rand(np.random.default_rng(seed), m, m)
    Ws = w_sharp(W)
    assert np.allclose(Ws, Ws.conj().T, atol=1e-12)
    lam = np.linalg.eigvalsh(Ws)
    assert lam.min() >= -1e-10 * max(lam.max(), 1e-300)


# -- spectral systems ---------------------------------------------------------------

def test_spectral_identity():
    s = spectral_system(np.eye(3), EIGEN)
    assert np.allclose(s.values, 1.0)
    assert np.allclose(s.vectors.conj().T @ s.vectors, np.eye(3), atol=1e-10)


def test_spectral_rectangular_singular(rng):
    A = _rand(rng, 4, 2)
    s = spectral_system(A, SINGULAR)
    assert s.vectors.shape == (2, 2)
    lam = np.linalg.eigvalsh(A.conj().T @ A)[::-1]
    assert np.allclose(s.values**2, lam, rtol=0, atol=1e-10)
    assert np.all(np.diff(s.values) <= 0)


def test_spectral_rank_one(rng):
    a, b = _rand(rng, 5), _rand(rng, 5)
    for variant, A in ((SINGULAR, np.outer(a, b)), (EIGEN, np.outer(a, a.conj()))):
        s = spectral_system(A, variant)
        assert np.sum(s.values > 1e-10 * s.values[0]) == 1


@settings(max_examples=30)
@given(seed=st.integers(0, 2**32 - 1))
def test_weighted_orthonormality(seed):
    rng = np.random.default_rng(seed)
    w_in, w_out = rng.uniform(0.1, 1.0, 6), rng.uniform(0.1, 1.0, 5)
    s = spectral_system(_rand(rng, 5, 6), SINGULAR, w_in, w_out)
    G = s.vectors.conj().T @ (w_in[:, None] * s.vectors)
    assert np.allclose(G, np.eye(5), atol=1e-10)
    wu = np.full(6, 0.3)
    X = _rand(rng, 6, 6)
    e = spectral_system(X @ X.conj().T, EIGEN, wu)
    assert np.allclose(e.vectors.conj().T @ (wu[:, None] * e.vectors), np.eye(6), atol=1e-10)


def test_spectral_bad_variant():
    with pytest.raises(ValueError):
        spectral_system(np.eye(2), "nope")
    with pytest.raises(ValueError):
        spectral_system(np.ones((2, 3)), EIGEN)


def test_variant_choice_and_delta():
    full, part = DirectionGrid.uniform(6), DirectionGrid.uniform(6, 0, np.pi)
    z = np.zeros((6, 6), complex)
    assert choose_variant(FarFieldData(z, full, full, K), True) == EIGEN
    assert choose_variant(FarFieldData(z, full, full, K), False) == SINGULAR
    assert choose_variant(FarFieldData(z, full, part, K), True) == SINGULAR
    assert default_delta(0.0) == 1e-4 and default_delta(0.05) == 0.05**2


def test_normalize_idempotent(rng):
    v = rng.uniform(0.1, 5.0, 20)
    n1 = normalize(v)
    assert n1.max() == 1.0
    assert np.array_equal(normalize(n1), n1)


# -- indicator on the coarse set-up ----------------------------------------------

@pytest.fixture(scope="module")
def reference(coarse_model, coarse_mesh):
    n = IndexField.constant(element_zoning(coarse_mesh), 1.3, real=True)
    return n, coarse_model.solve(n)


def test_degenerate_identical_data(coarse_model, coarse_mesh, reference):
    _, st_ref = reference
    with pytest.raises(DegenerateDataError):
        localize(coarse_model, st_ref, st_ref.far, probe_points(coarse_mesh), 1e-4)


@pytest.mark.parametrize("variant", [EIGEN, SINGULAR])
def test_indicator_positive(coarse_model, coarse_mesh, coarse_data, reference, variant):
    _, st_ref = reference
    lmap = localize(coarse_model, st_ref, coarse_data, probe_points(coarse_mesh), 4e-4, variant)
    assert np.all(lmap.raw > 0) and np.all(np.isfinite(lmap.raw))
    assert lmap.normalized.max() == 1.0 and lmap.variant == variant
    assert 1 <= lmap.truncation <= 12


def test_localization_csv(tmp_path, coarse_model, coarse_mesh, coarse_data, reference):
    _, st_ref = reference
    lmap = localize(coarse_model, st_ref, coarse_data, probe_points(coarse_mesh), 4e-4)
    p = tmp_path / "loc.csv"
    lmap.to_csv(p)
    pts, raw, nrm = read_localization_csv(p)
    assert np.array_equal(pts, lmap.probes.points)
    assert np.array_equal(raw, lmap.raw) and np.array_equal(nrm, lmap.normalized)
    again = tmp_path / "again.csv"
    LocalizationMap(lmap.probes, raw, lmap.truncation).to_csv(again)
    assert again.read_bytes() == p.read_bytes()


# -- reference-scale statistics -----------------------------------------------------------

@pytest.fixture(scope="module")
def ref_state(ref_model, ref_mesh):
    n = IndexField.constant(element_zoning(ref_mesh), 1.3, real=True)
    return ref_model.solve(n)


def test_localization_contrast(ref_model, ref_mesh, ref_data, ref_omega,
                               ref_state):
    lmap = localize(ref_model, ref_state, ref_data, probe_points(ref_mesh),
                    default_delta(0.02), SINGULAR)
    s = lmap.normalized
    assert s[ref_omega].mean() >= 3 * s[~ref_omega].mean()


def test_noise_only_argmax_unstable(ref_model, ref_mesh):
    # reference equal to the truth, data = its own far field plus noise only
    truth = truth_index(get_scenario("disc-in-disc"), ref_mesh)
    st_true = ref_model.solve(truth)
    probes = probe_points(ref_mesh)
    argmax = set()
    for seed in range(3):
        data = add_noise(st_true.far, 0.02, seed)
        lmap = localize(ref_model, st_true, data, probes, default_delta(0.02), SINGULAR)
        argmax.add(int(np.argmax(lmap.raw)))
    assert len(argmax) >= 2


def test_perturbation_spans_connected_elements(ref_mesh, ref_omega):
    idx = np.flatnonzero(ref_omega)
    assert len(idx) >= 4
    adj = ref_mesh.d_adjacency
    seen, todo, inside = {int(idx[0])}, [int(idx[0])], set(idx.tolist())
    while todo:
        e = todo.pop()
        for nb in adj[e]:
            nb = int(nb)
            if nb in inside and nb not in seen:
                seen.add(nb)
                todo.append(nb)
    assert len(seen) == len(idx)
