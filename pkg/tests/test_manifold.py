import numpy as np
import pytest
from conftest import corr2, random_corr
from hypothesis import given
from hypothesis import strategies as st

from corrgeo.errors import DiagonalNotUnit, DimensionMismatch, InvalidInput, NoConvergence, NotPositiveDefinite
from corrgeo.manifold import (
    FlatCoords,
    Metric,
    dist,
    embed,
    embed_many,
    euclidean_mean,
    exp_off,
    frechet_mean,
    geodesic,
    hollow_from_upper,
    log_off,
    n_coords,
    solve_diag_correction,
    star_inverse,
    star_product,
    tangent_at_identity,
    unembed,
    validate_or_shrink,
)

seeds = st.integers(0, 2**32 - 1)
METRICS = list(Metric)
GEOMETRIES = [Metric.OFFLOG, Metric.ECM, Metric.LEC]


# -- validation ------------------------------------------------------------------


def test_validate_identity():
    C, gamma = validate_or_shrink(np.eye(3))
    assert np.array_equal(C, np.eye(3)) and gamma == 0.0


def test_validate_shrinks_rank_one():
    notes = []
    C, gamma = validate_or_shrink(np.ones((3, 3)), shrink_allowed=True, notes=notes)
    assert gamma == 1e-6
    assert np.linalg.eigvalsh(C)[0] >= 1e-8
    assert np.allclose(np.diag(C), 1.0)
    assert any("shrunk" in n for n in notes)


def test_validate_rank_one_without_shrink():
    with pytest.raises(NotPositiveDefinite):
        validate_or_shrink(np.ones((3, 3)))


def test_validate_unrepairable():
    with pytest.raises(NotPositiveDefinite):
        validate_or_shrink([[1, 1.5], [1.5, 1]], shrink_allowed=True)


def test_validate_diagonal_rules():
    notes = []
    A = corr2(0.3)
    A[0, 0] = 0.999999
    C, _ = validate_or_shrink(A, notes=notes)
    assert np.array_equal(np.diag(C), [1.0, 1.0])
    assert notes and "diagonal" in notes[0]
    A[0, 0] = 0.99
    with pytest.raises(DiagonalNotUnit):
        validate_or_shrink(A)


def test_validate_symmetry_rules():
    A = corr2(0.3)
    A[0, 1] += 1e-10
    C, _ = validate_or_shrink(A)
    assert C[0, 1] == C[1, 0]
    A[0, 1] += 1e-6
    with pytest.raises(InvalidInput):
        validate_or_shrink(A)


# -- Off-log ---------------------------------------------------------------------


def test_log_off_examples():
    assert np.allclose(log_off(np.eye(4)), 0)
    assert log_off(corr2(0.5))[0, 1] == pytest.approx(0.549306, abs=1e-6)
    assert log_off(corr2(-0.3))[0, 1] == pytest.approx(-0.309520, abs=1e-6)
    assert np.all(np.diag(log_off(corr2(0.5))) == 0)


def test_diag_correction_examples():
    assert np.allclose(solve_diag_correction(np.zeros((3, 3))), 0)
    s = np.arctanh(0.5)
    d = solve_diag_correction(hollow_from_upper([s], 2))
    assert np.allclose(d, -np.log(np.cosh(s)), atol=1e-12)
    assert d[0] == pytest.approx(-0.143841, abs=1e-6)


@pytest.mark.parametrize("method", ["newton", "fixed-point"])
def test_diag_correction_residual(method):
    rng = np.random.default_rng(7)
    S = hollow_from_upper(rng.uniform(-1, 1, n_coords(10)), 10)
    d = solve_diag_correction(S, method=method, max_iter=1000)
    w, V = np.linalg.eigh(S + np.diag(d))
    resid = np.max(np.abs(np.log(np.einsum("ij,j,ij->i", V, np.exp(w), V))))
    assert resid <= 1e-12


def test_diag_correction_reports_non_convergence():
    rng = np.random.default_rng(1)
    S = hollow_from_upper(rng.uniform(-1, 1, n_coords(10)), 10)
    with pytest.raises(NoConvergence) as info:
        solve_diag_correction(S, method="fixed-point", max_iter=3)
    assert info.value.residual > 1e-12


def test_exp_off_examples():
    assert np.allclose(exp_off(np.zeros((3, 3))), np.eye(3))
    C = exp_off(hollow_from_upper([0.549306], 2))
    assert C[0, 1] == pytest.approx(0.5, abs=1e-6)


def test_exp_off_ignores_diagonal_rejects_asymmetry():
    S = hollow_from_upper([0.3], 2)
    assert np.array_equal(exp_off(S + np.eye(2)), exp_off(S))
    with pytest.raises(InvalidInput):
        exp_off([[0, 1], [0.5, 0]])


def test_exp_log_round_trip_n20():
    rng = np.random.default_rng(3)
    C = random_corr(rng, 20, 0.4)
    assert np.max(np.abs(exp_off(log_off(C)) - C)) <= 1e-8


@given(seeds, st.integers(2, 50))
def test_exp_off_unit_diagonal_spd(seed, n):
    rng = np.random.default_rng(seed)
    C = exp_off(hollow_from_upper(rng.uniform(-2, 2, n_coords(n)), n))
    assert np.max(np.abs(np.diag(C) - 1)) <= 1e-10
    assert np.linalg.eigvalsh(C)[0] > 0


# -- charts and distances ------------------------------------------------------------


@pytest.mark.parametrize("metric", METRICS)
def test_embed_identity_is_zero(metric):
    assert np.all(embed(np.eye(4), metric).values == 0)


def test_embed_examples():
    assert embed(corr2(0.6), "ecm").values == pytest.approx([0.75])
    assert embed(corr2(0.6), "lec").values == pytest.approx([0.75])
    assert embed(corr2(0.5), "offlog").values == pytest.approx([0.549306], abs=1e-6)


def test_unembed_examples():
    assert np.allclose(unembed(FlatCoords(Metric.ECM, 3, np.zeros(3))), np.eye(3))
    assert unembed(FlatCoords(Metric.ECM, 2, np.array([0.75])))[0, 1] == pytest.approx(0.6)
    with pytest.raises(DimensionMismatch):
        FlatCoords(Metric.ECM, 3, np.zeros(2))


@pytest.mark.parametrize("metric", METRICS)
def test_unembed_round_trip_n30(metric):
    C = random_corr(np.random.default_rng(11), 30, 0.2)
    assert np.max(np.abs(unembed(embed(C, metric)) - C)) <= 1e-8


def test_dist_examples():
    C = corr2(0.6)
    assert dist(C, C, "offlog") == 0.0
    assert dist(corr2(0.6), corr2(0.2), "offlog") == pytest.approx(0.693551, abs=1e-6)
    assert dist(corr2(0.6), np.eye(2), "ecm") == pytest.approx(0.75)
    # the raw baseline is the Frobenius distance of the full matrices
    assert dist(corr2(0.6), corr2(0.2), "euclidean") == pytest.approx(np.sqrt(2) * 0.4)
    with pytest.raises(DimensionMismatch):
        dist(np.eye(2), np.eye(3), "offlog")


# tanh((atanh 0.6 + atanh 0.2) / 2), evaluated independently with numpy
OFFLOG_MIDPOINT = 0.4202041028867287


def test_geodesic_examples():
    A, B = corr2(0.6), corr2(0.2)
    assert np.allclose(geodesic(A, B, 0.0, "offlog"), A, atol=1e-12)
    assert np.allclose(geodesic(A, B, 1.0, "offlog"), B, atol=1e-12)
    assert geodesic(A, B, 0.5, "offlog")[0, 1] == pytest.approx(OFFLOG_MIDPOINT, abs=1e-12)
    with pytest.raises(InvalidInput):
        geodesic(A, B, 0.5, "euclidean")


def test_frechet_mean_examples():
    C = random_corr(np.random.default_rng(5), 6)
    assert np.allclose(frechet_mean([C], "offlog"), C, atol=1e-10)
    assert np.allclose(frechet_mean([C, star_inverse(C)], "offlog"), np.eye(6), atol=1e-10)
    assert frechet_mean([corr2(0.6), corr2(0.2)], "offlog")[0, 1] == pytest.approx(OFFLOG_MIDPOINT, abs=1e-12)
    assert np.allclose(euclidean_mean([corr2(0.6), corr2(0.2)]), corr2(0.4))


def test_star_examples():
    C = random_corr(np.random.default_rng(6), 5)
    assert np.allclose(star_product(C, np.eye(5)), C, atol=1e-10)
    assert np.allclose(star_product(C, star_inverse(C)), np.eye(5), atol=1e-8)
    assert star_product(corr2(0.5), corr2(0.5))[0, 1] == pytest.approx(0.8)
    assert star_inverse(corr2(0.5))[0, 1] == pytest.approx(-0.5)
    assert np.allclose(star_inverse(np.eye(3)), np.eye(3))
    assert np.allclose(star_inverse(star_inverse(C)), C, atol=1e-10)


def test_tangent_at_identity():
    rng = np.random.default_rng(8)
    assert np.all(tangent_at_identity(np.eye(3), "offlog").values == 0)
    assert tangent_at_identity(corr2(0.5), "offlog").values == pytest.approx([0.549306], abs=1e-6)
    for _ in range(100):
        C = random_corr(rng, 4)
        for metric in METRICS:
            assert np.array_equal(tangent_at_identity(C, metric).values, embed(C, metric).values)


def test_embed_many_shapes():
    Cs = [np.eye(3), corr2(0.1)]
    with pytest.raises(DimensionMismatch):
        embed_many(Cs, "offlog")


# -- properties -----------------------------------------------------------------------


@given(seeds, st.integers(2, 12))
def test_offlog_permutation_equivariance(seed, n):
    rng = np.random.default_rng(seed)
    C, D = random_corr(rng, n), random_corr(rng, n)
    P = np.eye(n)[rng.permutation(n)]
    assert np.max(np.abs(log_off(P @ C @ P.T) - P @ log_off(C) @ P.T)) <= 1e-10
    assert abs(dist(P @ C @ P.T, P @ D @ P.T, "offlog") - dist(C, D, "offlog")) <= 1e-10


@given(seeds, st.integers(2, 10), st.sampled_from(METRICS))
def test_metric_axioms(seed, n, metric):
    rng = np.random.default_rng(seed)
    A, B, C = (random_corr(rng, n, 0.4) for _ in range(3))
    assert dist(A, B, metric) == dist(B, A, metric)
    assert dist(A, C, metric) <= dist(A, B, metric) + dist(B, C, metric) + 1e-10


@given(seeds, st.integers(2, 10))
def test_translation_invariance(seed, n):
    rng = np.random.default_rng(seed)
    A, B, C = (random_corr(rng, n) for _ in range(3))
    assert abs(dist(star_product(A, B), star_product(A, C), "offlog") - dist(B, C, "offlog")) <= 1e-10


@given(seeds, st.integers(2, 8))
def test_group_axioms(seed, n):
    rng = np.random.default_rng(seed)
    A, B, C = (random_corr(rng, n) for _ in range(3))
    assert np.max(np.abs(star_product(A, B) - star_product(B, A))) <= 1e-8
    left = star_product(star_product(A, B), C)
    right = star_product(A, star_product(B, C))
    assert np.max(np.abs(left - right)) <= 1e-8


@given(seeds, st.sampled_from(GEOMETRIES))
def test_frechet_mean_beats_perturbations(seed, metric):
    rng = np.random.default_rng(seed)
    Cs = [random_corr(rng, 6) for _ in range(5)]
    M = frechet_mean(Cs, metric)
    base = sum(dist(M, C, metric) ** 2 for C in Cs)
    x = embed(M, metric)
    for _ in range(10):
        step = rng.standard_normal(x.values.shape)
        step *= 0.1 * rng.uniform() / (metric.coord_scale * np.linalg.norm(step))
        Mp = unembed(FlatCoords(metric, x.n, x.values + step))
        assert sum(dist(Mp, C, metric) ** 2 for C in Cs) >= base - 1e-9
