import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubeshadow.moments import (body_report, centered_quadratic_variance, face_moment,
                                face_moment_dir, tile_mean, tile_variance)
from cubeshadow.subspace import axis_subspace, haar_subspace
from cubeshadow.tiling import Face, enumerate_tiling, tile_geometry

from oracles import gauss_legendre, mean_var_se, polygon_shadow_mc, power_iteration

R2 = np.sqrt(2.0)


def explicit_report(t):
    """Mixture moments from tile_geometry only (no k x k block shortcuts)."""
    geos = [tile_geometry(t.subspace, f) for f in t.faces]
    w = np.array([g.volume for g in geos])
    w /= w.sum()
    means = np.array([tile_mean(g) for g in geos])
    var = np.array([tile_variance(g) for g in geos])
    mean = float(w @ means)
    cov = sum(wi * (g.map @ g.map.T / 3 + np.outer(g.shift, g.shift)) for wi, g in zip(w, geos))
    return mean, float(w @ var + w @ (means - mean) ** 2), cov


def test_diag2_integrals(diag2):
    # x = sqrt2 t, t uniform on [-1, 1]
    m2 = gauss_legendre(lambda t: 2 * t ** 2, -1, 1) / 2
    m4 = gauss_legendre(lambda t: 4 * t ** 4, -1, 1) / 2
    r = body_report(enumerate_tiling(diag2))
    assert r.mean_sq == pytest.approx(m2, abs=1e-12)
    assert r.variance == pytest.approx(m4 - m2 ** 2, abs=1e-12)
    assert r.lambda_sq == pytest.approx(m2, abs=1e-12)
    assert r.ratio == pytest.approx((m4 - m2 ** 2) / m2 ** 2, abs=1e-12)
    assert (m2, m4 - m2 ** 2) == pytest.approx((2 / 3, 16 / 45), abs=1e-14)


@pytest.mark.parametrize("n,k", [(2, 1), (7, 3), (12, 5)])
def test_axis_report(n, k):
    r = body_report(enumerate_tiling(axis_subspace(n, k)))
    m = n - k
    assert r.mean_sq == pytest.approx(m / 3, abs=1e-12)
    assert r.variance == pytest.approx(4 * m / 45, abs=1e-12)
    assert r.lambda_sq == pytest.approx(1 / 3, abs=1e-12)
    assert r.ratio == pytest.approx(0.8, abs=1e-12)
    assert r.bounds_ok


def test_diag3_report_exact(diag3):
    r = body_report(enumerate_tiling(diag3, direction=np.ones(3)))
    assert r.mean_sq == pytest.approx(10 / 9, abs=1e-12)
    assert r.variance == pytest.approx(172 / 405, abs=1e-12)
    assert r.lambda_sq == pytest.approx(5 / 9, abs=1e-12)
    np.testing.assert_allclose(r.covariance, 5 / 9 * np.eye(2), atol=1e-12)
    assert r.ratio == pytest.approx(0.688, abs=1e-12)


def test_diag3_report_vs_polygon_mc(diag3):
    r = body_report(enumerate_tiling(diag3))
    X = polygon_shadow_mc(diag3.basis, 2_000_000, seed=17)
    m, v, se_m, se_v = mean_var_se(np.einsum("ij,ij->i", X, X))
    assert abs(m - r.mean_sq) <= 4 * se_m
    assert abs(v - r.variance) <= 4 * se_v
    C = np.cov(X.T)
    se_c = np.sqrt(2 / X.shape[0]) * 5 / 9
    assert np.max(np.abs(C - r.covariance)) <= 4 * se_c


def test_face_moment_examples(diag2, diag3):
    assert face_moment(diag2, Face((1,), (1,))) == pytest.approx(2 / 3, abs=1e-14)
    assert face_moment(diag3, Face((3,), (1,))) == pytest.approx(10 / 9, abs=1e-14)
    s = axis_subspace(9, 4)
    assert face_moment(s, Face((6, 7, 8, 9), (1, 1, -1, 1))) == pytest.approx(5 / 3, abs=1e-14)


def test_face_moment_vs_polygon_mc(diag3):
    # the tile P_E(F) for F = {x3 = 1} is a rhombus; sample it through its parametrization
    g = tile_geometry(diag3, Face((3,), (1,)))
    rng = np.random.default_rng(3)
    x = g.shift + rng.uniform(-1, 1, (1_000_000, 2)) @ g.map.T
    m, v, se_m, se_v = mean_var_se(np.einsum("ij,ij->i", x, x))
    assert abs(m - 10 / 9) <= 4 * se_m
    assert abs(v - 172 / 405) <= 4 * se_v


def test_face_moment_dir_examples(diag2):
    th = np.array([1.0, 1.0]) / R2
    assert face_moment_dir(diag2, Face((1,), (1,)), th) == pytest.approx(2 / 3, abs=1e-14)
    s = axis_subspace(5, 2)
    assert face_moment_dir(s, Face((4, 5), (1, -1)), [0.6, 0.8, 0, 0, 0]) == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        face_moment_dir(s, Face((4, 5), (1, -1)), [0, 0, 0, 1.0, 0])
    with pytest.raises(ValueError):
        face_moment_dir(s, Face((4, 5), (1, -1)), [1.0, 1.0, 0, 0, 0])


def test_face_moment_dir_sums_to_face_moment():
    s = haar_subspace(8, 3, 9)
    f = Face((2, 5, 7), (1, -1, -1))
    total = sum(face_moment_dir(s, f, s.basis[r]) for r in range(s.dim))
    assert total == pytest.approx(face_moment(s, f), abs=1e-12)


def test_cqv_examples():
    assert centered_quadratic_variance(np.zeros((3, 3))) == 0
    assert centered_quadratic_variance([[0.5]]) == pytest.approx(1 / 45, abs=1e-15)
    q = gauss_legendre(lambda t: (0.5 * t * t) ** 2, -1, 1) / 2 - (gauss_legendre(lambda t: 0.5 * t * t, -1, 1) / 2) ** 2
    assert centered_quadratic_variance([[0.5]]) == pytest.approx(q, abs=1e-15)
    assert centered_quadratic_variance(np.eye(4)) == pytest.approx(16 / 45, abs=1e-15)
    with pytest.raises(ValueError):
        centered_quadratic_variance([[1.0, 2.0], [0.0, 1.0]])


@pytest.mark.slow
def test_cqv_identity_mc():
    m = 3
    rng = np.random.default_rng(8)
    vals = np.concatenate([np.sum(rng.uniform(-1, 1, (1_000_000, m)) ** 2, axis=1) for _ in range(10)])
    _, v, _, se_v = mean_var_se(vals)
    assert abs(v - centered_quadratic_variance(np.eye(m))) <= 4 * se_v


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32))
def test_cqv_vs_mc(m, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, m))
    Q = (A + A.T) / 2
    u = rng.uniform(-1, 1, (200_000, m))
    _, v, _, se_v = mean_var_se(np.einsum("ij,jk,ik->i", u, Q, u))
    assert abs(v - centered_quadratic_variance(Q)) <= 5 * se_v


def test_tile_variance_examples(diag2, diag3):
    assert tile_variance(tile_geometry(diag2, Face((1,), (1,)))) == pytest.approx(16 / 45, abs=1e-14)
    assert tile_variance(tile_geometry(diag3, Face((3,), (1,)))) == pytest.approx(172 / 405, abs=1e-14)
    assert tile_variance(tile_geometry(axis_subspace(7, 2), Face((6, 7), (1, 1)))) == pytest.approx(20 / 45)


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 10), st.integers(1, 4), st.integers(0, 2**32))
def test_fast_path_matches_explicit(n, k, seed):
    k = min(k, n - 1)
    t = enumerate_tiling(haar_subspace(n, k, seed), seed=seed)
    r = body_report(t)
    mean, var, cov = explicit_report(t)
    assert r.mean_sq == pytest.approx(mean, abs=1e-12)
    assert r.variance == pytest.approx(var, abs=1e-12)
    np.testing.assert_allclose(r.covariance, cov, atol=1e-12)
    assert r.lambda_sq == pytest.approx(power_iteration(cov), abs=1e-10)
    assert r.within + r.between == pytest.approx(r.variance, abs=1e-14)
    np.testing.assert_allclose(r.mean_vector, 0, atol=1e-12)
    for i in range(min(t.l, 5)):
        assert r.tile_means[i] == pytest.approx(face_moment(t.subspace, t.face(i)), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 14), st.integers(1, 4), st.integers(0, 2**32))
def test_bounds_hold(n, k, seed):
    k = min(k, n - 1)
    r = body_report(enumerate_tiling(haar_subspace(n, k, seed), seed=seed))
    assert r.bounds_ok, r.bound_flags
    assert (n - 2 * k) / 3 - 1e-9 <= r.mean_sq <= (n + 2 * k) / 3 + 1e-9
    assert r.lambda_sq >= (n - 2 * k) / (3 * (n - k)) - 1e-9
    assert r.max_face_dev <= 4 * k / 3 + 1e-9
    assert 0 < r.ratio < 10


def test_report_independent_of_direction():
    s = haar_subspace(7, 2, 4)
    a = body_report(enumerate_tiling(s, seed=1))
    b = body_report(enumerate_tiling(s, seed=2))
    assert a.mean_sq == pytest.approx(b.mean_sq, abs=1e-12)
    assert a.variance == pytest.approx(b.variance, abs=1e-12)
    assert a.lambda_sq == pytest.approx(b.lambda_sq, abs=1e-12)


def test_report_dict_keys(diag2):
    d = body_report(enumerate_tiling(diag2)).to_dict()
    assert list(d) == ["mean_sq", "variance", "lambda_sq", "ratio", "bounds", "per_tile"]
    assert set(d["bounds"]) == {"mean_lower", "mean_upper", "lambda_lower", "lemma26_ok",
                                "lemma25_max_var_over_n"}
    assert d["per_tile"][0].keys() == {"tile", "mean_sq", "variance"}
