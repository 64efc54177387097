import numpy as np
import pytest

from cubeshadow.errors import AcceptanceTooLow, DimensionMismatch, EmptyBatch
from cubeshadow.sampling import (SampleBatch, ZonotopeFacets, bounding_box, contains, mc_moments,
                                 rejection_sample, sample_uniform)
from cubeshadow.subspace import axis_subspace, haar_subspace
from cubeshadow.tiling import enumerate_tiling, locate_counts
from cubeshadow.moments import body_report


def test_contains_examples(diag2):
    s = axis_subspace(5, 2)
    assert contains(s, [1.0, -1.0, 0.3])
    assert not contains(s, [1.0, -1.0, 1.1])
    assert not contains(diag2, [1.5])
    assert contains(diag2, [1.0])
    assert contains(diag2, [np.sqrt(2)])
    with pytest.raises(DimensionMismatch):
        contains(diag2, [1.0, 0.0])
    with pytest.raises(ValueError):
        contains(diag2, [1.0], tol=0)


@pytest.mark.parametrize("seed", range(5))
def test_lp_and_facets_agree(seed):
    s = haar_subspace(7, 2, seed)
    rng = np.random.default_rng(seed)
    box = bounding_box(s)
    X = rng.uniform(-box, box, (300, s.dim))
    fac = ZonotopeFacets(s).contains_many(X)
    lp = np.array([contains(s, x) for x in X])
    assert np.array_equal(fac, lp)
    assert 0 < fac.sum() < len(X)


def test_support_boundary():
    s = haar_subspace(6, 2, 1)
    rng = np.random.default_rng(0)
    for _ in range(20):
        u = rng.standard_normal(s.dim)
        p = s.basis @ np.sign(s.basis.T @ u)
        for method in ("lp", "facets"):
            assert contains(s, 0.999 * p, method=method)
            assert not contains(s, 1.001 * p, method=method)


def test_exact_sampler_diag2(diag2):
    b = sample_uniform(enumerate_tiling(diag2), 100_000, seed=3)
    mc = mc_moments(b)
    assert abs(mc.mean_sq_hat - 2 / 3) <= 4 * mc.se_mean
    assert abs(mc.var_sq_hat - 16 / 45) <= 4 * mc.se_var


def test_exact_sampler_membership_and_locate():
    s = haar_subspace(7, 2, 8)
    t = enumerate_tiling(s, seed=8)
    b = sample_uniform(t, 20_000, seed=1)
    assert b.points.shape == (20_000, 5)
    assert ZonotopeFacets(s).contains_many(b.points, 1e-9).all()
    assert all(contains(s, x, 1e-9) for x in b.points[:200])
    counts, first = locate_counts(t, b.points)
    assert np.all(counts >= 1)
    assert np.mean(first == b.tile_ids) > 0.999


def test_axis_sampler_single_tile():
    t = enumerate_tiling(axis_subspace(6, 2))
    b = sample_uniform(t, 1000, seed=0)
    assert np.all(b.tile_ids == 0)
    assert np.all(np.abs(b.points) <= 1)


def test_rejection_examples(diag2, diag3):
    b = rejection_sample(axis_subspace(5, 2), 2000, seed=1)
    assert b.acceptance_rate == 1.0
    b = rejection_sample(diag2, 2000, seed=1)
    assert b.acceptance_rate == 1.0
    r = body_report(enumerate_tiling(diag3))
    mc = mc_moments(rejection_sample(diag3, 1_000_000, seed=2))
    assert abs(mc.mean_sq_hat - r.mean_sq) <= 4 * mc.se_mean
    assert abs(mc.mean_sq_hat - 10 / 9) <= 4 * mc.se_mean


def test_rejection_points_locate():
    s = haar_subspace(6, 2, 3)
    t = enumerate_tiling(s, seed=0)
    b = rejection_sample(s, 5000, seed=5)
    counts, _ = locate_counts(t, b.points)
    assert np.all(counts >= 1)


def test_rejection_lp_membership_matches_facets():
    s = haar_subspace(5, 1, 2)
    a = rejection_sample(s, 300, seed=9, membership="lp")
    b = rejection_sample(s, 300, seed=9, membership="facets")
    np.testing.assert_array_equal(a.points, b.points)


def test_acceptance_guard():
    # a thin shadow: the box is far larger than K
    s = haar_subspace(30, 1, 0)
    with pytest.raises(AcceptanceTooLow):
        rejection_sample(s, 10, seed=0)


def test_exact_vs_rejection():
    s = haar_subspace(6, 2, 12)
    a = mc_moments(sample_uniform(enumerate_tiling(s), 100_000, seed=1))
    b = mc_moments(rejection_sample(s, 100_000, seed=2))
    assert abs(a.mean_sq_hat - b.mean_sq_hat) <= 4 * np.hypot(a.se_mean, b.se_mean)
    assert abs(a.var_sq_hat - b.var_sq_hat) <= 4 * np.hypot(a.se_var, b.se_var)


def test_determinism():
    s = haar_subspace(7, 2, 4)
    t = enumerate_tiling(s)
    a, b = sample_uniform(t, 150_000, seed=7), sample_uniform(t, 150_000, seed=7)
    assert np.array_equal(a.points, b.points) and np.array_equal(a.tile_ids, b.tile_ids)
    assert not np.array_equal(a.points, sample_uniform(t, 150_000, seed=8).points)
    c, d = rejection_sample(s, 3000, seed=7), rejection_sample(s, 3000, seed=7)
    assert np.array_equal(c.points, d.points)


def test_mc_moments():
    b = SampleBatch(points=np.ones((10, 3)), tile_ids=None, seed=0, method="exact")
    mc = mc_moments(b)
    assert mc.var_sq_hat == 0 and mc.mean_sq_hat == 3
    with pytest.raises(EmptyBatch):
        mc_moments(SampleBatch(points=np.ones((1, 3)), tile_ids=None, seed=0, method="exact"))
    rng = np.random.default_rng(0)
    X = rng.standard_normal((50, 2))
    v = np.sum(X ** 2, axis=1)
    mc = mc_moments(X)
    assert mc.mean_sq_hat == pytest.approx(v.mean())
    assert mc.var_sq_hat == pytest.approx(v.var(ddof=1))
