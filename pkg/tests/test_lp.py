import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubeshadow.lp import phase_one


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32), st.floats(-3, 3))
def test_single_row_interval(n, seed, scale):
    # one equation: feasible iff b lies between sum of min and max contributions
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(n)
    lo, hi = -rng.uniform(0, 2, n), rng.uniform(0, 2, n)
    vmin = float(np.sum(np.minimum(a * lo, a * hi)))
    vmax = float(np.sum(np.maximum(a * lo, a * hi)))
    b = 0.5 * (vmin + vmax) + scale * 0.5 * (vmax - vmin)
    res = phase_one(a[None, :], [b], lo, hi)
    if vmin + 1e-7 < b < vmax - 1e-7:
        assert res.feasible
    elif b < vmin - 1e-7 or b > vmax + 1e-7:
        assert not res.feasible
    if res.feasible:
        assert abs(a @ res.y - b) <= 1e-8
        assert np.all(res.y >= lo) and np.all(res.y <= hi)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 9), st.integers(1, 3), st.integers(0, 2**32))
def test_cube_images(n, m, seed):
    m = min(m, n)
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    # inside: image of an interior cube point
    y = rng.uniform(-0.99, 0.99, n)
    res = phase_one(A, A @ y, -1.0, 1.0)
    assert res.feasible
    np.testing.assert_allclose(A @ res.y, A @ y, atol=1e-8)
    # outside: beyond the support value in a random direction
    u = rng.standard_normal(m)
    p = A @ np.sign(A.T @ u)
    assert not phase_one(A, 1.01 * p, -1.0, 1.0).feasible
    assert phase_one(A, 0.99 * p, -1.0, 1.0).feasible


def test_degenerate_equal_bounds():
    A = np.array([[1.0, 1.0, 1.0]])
    assert phase_one(A, [2.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0]).feasible
    assert not phase_one(A, [2.5], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0]).feasible


def test_redundant_rows():
    A = np.array([[1.0, 2.0], [2.0, 4.0]])
    assert phase_one(A, [1.0, 2.0], -1, 1).feasible
    assert not phase_one(A, [1.0, 2.5], -1, 1).feasible


def test_bad_input():
    with pytest.raises(ValueError):
        phase_one([[1.0]], [1.0, 2.0], -1, 1)
    with pytest.raises(ValueError):
        phase_one([[1.0]], [1.0], 1, -1)
