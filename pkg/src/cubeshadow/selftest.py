"""Reduced-scale invariant suite behind ``cubeshadow selftest``.

Each check returns (name, passed, detail). Sizes are chosen so the whole
suite runs in well under a minute; the full-scale versions live in the
acceptance tests.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .moments import body_report, centered_quadratic_variance, face_moment_dir
from .rng import derive_seed, make_rng
from .sampling import mc_moments, rejection_sample, sample_uniform
from .subspace import haar_subspace, orthonormalize
from .tiling import enumerate_tiling, zonotope_volume

Check = tuple[str, bool, str]


def translated_variance(T: np.ndarray, a: np.ndarray) -> float:
    """Var|x + a|^2 for x uniform on T(B_inf^m), from the translation identity."""
    Ta = T.T @ a
    return centered_quadratic_variance(T.T @ T) + (4.0 / 3.0) * float(Ta @ Ta)


def mc_translated_variance(T: np.ndarray, a: np.ndarray, N: int, seed: int) -> tuple[float, float]:
    """Monte Carlo estimate and SE of Var|Tu + a|^2, u uniform on the cube."""
    rng = make_rng(seed)
    u = rng.uniform(-1.0, 1.0, (N, T.shape[1]))
    x = u @ T.T + a
    v = np.einsum("ij,ij->i", x, x)
    dev = v - v.mean()
    var = float(dev @ dev) / (N - 1)
    mu4 = float(np.mean(dev ** 4))
    se = np.sqrt(max((mu4 - var * var * (N - 3) / (N - 1)) / N, 0.0))
    return var, float(se)


def random_translation_case(seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = make_rng(seed)
    m = int(rng.integers(1, 7))
    rows = int(rng.integers(m, m + 3))
    return rng.standard_normal((rows, m)), rng.standard_normal(rows)


def check_worked_examples() -> Check:
    r = body_report(enumerate_tiling(orthonormalize([[1.0, 1.0]])))
    got = (r.mean_sq, r.variance, r.lambda_sq, r.ratio)
    want = (2 / 3, 16 / 45, 2 / 3, 4 / 5)
    err = max(abs(g - w) for g, w in zip(got, want))
    return "worked example (diagonal line in R^2)", err <= 1e-12, f"max error {err:.2e}"


def check_weights_and_volume(trials: int = 10) -> Check:
    worst_w = worst_v = worst_sym = 0.0
    for n, k in ((8, 1), (8, 2), (10, 2), (12, 3)):
        for i in range(trials):
            sd = derive_seed(0, n, k, i)
            t = enumerate_tiling(haar_subspace(n, k, sd), seed=sd)
            worst_w = max(worst_w, abs(float(np.sum(t.weights)) - 1.0))
            zv = zonotope_volume(t.subspace)
            worst_v = max(worst_v, abs(t.total_volume - zv) / zv)
            worst_sym = max(worst_sym, float(np.max(np.abs(t.weights @ t.shifts))))
    ok = worst_w <= 1e-10 and worst_v <= 1e-9 and worst_sym <= 1e-10
    return ("weight normalization / volume cross-check / antipodal balance", ok,
            f"|sum w - 1| {worst_w:.1e}, rel vol err {worst_v:.1e}, |sum w a| {worst_sym:.1e}")


def check_translation_identity(cases: int = 10, N: int = 200_000) -> Check:
    worst = 0.0
    for i in range(cases):
        T, a = random_translation_case(derive_seed(1, i))
        exact = translated_variance(T, a)
        est, se = mc_translated_variance(T, a, N, derive_seed(2, i))
        worst = max(worst, abs(est - exact) / se)
    return "translation identity vs Monte Carlo", worst <= 4.0, f"max |z| {worst:.2f}"


def check_direction_moments(trials: int = 10) -> Check:
    worst = 0.0
    for i in range(trials):
        s = haar_subspace(9, 3, derive_seed(3, i))
        t = enumerate_tiling(s, seed=i)
        rng = make_rng(derive_seed(4, i))
        theta = s.from_E_coords(rng.standard_normal(s.dim))
        theta /= np.linalg.norm(theta)
        th_E = s.to_E_coords(theta)
        for j in range(t.l):
            f = t.face(j)
            lhs = face_moment_dir(s, f, theta) - float(t.shifts[j] @ th_E) ** 2
            rhs = 1 / 3 - float(np.sum(theta[f.index0] ** 2)) / 3
            worst = max(worst, abs(lhs - rhs))
    return "centered directional moment identity", worst <= 1e-10, f"max error {worst:.1e}"


def check_sampler_equivalence(trials: int = 3, N: int = 20_000) -> Check:
    worst = 0.0
    for i, (n, k) in enumerate(((5, 1), (6, 2), (7, 2))[:trials]):
        sd = derive_seed(5, n, k, i)
        s = haar_subspace(n, k, sd)
        t = enumerate_tiling(s, seed=sd)
        a = mc_moments(sample_uniform(t, N, derive_seed(sd, 1)))
        b = mc_moments(rejection_sample(s, N, derive_seed(sd, 2)))
        z_mean = abs(a.mean_sq_hat - b.mean_sq_hat) / np.hypot(a.se_mean, b.se_mean)
        z_var = abs(a.var_sq_hat - b.var_sq_hat) / np.hypot(a.se_var, b.se_var)
        worst = max(worst, z_mean, z_var)
    return "exact vs rejection sampler", worst <= 4.0, f"max |z| {worst:.2f}"


def check_bounds(trials: int = 30) -> Check:
    bad = 0
    for n, k in ((12, 1), (12, 2), (12, 3)):
        for i in range(trials):
            sd = derive_seed(6, n, k, i)
            r = body_report(enumerate_tiling(haar_subspace(n, k, sd), seed=sd))
            bad += not r.bounds_ok
    return "moment / eigenvalue / face-deviation bounds", bad == 0, f"{bad} violations"


CHECKS: list[Callable[[], Check]] = [
    check_worked_examples,
    check_weights_and_volume,
    check_translation_identity,
    check_direction_moments,
    check_sampler_equivalence,
    check_bounds,
]


def run_selftest(echo: Callable[[str], None] | None = print) -> bool:
    ok = True
    for check in CHECKS:
        name, passed, detail = check()
        ok &= passed
        if echo:
            echo(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    return ok
