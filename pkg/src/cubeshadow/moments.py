"""Closed-form moments of the uniform measure on the cube shadow K.

Everything here is exact up to floating point: per-face second moments,
per-tile variances of |x|^2 (translation identity applied to a linear image
of the cube), the law-of-total-variance decomposition over the tiling, the
covariance matrix and its top eigenvalue, and the conjecture ratio
Var|x|^2 / (lambda^2 E|x|^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionMismatch
from .subspace import Subspace
from .tiling import CHUNK, Face, TileGeometry, Tiling

BOUND_TOL = 1e-9

# coordinate moments of the uniform law on [-1, 1]
_M2 = 1.0 / 3.0
_VAR_SQ = 1.0 / 5.0 - 1.0 / 9.0  # Var(t^2) = 4/45


def _unit_vector_in(s: Subspace, theta: ArrayLike, tol: float = 1e-10) -> NDArray[np.float64]:
    theta = np.asarray(theta, dtype=np.float64).ravel()
    if theta.size != s.n:
        raise DimensionMismatch(f"theta needs {s.n} ambient coordinates, got {theta.size}")
    if abs(np.linalg.norm(theta) - 1.0) > tol:
        raise ValueError("theta must be a unit vector")
    if np.linalg.norm(s.project(theta) - theta) > tol:
        raise ValueError("theta must lie in E")
    return theta


def face_moment_dir(s: Subspace, f: Face, theta: ArrayLike) -> float:
    """E over P_E(F) of <x, theta>^2 for a unit theta in E (ambient coordinates)."""
    f.check(s.n, s.k)
    theta = _unit_vector_in(s, theta)
    th = theta[f.index0]
    return _M2 + float(f.sign_vector @ th) ** 2 - _M2 * float(th @ th)


def face_moment(s: Subspace, f: Face) -> float:
    """E over P_E(F) of |x|^2."""
    f.check(s.n, s.k)
    P = s.projector
    idx = f.index0
    eps = f.sign_vector
    a2 = float(eps @ P[np.ix_(idx, idx)] @ eps)
    return s.dim * _M2 + a2 - _M2 * float(np.trace(P[np.ix_(idx, idx)]))


def centered_quadratic_variance(Q: ArrayLike, tol: float = 1e-10) -> float:
    """Variance of u^T Q u for u uniform on [-1, 1]^m."""
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    if Q.shape[0] != Q.shape[1]:
        raise DimensionMismatch("Q must be square")
    if np.max(np.abs(Q - Q.T), initial=0.0) > tol:
        raise ValueError("Q must be symmetric")
    diag2 = float(np.sum(np.diag(Q) ** 2))
    off2 = float(np.sum(Q * Q)) - diag2
    return (4.0 / 45.0) * diag2 + (2.0 / 9.0) * off2


def tile_variance(g: TileGeometry) -> float:
    """Var of |x|^2 for x uniform on shift + map(B_inf^m)."""
    Ta = g.map.T @ g.shift
    return centered_quadratic_variance(g.gram) + (4.0 / 3.0) * float(Ta @ Ta)


def tile_mean(g: TileGeometry) -> float:
    return _M2 * float(np.trace(g.gram)) + float(g.shift @ g.shift)


@dataclass(frozen=True, eq=False)
class TileStats:
    """Per-tile E|x|^2 and Var|x|^2 plus the reductions needed for the covariance."""

    means: NDArray[np.float64]
    variances: NDArray[np.float64]
    sign_outer: NDArray[np.float64]   # sum_i w_i eps~_i eps~_i^T  (n x n)
    fixed_mass: NDArray[np.float64]   # sum_i w_i [j in S_i]      (n,)
    signed_mass: NDArray[np.float64]  # sum_i w_i eps~_i           (n,)


def tile_stats(t: Tiling) -> TileStats:
    """Vectorized tile statistics from the k x k blocks P[S, S] of the projector.

    With T the free-column block of the basis, T T^T = I - B_S B_S^T, so every
    quantity in the per-tile formulas reduces to P[S, S] and the sign vector.
    """
    s = t.subspace
    n, k, m = s.n, s.k, s.dim
    P = s.projector
    d = np.diag(P).copy()
    d2_total = float(np.sum(d * d))
    w = t.weights
    means = np.empty(t.l)
    variances = np.empty(t.l)
    sign_outer = np.zeros(n * n)
    fixed_mass = np.zeros(n)
    signed_mass = np.zeros(n)
    for start in range(0, t.l, CHUNK):
        sl = slice(start, min(start + CHUNK, t.l))
        idx = t.fixed[sl].astype(np.intp)
        eps = t.signs[sl].astype(np.float64)
        ws = w[sl]
        G = P[idx[:, :, None], idx[:, None, :]]
        Ge = np.einsum("lij,lj->li", G, eps)
        a2 = np.einsum("li,li->l", eps, Ge)
        dS = d[idx].sum(axis=1)
        means[sl] = m * _M2 + a2 - _M2 * dS
        frob = m - 2.0 * dS + np.einsum("lij,lij->l", G, G)
        diag2 = d2_total - (d[idx] ** 2).sum(axis=1)
        cqv = (4.0 / 45.0) * diag2 + (2.0 / 9.0) * (frob - diag2)
        Ta2 = a2 - np.einsum("li,li->l", Ge, Ge)
        variances[sl] = cqv + (4.0 / 3.0) * Ta2
        for p in range(k):
            fixed_mass += np.bincount(idx[:, p], weights=ws, minlength=n)
            signed_mass += np.bincount(idx[:, p], weights=ws * eps[:, p], minlength=n)
            for q in range(k):
                sign_outer += np.bincount(idx[:, p] * n + idx[:, q],
                                          weights=ws * eps[:, p] * eps[:, q], minlength=n * n)
    return TileStats(means=means, variances=variances, sign_outer=sign_outer.reshape(n, n),
                     fixed_mass=fixed_mass, signed_mass=signed_mass)


@dataclass(frozen=True, eq=False)
class MomentReport:
    n: int
    k: int
    mean_sq: float
    variance: float
    covariance: NDArray[np.float64]
    lambda_sq: float
    ratio: float
    tile_means: NDArray[np.float64]
    tile_variances: NDArray[np.float64]
    weights: NDArray[np.float64]
    mean_vector: NDArray[np.float64]
    within: float
    between: float
    max_face_dev: float
    lemma25_max_var_over_n: float
    bound_flags: dict[str, bool] = field(default_factory=dict)

    @property
    def per_tile(self) -> list[tuple[int, float, float]]:
        return [(i, float(e), float(v)) for i, (e, v) in enumerate(zip(self.tile_means, self.tile_variances))]

    @property
    def bounds_ok(self) -> bool:
        return all(self.bound_flags.values())

    def to_dict(self, per_tile: bool = True) -> dict:
        out = {
            "mean_sq": self.mean_sq,
            "variance": self.variance,
            "lambda_sq": self.lambda_sq,
            "ratio": self.ratio,
            "bounds": {
                "mean_lower": self.bound_flags["mean_lower"],
                "mean_upper": self.bound_flags["mean_upper"],
                "lambda_lower": self.bound_flags["lambda_lower"],
                "lemma26_ok": self.bound_flags["lemma26_ok"],
                "lemma25_max_var_over_n": self.lemma25_max_var_over_n,
            },
        }
        if per_tile:
            out["per_tile"] = [
                {"tile": i, "mean_sq": e, "variance": v} for i, e, v in self.per_tile
            ]
        return out


def body_report(t: Tiling, tol: float = BOUND_TOL) -> MomentReport:
    """Exact moments of the uniform measure on K assembled tile by tile."""
    s = t.subspace
    n, k, m = s.n, s.k, s.dim
    st = tile_stats(t)
    w = t.weights
    mean_sq = float(w @ st.means)
    within = float(w @ st.variances)
    between = float(w @ (st.means - mean_sq) ** 2)
    variance = within + between

    B = s.basis
    inner = _M2 * (np.eye(n) - np.diag(st.fixed_mass)) + st.sign_outer
    cov = B @ inner @ B.T
    cov = 0.5 * (cov + cov.T)
    lambda_sq = float(np.linalg.eigvalsh(cov)[-1])
    ratio = variance / (lambda_sq * mean_sq)

    max_dev = float(np.max(np.abs(st.means - mean_sq)))
    lo, hi = (n - 2 * k) / 3.0, (n + 2 * k) / 3.0
    flags = {
        "mean_lower": mean_sq >= lo - tol,
        "mean_upper": mean_sq <= hi + tol,
        "lambda_lower": lambda_sq >= (n - 2 * k) / (3.0 * m) - tol and lambda_sq >= mean_sq / m - tol,
        "lemma26_ok": max_dev <= 4.0 * k / 3.0 + tol,
        "face_bounds": bool(np.all(st.means >= lo - tol) and np.all(st.means <= hi + tol)),
    }
    return MomentReport(
        n=n, k=k, mean_sq=mean_sq, variance=variance, covariance=cov, lambda_sq=lambda_sq,
        ratio=ratio, tile_means=st.means, tile_variances=st.variances, weights=w,
        mean_vector=B @ st.signed_mass, within=within, between=between, max_face_dev=max_dev,
        lemma25_max_var_over_n=float(np.max(st.variances)) / n,
        bound_flags={key: bool(v) for key, v in flags.items()},
    )
