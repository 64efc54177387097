"""Uniform sampling on K and Monte Carlo moment estimates.

Two samplers target the same law:

* ``sample_uniform`` picks a tile with probability equal to its weight and a
  uniform point of that tile (exact, uses the tiling);
* ``rejection_sample`` draws from a bounding box in E-coordinates and keeps
  points of K (oracle, never touches the tiling).

Membership in K is decided either by LP feasibility of the fiber or by the
facet inequalities of the zonotope; both are independent of the tiling.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import AcceptanceTooLow, DimensionMismatch, EmptyBatch, TooManySubsets
from .lp import phase_one
from .rng import make_rng
from .subspace import Subspace
from .tiling import SUBSET_CAP, Tiling, combinations_array

CONTAINS_TOL = 1e-9
STREAM_CHUNK = 1 << 16
MIN_ACCEPTANCE = 1e-6
GUARD_PROPOSALS = 100_000

Method = Literal["exact", "rejection"]


@dataclass(frozen=True, eq=False)
class SampleBatch:
    points: NDArray[np.float64]
    tile_ids: NDArray[np.intp] | None
    seed: int
    method: Method
    proposals: int = 0

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def acceptance_rate(self) -> float:
        return len(self) / self.proposals if self.proposals else 1.0


@dataclass(frozen=True)
class MCMoments:
    mean_sq_hat: float
    var_sq_hat: float
    se_mean: float
    se_var: float
    n_samples: int


def sample_uniform(t: Tiling, n_samples: int, seed: int = 0) -> SampleBatch:
    """Exact uniform sample of K through the tiling.

    A point of tile i is the projection of a uniform point of face F_i, so
    each row is produced as B y with y uniform on the free coordinates and
    y equal to the face signs on the fixed ones.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    s = t.subspace
    B = s.basis
    cdf = np.cumsum(t.weights)
    cdf /= cdf[-1]
    pts = np.empty((n_samples, s.dim))
    ids = np.empty(n_samples, dtype=np.intp)
    for c, start in enumerate(range(0, n_samples, STREAM_CHUNK)):
        size = min(STREAM_CHUNK, n_samples - start)
        rng = make_rng(seed, c)
        tiles = np.searchsorted(cdf, rng.random(size), side="right")
        np.minimum(tiles, t.l - 1, out=tiles)
        y = rng.uniform(-1.0, 1.0, (size, s.n))
        if s.k:
            y[np.arange(size)[:, None], t.fixed[tiles]] = t.signs[tiles]
        pts[start:start + size] = y @ B.T
        ids[start:start + size] = tiles
    return SampleBatch(points=pts, tile_ids=ids, seed=seed, method="exact")


class ZonotopeFacets:
    """Facet inequalities |<x, u>| <= h(u) of K = P_E(B_inf^n) in E-coordinates.

    Every facet normal of a zonotope is orthogonal to m-1 linearly independent
    generators, so scanning all (m-1)-subsets of generators yields a complete
    (possibly redundant) list; h(u) = sum_j |<u, g_j>| is the support function.
    """

    def __init__(self, s: Subspace, cap: int = SUBSET_CAP):
        m, n = s.dim, s.n
        G = s.basis  # columns are the generators P_E e_j in E-coordinates
        if m == 1:
            U = np.ones((1, 1))
        else:
            if comb(n, m - 1) > cap:
                raise TooManySubsets(f"C({n},{m - 1}) facet candidates exceed the cap of {cap}")
            subsets = combinations_array(n, m - 1)
            stacks = np.transpose(G[:, subsets], (1, 0, 2))
            left, sv, _ = np.linalg.svd(stacks, full_matrices=True)
            ok = sv[:, -1] > 1e-10 * sv[:, :1].max()
            U = left[ok, :, -1]
        self.normals = U
        self.offsets = np.abs(U @ G).sum(axis=1)

    def contains_many(self, X: ArrayLike, tol: float = CONTAINS_TOL) -> NDArray[np.bool_]:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.all(np.abs(X @ self.normals.T) <= self.offsets + tol, axis=1)


def contains(s: Subspace, x: ArrayLike, tol: float = CONTAINS_TOL,
             method: Literal["lp", "facets"] = "lp") -> bool:
    """True iff x (E-coordinates) lies in P_E(B_inf^n) up to ``tol``.

    The default decides feasibility of the fiber {y in [-1,1]^n : B y = x}
    with a phase-one simplex; ``method="facets"`` uses the zonotope facets.
    NumericalFailure propagates instead of being reported as "outside".
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != s.dim:
        raise DimensionMismatch(f"point needs {s.dim} E-coordinates, got {x.size}")
    if method == "facets":
        return bool(_facets(s).contains_many(x[None, :], tol)[0])
    res = phase_one(s.basis, x, -1.0, 1.0, tol=tol * np.sqrt(s.dim))
    return res.feasible


@lru_cache(maxsize=16)
def _facets(s: Subspace) -> ZonotopeFacets:
    return ZonotopeFacets(s)


def bounding_box(s: Subspace) -> NDArray[np.float64]:
    """Half-widths of the tight axis box: max over the cube of <b_r, y> is ||b_r||_1."""
    return np.abs(s.basis).sum(axis=1)


def rejection_sample(s: Subspace, n_samples: int, seed: int = 0, tol: float = CONTAINS_TOL,
                     membership: Literal["facets", "lp"] = "facets") -> SampleBatch:
    """Uniform sample of K by rejection from its bounding box in E-coordinates."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    half = bounding_box(s)
    if membership == "facets":
        test = _facets(s).contains_many
    else:
        def test(X, tol):
            return np.array([contains(s, x, tol) for x in X], dtype=bool)
    out: list[NDArray[np.float64]] = []
    have = 0
    proposals = 0
    c = 0
    while have < n_samples:
        rng = make_rng(seed, c)
        c += 1
        X = rng.uniform(-1.0, 1.0, (STREAM_CHUNK, s.dim)) * half
        mask = test(X, tol)
        acc = X[mask]
        need = n_samples - have
        if acc.shape[0] >= need:
            # count proposals up to and including the last accepted point used
            last = np.flatnonzero(mask)[need - 1]
            proposals += int(last) + 1
            out.append(acc[:need])
            have = n_samples
            break
        proposals += STREAM_CHUNK
        out.append(acc)
        have += acc.shape[0]
        if proposals >= GUARD_PROPOSALS and have / proposals < MIN_ACCEPTANCE:
            raise AcceptanceTooLow(f"acceptance rate {have / proposals:.3g} after {proposals} proposals")
    pts = np.vstack(out) if out else np.zeros((0, s.dim))
    return SampleBatch(points=pts, tile_ids=None, seed=seed, method="rejection", proposals=proposals)


def mc_moments(batch: SampleBatch | ArrayLike) -> MCMoments:
    """Sample mean and unbiased variance of |x|^2 with their standard errors.

    The variance SE uses the fourth central moment:
    Var(s^2) ~ (mu4 - sigma^4 (N-3)/(N-1)) / N.
    """
    X = batch.points if isinstance(batch, SampleBatch) else np.atleast_2d(np.asarray(batch, dtype=np.float64))
    N = X.shape[0]
    if N < 2:
        raise EmptyBatch(f"need at least 2 samples, got {N}")
    v = np.einsum("ij,ij->i", X, X)
    mean = float(v.mean())
    dev = v - mean
    var = float(dev @ dev) / (N - 1)
    mu4 = float(np.mean(dev ** 4))
    var_of_var = (mu4 - var * var * (N - 3) / (N - 1)) / N
    return MCMoments(mean_sq_hat=mean, var_sq_hat=var, se_mean=float(np.sqrt(var / N)),
                     se_var=float(np.sqrt(max(var_of_var, 0.0))), n_samples=N)
