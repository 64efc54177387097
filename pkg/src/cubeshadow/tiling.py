"""Tilings of the cube shadow K = P_E(B_inf^n) by projected (n-k)-faces.

For a generic direction xi in E-perp, each fiber P_E^{-1}(x) of the cube has
a unique xi-maximal vertex. That vertex has k coordinates pinned at +-1, so
it lies on an (n-k)-face F, and the faces selected this way have projections
that cover K with disjoint interiors.

Concretely, a k-subset S of coordinates contributes a tile iff the k x k
matrix M_S (columns: E-perp coordinates of e_i, i in S) is nonsingular; the
signs are the signs of the solution of M_S c = xi. Since [basis; complement]
is an orthogonal matrix, |det M_S| equals |det T_F| for the complementary
minor, which gives the tile volume without forming (n-k) x (n-k) matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import combinations, islice
from math import comb
from typing import Iterator

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (DegenerateDirection, DegenerateSubspace, DimensionMismatch,
                     Outside, TooManySubsets)
from .rng import make_rng
from .subspace import Subspace

SUBSET_CAP = 10**7
DET_RTOL = 1e-10
SIGN_RTOL = 1e-10
LOCATE_TOL = 1e-9
MAX_DIRECTION_ATTEMPTS = 16
CHUNK = 1 << 15
PRUNE_FROM = 50_000     # C(n, k) above which the pruned search is tried first
PRUNE_TRIAL_NODES = 20_000


@dataclass(frozen=True)
class Face:
    """(n-k)-face {x in B_inf^n : x_i = eps_i for i in fixed}, indices 1-based."""

    fixed: tuple[int, ...]
    signs: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "fixed", tuple(int(i) for i in self.fixed))
        object.__setattr__(self, "signs", tuple(int(e) for e in self.signs))
        if len(self.fixed) != len(self.signs):
            raise ValueError("fixed and signs must have equal length")
        if any(b <= a for a, b in zip(self.fixed, self.fixed[1:])):
            raise ValueError(f"fixed indices must be strictly increasing: {self.fixed}")
        if any(e not in (-1, 1) for e in self.signs):
            raise ValueError(f"signs must be +-1: {self.signs}")
        if self.fixed and self.fixed[0] < 1:
            raise ValueError("face indices are 1-based")

    @property
    def k(self) -> int:
        return len(self.fixed)

    @property
    def index0(self) -> NDArray[np.intp]:
        return np.array(self.fixed, dtype=np.intp) - 1

    @property
    def sign_vector(self) -> NDArray[np.float64]:
        return np.array(self.signs, dtype=np.float64)

    def check(self, n: int, k: int) -> None:
        if self.k != k:
            raise DimensionMismatch(f"face fixes {self.k} coordinates, subspace has k={k}")
        if self.fixed and self.fixed[-1] > n:
            raise DimensionMismatch(f"face index {self.fixed[-1]} exceeds n={n}")

    def vertex_sum(self, n: int) -> NDArray[np.float64]:
        """sum_j eps_j e_{i_j} in R^n."""
        v = np.zeros(n)
        v[self.index0] = self.sign_vector
        return v

    def free(self, n: int) -> NDArray[np.intp]:
        mask = np.ones(n, dtype=bool)
        mask[self.index0] = False
        return np.flatnonzero(mask)

    def negated(self) -> "Face":
        return Face(self.fixed, tuple(-e for e in self.signs))


@dataclass(frozen=True, eq=False)
class TileGeometry:
    """P_E(F) = shift + map(B_inf^{n-k}), everything in E-coordinates."""

    shift: NDArray[np.float64]
    map: NDArray[np.float64]
    gram: NDArray[np.float64]
    volume: float


def tile_geometry(s: Subspace, f: Face) -> TileGeometry:
    f.check(s.n, s.k)
    B = s.basis
    shift = B[:, f.index0] @ f.sign_vector
    T = B[:, f.free(s.n)]
    gram = T.T @ T
    volume = 2.0 ** s.dim * abs(float(np.linalg.det(T))) if s.dim else 1.0
    return TileGeometry(shift=shift, map=T, gram=gram, volume=volume)


@lru_cache(maxsize=8)
def combinations_array(n: int, k: int) -> NDArray[np.int32]:
    """All k-subsets of range(n) in lexicographic order, shape (C(n, k), k)."""
    suffix: dict[tuple[int, int], NDArray[np.int32]] = {}

    def build(start: int, r: int) -> NDArray[np.int32]:
        key = (start, r)
        if key in suffix:
            return suffix[key]
        if r == 0:
            out = np.zeros((1, 0), dtype=np.int32)
        else:
            parts = []
            for i in range(start, n - r + 1):
                rest = build(i + 1, r - 1)
                head = np.full((rest.shape[0], 1), i, dtype=np.int32)
                parts.append(np.hstack([head, rest]))
            out = np.vstack(parts) if parts else np.zeros((0, r), dtype=np.int32)
        suffix[key] = out
        return out

    out = build(0, k)
    out.setflags(write=False)
    return out


def _check_cap(n: int, r: int, cap: int) -> None:
    if comb(n, r) > cap:
        raise TooManySubsets(f"C({n},{r}) = {comb(n, r)} exceeds the cap of {cap}")


def _chunks(total: int, size: int = CHUNK) -> Iterator[slice]:
    for start in range(0, total, size):
        yield slice(start, min(start + size, total))


def _stack_columns(A: NDArray[np.float64], idx: NDArray[np.integer]) -> NDArray[np.float64]:
    """(L, rows, r) stack of column-submatrices A[:, idx[l]]."""
    return np.transpose(A[:, idx], (1, 0, 2))


def _batched_abs_det(A: NDArray[np.float64], subsets: NDArray[np.integer]) -> NDArray[np.float64]:
    out = np.empty(subsets.shape[0])
    for sl in _chunks(subsets.shape[0]):
        out[sl] = np.abs(np.linalg.det(_stack_columns(A, subsets[sl])))
    return out


def _pruned_subsets(C: NDArray[np.float64], budget: int) -> NDArray[np.int32]:
    """k-subsets S with C[:, S] nonsingular, found by depth-first search.

    A column set that is already rank deficient is never extended, so
    subspaces with many degenerate subsets (e.g. coordinate subspaces) stay
    cheap even when C(n, k) is astronomically large.
    """
    k, n = C.shape
    found: list[tuple[int, ...]] = []
    visited = 0

    def dfs(start: int, chosen: list[int], q: list[NDArray[np.float64]]) -> None:
        nonlocal visited
        if len(chosen) == k:
            found.append(tuple(chosen))
            return
        for i in range(start, n - (k - len(chosen)) + 1):
            visited += 1
            if visited > budget:
                raise TooManySubsets(f"subset search exceeded the cap of {budget} nodes")
            v = C[:, i].copy()
            for _ in range(2):
                for u in q:
                    v -= (u @ v) * u
            r = np.linalg.norm(v)
            if r <= 1e-12:
                continue
            dfs(i + 1, chosen + [i], q + [v / r])

    dfs(0, [], [])
    if not found:
        return np.zeros((0, k), dtype=np.int32)
    return np.array(found, dtype=np.int32).reshape(len(found), k)


@dataclass(frozen=True, eq=False)
class Tiling:
    """Faces whose projections tile K, stored column-wise as arrays.

    ``fixed`` holds 0-based coordinate indices (one row per tile, sorted);
    use :meth:`face` for the 1-based :class:`Face` view.
    """

    subspace: Subspace
    fixed: NDArray[np.int32]
    signs: NDArray[np.int8]
    volumes: NDArray[np.float64]
    weights: NDArray[np.float64]
    total_volume: float
    direction: NDArray[np.float64]
    det_cutoff: float = field(default=0.0)

    @property
    def l(self) -> int:
        return int(self.fixed.shape[0])

    def __len__(self) -> int:
        return self.l

    def face(self, i: int) -> Face:
        return Face(tuple(int(j) + 1 for j in self.fixed[i]), tuple(int(e) for e in self.signs[i]))

    @property
    def faces(self) -> list[Face]:
        return [self.face(i) for i in range(self.l)]

    def geometry(self, i: int) -> TileGeometry:
        return tile_geometry(self.subspace, self.face(i))

    def shifts_for(self, sl: slice | NDArray[np.integer]) -> NDArray[np.float64]:
        B = self.subspace.basis
        idx = self.fixed[sl]
        sg = self.signs[sl].astype(np.float64)
        return np.einsum("mlk,lk->lm", B[:, idx], sg) if idx.shape[1] else np.zeros((idx.shape[0], B.shape[0]))

    @cached_property
    def shifts(self) -> NDArray[np.float64]:
        out = self.shifts_for(slice(None))
        out.setflags(write=False)
        return out

    @cached_property
    def free(self) -> NDArray[np.intp]:
        n = self.subspace.n
        mask = np.ones((self.l, n), dtype=bool)
        mask[np.arange(self.l)[:, None], self.fixed] = False
        return np.nonzero(mask)[1].reshape(self.l, n - self.subspace.k)

    @cached_property
    def _inverse_maps(self) -> NDArray[np.float64]:
        T = _stack_columns(self.subspace.basis, self.free)
        return np.linalg.inv(T)

    def to_dict(self) -> dict:
        shifts = self.shifts
        return {
            "n": self.subspace.n,
            "k": self.subspace.k,
            "xi": [float(x) for x in self.direction],
            "total_volume": float(self.total_volume),
            "tiles": [
                {
                    "fixed": [int(j) + 1 for j in self.fixed[i]],
                    "signs": [int(e) for e in self.signs[i]],
                    "weight": float(self.weights[i]),
                    "volume": float(self.volumes[i]),
                    "shift": [float(x) for x in shifts[i]],
                }
                for i in range(self.l)
            ],
        }


def _direction_coords(s: Subspace, direction: ArrayLike) -> NDArray[np.float64]:
    xi = np.asarray(direction, dtype=np.float64).ravel()
    if xi.size == s.n:
        coords = s.to_perp_coords(xi)
        if np.linalg.norm(s.to_E_coords(xi)) > 1e-10 * max(np.linalg.norm(xi), 1.0):
            raise ValueError("direction must lie in the orthogonal complement of E")
        xi = coords
    if xi.size != s.k:
        raise DimensionMismatch(f"direction needs {s.k} E-perp coordinates or {s.n} ambient ones")
    if not np.any(xi):
        raise ValueError("direction must be nonzero")
    return xi


def _signs_for(M: NDArray[np.float64], xi: NDArray[np.float64], rtol: float) -> NDArray[np.int8] | None:
    c = np.linalg.solve(M, np.broadcast_to(xi[:, None], M.shape[:-1] + (1,)))[..., 0]
    scale = np.max(np.abs(c), axis=1, keepdims=True)
    if np.any(np.abs(c) <= rtol * scale):
        return None
    return np.where(c > 0, 1, -1).astype(np.int8)


def enumerate_tiling(s: Subspace, direction: ArrayLike | None = None, seed: int = 0, *,
                     det_rtol: float = DET_RTOL, sign_rtol: float = SIGN_RTOL,
                     cap: int = SUBSET_CAP) -> Tiling:
    """Upper-face tiling of P_E(B_inf^n).

    ``direction`` is xi, given either in E-perp coordinates (length k) or as
    an ambient vector of R^n lying in E-perp. When omitted, a random unit
    vector of E-perp is drawn from ``seed`` and redrawn (up to 16 times) if it
    is degenerate for some subset. A degenerate user-supplied direction is an
    error.
    """
    n, k, m = s.n, s.k, s.dim
    C = s.complement_basis
    if k == 0:
        return Tiling(s, np.zeros((1, 0), np.int32), np.zeros((1, 0), np.int8),
                      np.array([2.0 ** m]), np.array([1.0]), 2.0 ** m, np.zeros(0))

    total_subsets = comb(n, k)
    if total_subsets > cap:
        subsets = _pruned_subsets(C, cap)
    elif total_subsets > PRUNE_FROM:
        # sparse (e.g. coordinate) subspaces finish within the trial budget
        try:
            subsets = _pruned_subsets(C, PRUNE_TRIAL_NODES)
        except TooManySubsets:
            subsets = combinations_array(n, k)
    else:
        subsets = combinations_array(n, k)
    dets = _batched_abs_det(C, subsets)
    if dets.size == 0 or dets.max() == 0.0:
        raise DegenerateSubspace("every k x k minor of the complement basis vanishes")
    cutoff = det_rtol * float(dets.max())
    keep = dets > cutoff
    subsets = np.ascontiguousarray(subsets[keep])
    dets = dets[keep]

    user_xi = direction is not None
    rng = make_rng(seed, 0x71)
    for attempt in range(MAX_DIRECTION_ATTEMPTS if not user_xi else 1):
        if user_xi:
            xi = _direction_coords(s, direction)
        else:
            xi = rng.standard_normal(k)
            xi /= np.linalg.norm(xi)
        signs = np.empty(subsets.shape, dtype=np.int8)
        ok = True
        for sl in _chunks(subsets.shape[0]):
            sg = _signs_for(_stack_columns(C, subsets[sl]), xi, sign_rtol)
            if sg is None:
                ok = False
                break
            signs[sl] = sg
        if ok:
            break
    else:
        ok = False
    if not ok:
        raise DegenerateDirection("direction is not generic for this subspace"
                                  + ("" if user_xi else f" after {MAX_DIRECTION_ATTEMPTS} draws"))

    volumes = (2.0 ** m) * dets
    total = float(np.sum(volumes))
    weights = volumes / total
    for arr in (subsets, signs, volumes, weights, xi):
        arr.setflags(write=False)
    return Tiling(subspace=s, fixed=subsets, signs=signs, volumes=volumes, weights=weights,
                  total_volume=total, direction=xi, det_cutoff=cutoff)


def zonotope_volume(s: Subspace, cap: int = SUBSET_CAP) -> float:
    """Volume of P_E(B_inf^n) as 2^(n-k) times the sum of |det| over all
    (n-k)-subsets of the projected generators."""
    n, m = s.n, s.dim
    _check_cap(n, m, cap)
    if m == 0:
        return 1.0
    subsets = combinations_array(n, m) if comb(n, m) <= 2_000_000 else None
    if subsets is not None:
        return float(2.0 ** m * np.sum(_batched_abs_det(s.basis, subsets)))
    total = 0.0
    it = combinations(range(n), m)
    while True:
        block = list(islice(it, CHUNK))
        if not block:
            break
        total += float(np.sum(_batched_abs_det(s.basis, np.array(block, dtype=np.int32))))
    return 2.0 ** m * total


@dataclass(frozen=True, eq=False)
class Location:
    index: int
    u: NDArray[np.float64]
    cube_point: NDArray[np.float64]
    boundary: bool
    candidates: tuple[int, ...]


def _solve_all(t: Tiling, X: NDArray[np.float64]) -> NDArray[np.float64]:
    """u[p, i] = T_i^{-1} (x_p - shift_i), shape (N, l, m)."""
    D = X[:, None, :] - t.shifts[None, :, :]
    return np.einsum("lij,plj->pli", t._inverse_maps, D)


def locate(t: Tiling, x: ArrayLike, tol: float = LOCATE_TOL) -> Location:
    """Find the tile containing ``x`` (E-coordinates) and its preimage on the face.

    Raises Outside when no tile accepts. When several tiles accept within
    ``tol`` the lowest index is returned with ``boundary=True``.
    """
    s = t.subspace
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != s.dim:
        raise DimensionMismatch(f"point needs {s.dim} E-coordinates, got {x.size}")
    U = _solve_all(t, x[None, :])[0]
    ok = np.all(np.abs(U) <= 1.0 + tol, axis=1)
    cand = tuple(int(i) for i in np.flatnonzero(ok))
    if not cand:
        raise Outside(f"point {x.tolist()} is not in any tile")
    i = cand[0]
    y = np.empty(s.n)
    y[t.fixed[i]] = t.signs[i]
    y[t.free[i]] = U[i]
    return Location(index=i, u=U[i].copy(), cube_point=y, boundary=len(cand) > 1, candidates=cand)


def locate_counts(t: Tiling, X: ArrayLike, tol: float = LOCATE_TOL,
                  chunk: int = 1024) -> tuple[NDArray[np.intp], NDArray[np.intp]]:
    """For each row of X: number of accepting tiles and the lowest accepting index (-1 if none)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    counts = np.empty(X.shape[0], dtype=np.intp)
    first = np.empty(X.shape[0], dtype=np.intp)
    step = max(1, chunk * 64 // max(t.l, 1))
    for sl in _chunks(X.shape[0], step):
        ok = np.all(np.abs(_solve_all(t, X[sl])) <= 1.0 + tol, axis=2)
        counts[sl] = ok.sum(axis=1)
        first[sl] = np.where(ok.any(axis=1), ok.argmax(axis=1), -1)
    return counts, first

