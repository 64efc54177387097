"""Subspaces of R^n held as orthonormal bases, Haar sampling, projector norms."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionMismatch, RankDeficient
from .rng import make_rng

RANK_TOL = 1e-10


def _mgs(rows: NDArray[np.float64], tol: float) -> list[NDArray[np.float64]]:
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    Raises RankDeficient as soon as a row has no component outside the span
    of the previous ones (relative to its own norm).
    """
    basis: list[NDArray[np.float64]] = []
    for i, row in enumerate(rows):
        v = np.array(row, dtype=np.float64)
        norm0 = np.linalg.norm(v)
        for _ in range(2):
            for q in basis:
                v -= (q @ v) * q
        norm = np.linalg.norm(v)
        if norm0 == 0.0 or norm <= tol * norm0:
            raise RankDeficient(f"row {i} is (numerically) in the span of the previous rows")
        basis.append(v / norm)
    return basis


def _complete(basis: list[NDArray[np.float64]], n: int) -> list[NDArray[np.float64]]:
    """Extend an orthonormal list to a basis of R^n using standard basis vectors.

    At every step the e_i with the largest residual is taken (lowest index on
    ties), so the result is deterministic and well conditioned.
    """
    current = [q.copy() for q in basis]
    extra: list[NDArray[np.float64]] = []
    while len(current) < n:
        Q = np.array(current).reshape(len(current), n)
        resid = np.eye(n) - Q.T @ Q
        norms = np.linalg.norm(resid, axis=0)
        i = int(np.argmax(norms))
        v = np.zeros(n)
        v[i] = 1.0
        for _ in range(2):
            for q in current:
                v -= (q @ v) * q
        v /= np.linalg.norm(v)
        current.append(v)
        extra.append(v)
    return extra


@dataclass(frozen=True, eq=False)
class Subspace:
    """An (n-k)-dimensional subspace E of R^n.

    ``basis`` rows are an orthonormal basis of E and ``complement_basis`` rows
    an orthonormal basis of the orthogonal complement.
    """

    n: int
    k: int
    basis: NDArray[np.float64]
    complement_basis: NDArray[np.float64]

    def __post_init__(self) -> None:
        self.basis.setflags(write=False)
        self.complement_basis.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.n - self.k

    @cached_property
    def projector(self) -> NDArray[np.float64]:
        P = self.basis.T @ self.basis
        P.setflags(write=False)
        return P

    @cached_property
    def complement_projector(self) -> NDArray[np.float64]:
        P = self.complement_basis.T @ self.complement_basis
        P.setflags(write=False)
        return P

    def project(self, v: ArrayLike) -> NDArray[np.float64]:
        """P_E v as a vector of R^n."""
        return self.basis.T @ self.to_E_coords(v)

    def to_E_coords(self, v: ArrayLike) -> NDArray[np.float64]:
        return to_E_coords(self, v)

    def from_E_coords(self, c: ArrayLike) -> NDArray[np.float64]:
        c = np.asarray(c, dtype=np.float64)
        if c.shape[-1] != self.dim:
            raise DimensionMismatch(f"expected {self.dim} E-coordinates, got {c.shape[-1]}")
        return c @ self.basis

    def to_perp_coords(self, v: ArrayLike) -> NDArray[np.float64]:
        v = np.asarray(v, dtype=np.float64)
        if v.shape[-1] != self.n:
            raise DimensionMismatch(f"expected a vector of length {self.n}, got {v.shape[-1]}")
        return v @ self.complement_basis.T


def orthonormalize(rows: ArrayLike, n: int | None = None, k: int | None = None,
                   tol: float = RANK_TOL) -> Subspace:
    """Build a Subspace spanned by ``rows`` (an (n-k) x n array)."""
    A = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    m, cols = A.shape
    if n is None:
        n = cols
    if k is None:
        k = n - m
    if cols != n or m != n - k:
        raise DimensionMismatch(f"rows have shape {A.shape}, expected ({n - k}, {n})")
    if not 0 <= k < n:
        raise ValueError(f"need 0 <= k < n, got n={n}, k={k}")
    if not np.all(np.isfinite(A)):
        raise ValueError("rows contain non-finite values")
    basis = _mgs(A, tol)
    extra = _complete(basis, n)
    B = np.array(basis).reshape(m, n)
    C = np.array(extra).reshape(k, n)
    return Subspace(n=n, k=k, basis=B, complement_basis=C)


def axis_subspace(n: int, k: int) -> Subspace:
    """E = span{e_1, ..., e_{n-k}}."""
    return orthonormalize(np.eye(n)[: n - k], n, k)


def haar_subspace(n: int, k: int, seed: int | np.random.SeedSequence) -> Subspace:
    """Haar-distributed subspace of dimension n-k (Gaussian rows, orthonormalized)."""
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got n={n}, k={k}")
    rng = make_rng(seed)
    return orthonormalize(rng.standard_normal((n - k, n)), n, k)


def to_E_coords(s: Subspace, v: ArrayLike) -> NDArray[np.float64]:
    """Coordinates of P_E v in the basis of E. Accepts a vector or a stack of rows."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != s.n:
        raise DimensionMismatch(f"expected a vector of length {s.n}, got {v.shape[-1]}")
    return v @ s.basis.T


@dataclass(frozen=True)
class ProjectorDistance:
    hs: float
    op: float


def projector_distance(s1: Subspace, s2: Subspace) -> ProjectorDistance:
    """Hilbert-Schmidt and operator norms of P_{E1} - P_{E2}."""
    if s1.n != s2.n or s1.k != s2.k:
        raise DimensionMismatch("subspaces must share n and k")
    D = s1.projector - s2.projector
    D = 0.5 * (D + D.T)
    hs = float(np.sqrt(np.sum(D * D)))
    eig = np.linalg.eigvalsh(D)
    op = float(np.max(np.abs(eig))) if eig.size else 0.0
    return ProjectorDistance(hs=hs, op=min(op, hs))


def read_subspace(path: str | Path) -> Subspace:
    """Load the plain-text subspace format.

    Line 1 holds ``n k``; the next n-k lines hold basis rows (any spanning
    set, orthonormalized on load). Blank lines and ``#`` comments are skipped.
    """
    lines = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise ValueError(f"{path}: empty subspace file")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError(f"{path}: first line must be 'n k'")
    n, k = int(head[0]), int(head[1])
    if not 0 <= k < n:
        raise ValueError(f"{path}: need 0 <= k < n, got n={n}, k={k}")
    rows = [[float(t) for t in line.replace(",", " ").split()] for line in lines[1:]]
    if len(rows) != n - k or any(len(r) != n for r in rows):
        raise ValueError(f"{path}: expected {n - k} rows of {n} numbers")
    return orthonormalize(rows, n, k)


def write_subspace(s: Subspace, path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{s.n} {s.k}\n")
        for row in s.basis:
            fh.write(" ".join(format(x, ".17g") for x in row) + "\n")
