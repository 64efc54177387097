"""Phase-1 feasibility for {y : A y = b, lo <= y <= hi} by bounded-variable simplex.

Dense tableau-free implementation: the basis matrix is re-factorized at each
pivot, which is fine for the tens-of-variables systems used here. Pivoting
follows Bland's rule (lowest eligible index for both entering and leaving
variables), so the method terminates on degenerate problems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import NumericalFailure

PIVOT_TOL = 1e-11
COST_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FeasibilityResult:
    feasible: bool
    infeasibility: float  # optimal sum of artificial variables
    y: NDArray[np.float64]
    iterations: int


def phase_one(A: ArrayLike, b: ArrayLike, lo: ArrayLike, hi: ArrayLike, tol: float = 1e-9,
              max_iter: int | None = None) -> FeasibilityResult:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    b = np.asarray(b, dtype=np.float64).ravel()
    m, n = A.shape
    lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), (n,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), (n,)).copy()
    if b.size != m:
        raise ValueError("b must have one entry per row of A")
    if np.any(lo > hi) or not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
        raise ValueError("bounds must be finite with lo <= hi")
    if max_iter is None:
        max_iter = 50 * (n + m) + 100

    # structural variables start nonbasic at their lower bound
    x = np.concatenate([lo, np.zeros(m)])
    resid = b - A @ lo
    sgn = np.where(resid >= 0, 1.0, -1.0)
    full = np.hstack([A, np.diag(sgn)])
    x[n:] = np.abs(resid)
    upper = np.concatenate([hi, np.full(m, np.inf)])
    lower = np.concatenate([lo, np.zeros(m)])
    cost = np.concatenate([np.zeros(n), np.ones(m)])
    basis = list(range(n, n + m))
    at_upper = np.zeros(n + m, dtype=bool)

    for it in range(max_iter):
        Bm = full[:, basis]
        try:
            nonbasic = np.ones(n + m, dtype=bool)
            nonbasic[basis] = False
            rhs = b - full[:, nonbasic] @ x[nonbasic]
            xB = np.linalg.solve(Bm, rhs)
            pi = np.linalg.solve(Bm.T, cost[basis])
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("singular basis in phase-one simplex") from exc
        x[basis] = xB
        d = cost - pi @ full

        entering = -1
        for j in range(n):  # artificials never re-enter
            if not nonbasic[j] or hi[j] == lo[j]:
                continue
            if (not at_upper[j] and d[j] < -COST_TOL) or (at_upper[j] and d[j] > COST_TOL):
                entering = j
                break
        if entering < 0:
            obj = float(np.sum(x[n:]))
            y = np.clip(x[:n], lo, hi)
            return FeasibilityResult(obj <= tol, obj, y, it)

        direction = -1.0 if at_upper[entering] else 1.0
        try:
            alpha = np.linalg.solve(Bm, full[:, entering])
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("singular basis in phase-one simplex") from exc
        rate = -direction * alpha  # d x_B / d t
        step = upper[entering] - lower[entering]
        leave_pos = -1
        leave_to_upper = False
        for pos, var in enumerate(basis):
            r = rate[pos]
            if r < -PIVOT_TOL:
                limit = (x[var] - lower[var]) / -r
                to_up = False
            elif r > PIVOT_TOL and np.isfinite(upper[var]):
                limit = (upper[var] - x[var]) / r
                to_up = True
            else:
                continue
            limit = max(limit, 0.0)
            if limit < step or (limit == step and leave_pos >= 0 and var < basis[leave_pos]):
                step, leave_pos, leave_to_upper = limit, pos, to_up
        if not np.isfinite(step):
            raise NumericalFailure("unbounded ray in a phase-one problem")

        if leave_pos < 0:
            # bound flip of the entering variable, basis unchanged
            at_upper[entering] = not at_upper[entering]
            x[entering] = upper[entering] if at_upper[entering] else lower[entering]
            continue
        x[entering] += direction * step
        leaving = basis[leave_pos]
        at_upper[leaving] = leave_to_upper
        x[leaving] = upper[leaving] if leave_to_upper else lower[leaving]
        basis[leave_pos] = entering
        at_upper[entering] = False
    raise NumericalFailure(f"phase-one simplex did not converge in {max_iter} iterations")
