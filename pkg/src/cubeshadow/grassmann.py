"""Haar-ensemble experiments over the Grassmannian G(n, n-k).

Each trial draws its subspace from a seed derived from (run seed, trial
index), so the records do not depend on the number of workers or the order
in which trials finish.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from math import comb
from typing import Iterable, Iterator

import numpy as np

from .moments import BOUND_TOL, body_report, face_moment
from .rng import derive_seed
from .subspace import haar_subspace, projector_distance
from .errors import TooManySubsets
from .tiling import SUBSET_CAP, Face, enumerate_tiling

TAIL_MULTIPLES = (0.5, 1.0, 2.0, 4.0)
ENSEMBLE_FIELDS = ("seed", "n", "k", "ratio", "mean_sq", "variance", "lambda_sq",
                   "max_face_dev", "l", "wall_time")


@dataclass(frozen=True)
class EnsembleRecord:
    seed: int
    n: int
    k: int
    ratio: float
    mean_sq: float
    variance: float
    lambda_sq: float
    max_face_dev: float
    l: int
    wall_time: float
    bounds_ok: bool = field(default=True, compare=False)

    def row(self) -> dict:
        d = asdict(self)
        return {key: d[key] for key in ENSEMBLE_FIELDS}


def lemma31_target(n: int, k: int) -> float:
    """Grassmannian average of E_F |P_E x|^2, the same for every face."""
    return (n - k) * (n + 2 * k) / (3.0 * n)


def _check(n: int, k: int) -> None:
    if not 1 <= k < n:
        raise ValueError(f"k must be < n and >= 1 (got n={n}, k={k})")


def ensemble_trial(n: int, k: int, seed: int) -> EnsembleRecord:
    t0 = time.perf_counter()
    s = haar_subspace(n, k, seed)
    t = enumerate_tiling(s, seed=seed)
    r = body_report(t)
    return EnsembleRecord(seed=seed, n=n, k=k, ratio=r.ratio, mean_sq=r.mean_sq, variance=r.variance,
                          lambda_sq=r.lambda_sq, max_face_dev=r.max_face_dev, l=t.l,
                          wall_time=time.perf_counter() - t0, bounds_ok=r.bounds_ok)


def iter_ensemble(n: int, k: int, trials: int, seed: int = 0, threads: int = 1) -> Iterator[EnsembleRecord]:
    """Records in trial order; usable for incremental (append-only) output."""
    _check(n, k)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if comb(n, k) > SUBSET_CAP:
        raise TooManySubsets(f"C({n},{k}) exceeds the cap of {SUBSET_CAP}")
    seeds = [derive_seed(seed, n, k, i) for i in range(trials)]
    if threads <= 1:
        for sd in seeds:
            yield ensemble_trial(n, k, sd)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        yield from pool.map(lambda sd: ensemble_trial(n, k, sd), seeds)


def ensemble_run(n: int, k: int, trials: int, seed: int = 0, threads: int = 1) -> list[EnsembleRecord]:
    return list(iter_ensemble(n, k, trials, seed, threads))


@dataclass(frozen=True)
class EnsembleSummary:
    count: int
    max_ratio: float
    quantiles: dict[str, float]
    violation_fraction: float
    threshold: float
    exceed_fraction: float


def summarize(records: Iterable[EnsembleRecord], threshold: float = 1.0) -> EnsembleSummary:
    recs = list(records)
    ratios = np.array([r.ratio for r in recs])
    if not recs:
        return EnsembleSummary(0, float("nan"), {}, 0.0, threshold, 0.0)
    qs = {f"q{int(q * 100):02d}": float(np.quantile(ratios, q)) for q in (0.0, 0.25, 0.5, 0.75, 0.95, 1.0)}
    bad = [r for r in recs if not r.bounds_ok or r.max_face_dev > 4.0 * r.k / 3.0 + BOUND_TOL]
    return EnsembleSummary(count=len(recs), max_ratio=float(ratios.max()), quantiles=qs,
                           violation_fraction=len(bad) / len(recs), threshold=threshold,
                           exceed_fraction=float(np.mean(ratios > threshold)))


def default_face(n: int, k: int, which: int = 0) -> Face:
    """A few fixed faces used by the experiments: first, last and interleaved coordinates."""
    if which == 0:
        return Face(tuple(range(1, k + 1)), (1,) * k)
    if which == 1:
        return Face(tuple(range(n - k + 1, n + 1)), tuple((-1) ** j for j in range(k)))
    idx = tuple(range(1, n + 1, max(1, n // k)))[:k]
    return Face(idx, (-1,) * k)


@dataclass(frozen=True)
class Lemma31Result:
    n: int
    k: int
    face: Face
    trials: int
    empirical_mean: float
    standard_error: float
    target: float
    z_score: float


def lemma31_experiment(n: int, k: int, face: Face | None = None, trials: int = 2000,
                       seed: int = 0) -> Lemma31Result:
    """Average E_F |P_E x|^2 over Haar subspaces and compare with the closed form."""
    _check(n, k)
    if trials < 2:
        raise ValueError("trials must be >= 2")
    face = face or default_face(n, k)
    face.check(n, k)
    vals = np.array([face_moment(haar_subspace(n, k, derive_seed(seed, n, k, i)), face)
                     for i in range(trials)])
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(trials))
    target = lemma31_target(n, k)
    return Lemma31Result(n=n, k=k, face=face, trials=trials, empirical_mean=mean,
                         standard_error=se, target=target,
                         z_score=(mean - target) / se if se > 0 else 0.0)


@dataclass(frozen=True)
class LipschitzProbe:
    face: Face
    pairs: list[tuple[int, int, float, float, float]]  # (seed1, seed2, |df|, op, hs)
    excluded: int
    bound_op: float
    bound_hs_paper: float

    @property
    def max_ratio_op(self) -> float:
        return max((d / op for _, _, d, op, _ in self.pairs), default=0.0)

    @property
    def max_ratio_hs(self) -> float:
        return max((d / hs for _, _, d, _, hs in self.pairs), default=0.0)

    @property
    def ok(self) -> bool:
        return all(d <= self.bound_op * op + 1e-9 for _, _, d, op, _ in self.pairs)


DEGENERATE_DIST = 1e-14


def lipschitz_probe(n: int, k: int, face: Face | None = None, pairs: int = 1000,
                    seed: int = 0) -> LipschitzProbe:
    """|f(E1) - f(E2)| against the projector distance for Haar pairs, f(E) = E_F|P_E x|^2."""
    _check(n, k)
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    face = face or default_face(n, k)
    face.check(n, k)
    out = []
    excluded = 0
    for i in range(pairs):
        s1_seed, s2_seed = derive_seed(seed, n, k, i, 1), derive_seed(seed, n, k, i, 2)
        s1, s2 = haar_subspace(n, k, s1_seed), haar_subspace(n, k, s2_seed)
        diff = abs(face_moment(s1, face) - face_moment(s2, face))
        dist = projector_distance(s1, s2)
        if dist.op <= DEGENERATE_DIST:
            excluded += 1
            continue
        out.append((s1_seed, s2_seed, diff, dist.op, dist.hs))
    return LipschitzProbe(face=face, pairs=out, excluded=excluded, bound_op=8.0 * k / 3.0,
                          bound_hs_paper=8.0 * np.sqrt(2.0) * k / 3.0)


@dataclass(frozen=True)
class DeviationHistogram:
    n: int
    k: int
    target: float
    bin_edges: list[float]
    counts: list[int]
    tail_fractions: dict[str, float]
    total: int
    max_abs_dev: float
    within_bounds: bool

    def to_dict(self) -> dict:
        return {"bin_edges": self.bin_edges, "counts": self.counts, "tail_fractions": self.tail_fractions}


def deviation_histogram(n: int, k: int, trials: int, bins: int = 20, seed: int = 0) -> DeviationHistogram:
    """Histogram of E_F|P_E x|^2 minus its Grassmannian mean over Haar E and tiling faces F.

    The bins span [-4k/3, 4k/3], which contains every deviation because each
    face value lies in [(n-2k)/3, (n+2k)/3] and so does the target.
    """
    _check(n, k)
    if trials < 1 or bins < 1:
        raise ValueError("trials and bins must be >= 1")
    target = lemma31_target(n, k)
    lo, hi = (n - 2 * k) / 3.0, (n + 2 * k) / 3.0
    width = 4.0 * k / 3.0
    edges = np.linspace(-width, width, bins + 1)
    counts = np.zeros(bins, dtype=np.int64)
    tails = np.zeros(len(TAIL_MULTIPLES), dtype=np.int64)
    total = 0
    max_dev = 0.0
    ok = True
    for i in range(trials):
        sd = derive_seed(seed, n, k, i)
        t = enumerate_tiling(haar_subspace(n, k, sd), seed=sd)
        vals = body_report(t).tile_means
        ok &= bool(np.all(vals >= lo - BOUND_TOL) and np.all(vals <= hi + BOUND_TOL))
        dev = vals - target
        max_dev = max(max_dev, float(np.max(np.abs(dev))))
        counts += np.histogram(np.clip(dev, -width, width), bins=edges)[0]
        tails += np.array([np.count_nonzero(np.abs(dev) > m * np.sqrt(n)) for m in TAIL_MULTIPLES])
        total += dev.size
    ok &= max_dev <= width + BOUND_TOL
    return DeviationHistogram(
        n=n, k=k, target=target, bin_edges=[float(e) for e in edges], counts=[int(c) for c in counts],
        tail_fractions={f"{m:g}": float(c) / total for m, c in zip(TAIL_MULTIPLES, tails)},
        total=total, max_abs_dev=max_dev, within_bounds=ok)
