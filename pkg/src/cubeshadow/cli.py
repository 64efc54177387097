"""Command-line front end.

    cubeshadow analyze   [--subspace-file F | --n N --k K --seed S] [--tiling-output F]
    cubeshadow ensemble  --n N --k K --trials T [--grid F] [--histogram-output F]
    cubeshadow lemma31   --n N --k K --trials T [--faces 3]
    cubeshadow lipschitz --n N --k K --pairs P
    cubeshadow sample    [--method exact|rejection] --n-samples M
    cubeshadow selftest

Exit codes: 0 success, 1 failed self-test or I/O error, 2 invalid arguments,
3 numerical failure (degenerate subspace, non-generic direction, ...).
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import (CubeShadowError, DimensionMismatch, NumericalFailure, RankDeficient,
                     TooManySubsets)
from .export import (REPORT_OVERRIDES, ReportIOError, emit_report, metadata, resolve_output,
                     write_csv, write_json)
from .grassmann import (ENSEMBLE_FIELDS, default_face, deviation_histogram, iter_ensemble,
                        lemma31_experiment, lipschitz_probe, summarize)
from .moments import body_report
from .sampling import rejection_sample, sample_uniform
from .selftest import run_selftest
from .subspace import haar_subspace, read_subspace
from .tiling import enumerate_tiling

COMMANDS = ("analyze", "ensemble", "lemma31", "lipschitz", "sample", "selftest")
DEFAULT_FORMAT = {"ensemble": "csv", "sample": "csv"}
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    n: int = 10
    k: int = 2
    seed: int = 0
    trials: int = 100
    n_samples: int = 10_000
    format: str = "json"
    subspace_file: str | None = None
    output: str | None = None
    threshold: float = 1.0
    threads: int = 1

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.format not in ("json", "csv"):
            raise UsageError(f"format must be json or csv, got {self.format!r}")
        if self.seed < 0:
            raise UsageError("seed must be non-negative")
        if self.subspace_file is None and self.command != "selftest":
            if self.k >= self.n:
                raise UsageError("k must be < n")
            if self.k < 1:
                raise UsageError("k must be >= 1")
        if self.trials < 1 or self.n_samples < 1 or self.threads < 1:
            raise UsageError("trials, n-samples and threads must be positive")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=10, help="ambient dimension (default 10)")
    common.add_argument("--k", type=int, default=2, help="codimension (default 2)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--output", "-o", default=None,
                        help="output path (default stdout); relative paths go under $CUBESHADOW_OUTPUT_DIR")
    common.add_argument("--threads", type=int, default=1)

    p = argparse.ArgumentParser(prog="cubeshadow", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="exact moments of one projection")
    a.add_argument("--subspace-file")
    a.add_argument("--direction", help="comma-separated tiling direction (E-perp coordinates or ambient)")
    a.add_argument("--tiling-output", help="also write the tiling as JSON")
    a.add_argument("--no-per-tile", action="store_true", help="omit the per_tile array")

    e = sub.add_parser("ensemble", parents=[common], help="Haar ensemble of projections")
    e.add_argument("--trials", type=int, default=100)
    e.add_argument("--threshold", type=float, default=1.0,
                   help="report the fraction of ratios above this value")
    e.add_argument("--grid", help="JSON file with a list of {n, k, trials} runs (overrides --n/--k/--trials)")
    e.add_argument("--timing", action="store_true",
                   help="record wall_time (off by default so outputs are byte-reproducible)")
    e.add_argument("--histogram-output", help="also write the face-deviation histogram as JSON")
    e.add_argument("--bins", type=int, default=20)
    e.add_argument("--summary", action="store_true", help="print a summary to stderr")

    m = sub.add_parser("lemma31", parents=[common], help="Grassmannian mean of a face moment")
    m.add_argument("--trials", type=int, default=2000)
    m.add_argument("--faces", type=int, choices=(1, 2, 3), default=3)

    lp = sub.add_parser("lipschitz", parents=[common], help="Lipschitz probe of a face moment")
    lp.add_argument("--pairs", type=int, default=1000)

    s = sub.add_parser("sample", parents=[common], help="uniform points of the projection")
    s.add_argument("--subspace-file")
    s.add_argument("--method", choices=("exact", "rejection"), default="exact")
    s.add_argument("--n-samples", type=int, default=10_000)

    sub.add_parser("selftest", parents=[common], help="run the invariant suite")
    return p


def _command_line(argv: Sequence[str]) -> str:
    """argv without output destinations, so reruns into other files keep identical headers."""
    kept: list[str] = []
    skip = False
    drop = {"--output", "-o", "--tiling-output", "--histogram-output"}
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok in drop:
            skip = True
            continue
        if any(tok.startswith(d + "=") for d in drop):
            continue
        kept.append(tok)
    return shlex.join(["cubeshadow", *kept])


def _config(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(
        command=ns.command, n=ns.n, k=ns.k, seed=ns.seed,
        trials=getattr(ns, "trials", getattr(ns, "pairs", 100)),
        n_samples=getattr(ns, "n_samples", 10_000),
        format=ns.format or DEFAULT_FORMAT.get(ns.command, "json"),
        subspace_file=getattr(ns, "subspace_file", None), output=ns.output,
        threshold=getattr(ns, "threshold", 1.0), threads=ns.threads,
    )
    cfg.validate()
    return cfg


def _subspace(cfg: RunConfig):
    if cfg.subspace_file:
        return read_subspace(cfg.subspace_file)
    return haar_subspace(cfg.n, cfg.k, cfg.seed)


def _direction(text: str | None):
    if text is None:
        return None
    return [float(x) for x in text.replace(" ", "").split(",") if x]


def cmd_analyze(cfg: RunConfig, ns, meta) -> int:
    s = _subspace(cfg)
    t = enumerate_tiling(s, direction=_direction(ns.direction), seed=cfg.seed)
    report = body_report(t)
    dest = resolve_output(cfg.output)
    if cfg.format == "json" and ns.no_per_tile:
        write_json(dest, report.to_dict(per_tile=False), meta, REPORT_OVERRIDES)
    else:
        emit_report(report, cfg.format, dest, meta)
    if ns.tiling_output:
        emit_report(t, "json", resolve_output(ns.tiling_output), meta)
    return EXIT_OK


def _grid(ns, cfg: RunConfig) -> list[tuple[int, int, int]]:
    if not ns.grid:
        return [(cfg.n, cfg.k, cfg.trials)]
    try:
        entries = json.loads(Path(ns.grid).read_text())
        runs = [(int(r["n"]), int(r["k"]), int(r.get("trials", cfg.trials))) for r in entries]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"bad grid file {ns.grid}: {exc}") from exc
    for n, k, trials in runs:
        if not 1 <= k < n or trials < 1:
            raise UsageError(f"grid entry n={n}, k={k}, trials={trials}: k must be < n")
    return runs


def cmd_ensemble(cfg: RunConfig, ns, meta) -> int:
    runs = _grid(ns, cfg)
    collected = []

    def records():
        for n, k, trials in runs:
            for rec in iter_ensemble(n, k, trials, cfg.seed, cfg.threads):
                collected.append(rec)
                row = rec.row()
                if not ns.timing:
                    row["wall_time"] = None
                yield [row[f] for f in ENSEMBLE_FIELDS]

    dest = resolve_output(cfg.output)
    if cfg.format == "csv":
        write_csv(dest, list(ENSEMBLE_FIELDS), records(), meta, flush_every=1)
    else:
        rows = [dict(zip(ENSEMBLE_FIELDS, r)) for r in records()]
        write_json(dest, {"records": rows}, meta)
    summary = summarize(collected, cfg.threshold)
    if ns.summary:
        print(f"records={summary.count} max_ratio={summary.max_ratio:.6g} "
              f"violations={summary.violation_fraction:g} "
              f"frac_ratio>{summary.threshold:g}={summary.exceed_fraction:g}", file=sys.stderr)
    if ns.histogram_output:
        n, k, trials = runs[0]
        hist = deviation_histogram(n, k, trials, ns.bins, cfg.seed)
        emit_report(hist, "json", resolve_output(ns.histogram_output), meta)
    return EXIT_OK if summary.violation_fraction == 0 else EXIT_FAIL


def cmd_lemma31(cfg: RunConfig, ns, meta) -> int:
    results = [lemma31_experiment(cfg.n, cfg.k, default_face(cfg.n, cfg.k, i), cfg.trials, cfg.seed)
               for i in range(ns.faces)]
    emit_report(results, cfg.format, resolve_output(cfg.output), meta)
    return EXIT_OK


def cmd_lipschitz(cfg: RunConfig, ns, meta) -> int:
    probe = lipschitz_probe(cfg.n, cfg.k, pairs=ns.pairs, seed=cfg.seed)
    emit_report(probe, cfg.format, resolve_output(cfg.output), meta)
    return EXIT_OK if probe.ok else EXIT_FAIL


def cmd_sample(cfg: RunConfig, ns, meta) -> int:
    s = _subspace(cfg)
    if ns.method == "exact":
        batch = sample_uniform(enumerate_tiling(s, seed=cfg.seed), cfg.n_samples, cfg.seed)
    else:
        batch = rejection_sample(s, cfg.n_samples, cfg.seed)
    emit_report(batch, cfg.format, resolve_output(cfg.output), meta)
    return EXIT_OK


def cmd_selftest(cfg: RunConfig, ns, meta) -> int:
    return EXIT_OK if run_selftest(lambda line: print(line, file=sys.stderr)) else EXIT_FAIL


HANDLERS = {
    "analyze": cmd_analyze, "ensemble": cmd_ensemble, "lemma31": cmd_lemma31,
    "lipschitz": cmd_lipschitz, "sample": cmd_sample, "selftest": cmd_selftest,
}


def run_cli(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        cfg = _config(ns)
        meta = metadata(cfg.command, cfg.seed, _command_line(argv))
        return HANDLERS[cfg.command](cfg, ns, meta)
    except UsageError as exc:
        print(f"cubeshadow {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RankDeficient, NumericalFailure) as exc:
        print(f"cubeshadow {ns.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ReportIOError as exc:
        print(f"cubeshadow {ns.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (TooManySubsets, DimensionMismatch, ValueError, OSError) as exc:
        print(f"cubeshadow {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CubeShadowError as exc:
        print(f"cubeshadow {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
