"""Bit-stable JSON/CSV writers.

Floats are written with 17 significant digits (``ratio`` in moment reports
with 15), so a parse/re-emit cycle reproduces the same bytes. Every file
starts with run metadata: a ``meta`` object in JSON, ``#`` comment lines in
CSV.
"""

from __future__ import annotations

import io
import json
import math
import os
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence, TextIO

import numpy as np

from . import __version__
from .errors import CubeShadowError
from .rng import GENERATOR_ID

OUTPUT_DIR_ENV = "CUBESHADOW_OUTPUT_DIR"
FLOAT_DIGITS = 17


class ReportIOError(CubeShadowError, OSError):
    pass


def metadata(command: str, seed: int | None, command_line: str) -> dict:
    return {
        "version": __version__,
        "command": command,
        "seed": seed,
        "generator": GENERATOR_ID,
        "command_line": command_line,
    }


def format_float(x: float, digits: int = FLOAT_DIGITS) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, f".{digits}g")


def _json_scalar(x: Any, digits: int) -> str:
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return "null"
        s = format(x, f".{digits}g")
        if not any(c in s for c in ".e"):
            s += ".0"
        return s
    if isinstance(x, str):
        return json.dumps(x, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj: Any, digits: int = FLOAT_DIGITS, overrides: Mapping[str, int] | None = None,
          indent: int = 2) -> str:
    """Deterministic JSON text. ``overrides`` maps key names to digit counts."""
    overrides = overrides or {}
    out: list[str] = []

    def emit(value: Any, level: int, nd: int) -> None:
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(value, Mapping):
            if not value:
                out.append("{}")
                return
            out.append("{\n")
            items = list(value.items())
            for i, (key, v) in enumerate(items):
                out.append(pad + _json_scalar(str(key), nd) + ": ")
                emit(v, level + 1, overrides.get(str(key), digits))
                out.append(",\n" if i < len(items) - 1 else "\n")
            out.append(end + "}")
        elif isinstance(value, (list, tuple, np.ndarray)):
            seq = value.tolist() if isinstance(value, np.ndarray) else value
            if not seq:
                out.append("[]")
                return
            if all(not isinstance(v, (Mapping, list, tuple, np.ndarray)) for v in seq):
                out.append("[" + ", ".join(_json_scalar(v, nd) for v in seq) + "]")
                return
            out.append("[\n")
            for i, v in enumerate(seq):
                out.append(pad)
                emit(v, level + 1, nd)
                out.append(",\n" if i < len(seq) - 1 else "\n")
            out.append(end + "]")
        else:
            out.append(_json_scalar(value, nd))

    emit(obj, 0, digits)
    return "".join(out) + "\n"


def resolve_output(path: str | os.PathLike | None) -> Path | None:
    """Relative output paths are placed under $CUBESHADOW_OUTPUT_DIR when it is set."""
    if path is None or str(path) == "-":
        return None
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


@contextmanager
def open_destination(destination: str | os.PathLike | TextIO | None, mode: str = "w") -> Iterator[TextIO]:
    if destination is None or destination == "-":
        yield sys.stdout
        return
    if isinstance(destination, io.TextIOBase) or hasattr(destination, "write"):
        yield destination  # type: ignore[misc]
        return
    path = Path(destination)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        fh = open(path, mode, newline="")
    except OSError as exc:
        raise ReportIOError(f"cannot open {path} for writing: {exc.strerror or exc}") from exc
    try:
        with fh:
            yield fh
    except OSError as exc:
        raise ReportIOError(f"error writing {path}: {exc.strerror or exc}") from exc


def csv_cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    if isinstance(v, (list, tuple)):
        return " ".join(csv_cell(x) for x in v)
    return str(v)


def csv_meta_lines(meta: Mapping[str, Any]) -> str:
    return "".join(f"# {key}: {'' if v is None else v}\n" for key, v in meta.items())


def write_csv(destination: Any, header: Sequence[str], rows: Iterable[Sequence[Any]],
              meta: Mapping[str, Any] | None = None, flush_every: int = 0) -> int:
    """Write a CSV file; with ``flush_every`` rows are flushed as they arrive."""
    count = 0
    with open_destination(destination) as fh:
        if meta:
            fh.write(csv_meta_lines(meta))
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(csv_cell(v) for v in row) + "\n")
            count += 1
            if flush_every and count % flush_every == 0:
                fh.flush()
    return count


def write_json(destination: Any, payload: Mapping[str, Any], meta: Mapping[str, Any] | None = None,
               overrides: Mapping[str, int] | None = None) -> None:
    doc = dict(meta=dict(meta)) if meta else {}
    doc.update(payload)
    text = dumps(doc, overrides=overrides)
    with open_destination(destination) as fh:
        fh.write(text)


def read_csv(text: str) -> tuple[list[str], list[list[str]]]:
    """Header and rows of a CSV written by :func:`write_csv` (comment lines skipped)."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not lines:
        return [], []
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


# ---------------------------------------------------------------- reports

REPORT_OVERRIDES = {"ratio": 15}


def emit_report(report: Any, fmt: str = "json", destination: Any = None,
                meta: Mapping[str, Any] | None = None) -> None:
    """Write any report object produced by this package as JSON or CSV."""
    from .grassmann import (ENSEMBLE_FIELDS, DeviationHistogram, EnsembleRecord,
                            Lemma31Result, LipschitzProbe)
    from .moments import MomentReport
    from .sampling import SampleBatch
    from .tiling import Tiling

    if fmt not in ("json", "csv"):
        raise ValueError(f"unknown format {fmt!r}")

    if isinstance(report, MomentReport):
        if fmt == "json":
            write_json(destination, report.to_dict(), meta, REPORT_OVERRIDES)
        else:
            rows = ((i, w, e, v) for i, (w, e, v) in
                    enumerate(zip(report.weights, report.tile_means, report.tile_variances)))
            write_csv(destination, ["tile", "weight", "mean_sq", "variance"], rows, meta)
    elif isinstance(report, Tiling):
        if fmt == "json":
            write_json(destination, report.to_dict(), meta)
        else:
            d = report.to_dict()
            rows = ((i, t["fixed"], t["signs"], t["weight"], t["volume"], t["shift"])
                    for i, t in enumerate(d["tiles"]))
            write_csv(destination, ["tile", "fixed", "signs", "weight", "volume", "shift"], rows, meta)
    elif isinstance(report, SampleBatch):
        header = [f"coord_{i + 1}" for i in range(report.points.shape[1])] + ["tile_id"]
        ids = report.tile_ids if report.tile_ids is not None else np.full(len(report), -1)
        if fmt == "csv":
            write_csv(destination, header, (list(p) + [int(i)] for p, i in zip(report.points, ids)), meta)
        else:
            write_json(destination, {"method": report.method, "seed": report.seed,
                                     "points": report.points, "tile_ids": ids}, meta)
    elif isinstance(report, DeviationHistogram):
        write_json(destination, report.to_dict(), meta)
    elif isinstance(report, Lemma31Result) or (isinstance(report, list) and report
                                              and isinstance(report[0], Lemma31Result)):
        results = report if isinstance(report, list) else [report]
        rows = [{"n": r.n, "k": r.k, "fixed": list(r.face.fixed), "signs": list(r.face.signs),
                 "trials": r.trials, "empirical_mean": r.empirical_mean,
                 "standard_error": r.standard_error, "target": r.target, "z_score": r.z_score}
                for r in results]
        if fmt == "json":
            write_json(destination, {"results": rows}, meta)
        else:
            write_csv(destination, list(rows[0]), (list(r.values()) for r in rows), meta)
    elif isinstance(report, LipschitzProbe):
        if fmt == "json":
            write_json(destination, {
                "fixed": list(report.face.fixed), "signs": list(report.face.signs),
                "bound_op": report.bound_op, "bound_hs_paper": report.bound_hs_paper,
                "max_ratio_op": report.max_ratio_op, "max_ratio_hs": report.max_ratio_hs,
                "excluded": report.excluded, "ok": report.ok,
                "pairs": [list(p) for p in report.pairs]}, meta)
        else:
            write_csv(destination, ["seed1", "seed2", "abs_diff", "op_dist", "hs_dist"], report.pairs, meta)
    elif isinstance(report, list) and (not report or isinstance(report[0], EnsembleRecord)):
        if fmt == "csv":
            write_csv(destination, list(ENSEMBLE_FIELDS), ([r.row()[f] for f in ENSEMBLE_FIELDS] for r in report), meta)
        else:
            write_json(destination, {"records": [r.row() for r in report]}, meta)
    else:
        raise TypeError(f"don't know how to emit {type(report).__name__}")
