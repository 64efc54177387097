import io
import json

import numpy as np
import pytest

from cubeshadow.export import (ReportIOError, dumps, emit_report, format_float, metadata, read_csv,
                               write_csv)
from cubeshadow.grassmann import ENSEMBLE_FIELDS, ensemble_run
from cubeshadow.moments import body_report
from cubeshadow.rng import GENERATOR_ID
from cubeshadow.sampling import sample_uniform
from cubeshadow.subspace import haar_subspace
from cubeshadow.tiling import enumerate_tiling

META = metadata("analyze", 0, "cubeshadow analyze")


def emitted(report, fmt="json"):
    buf = io.StringIO()
    emit_report(report, fmt, buf, META)
    return buf.getvalue()


def test_float_round_trip():
    rng = np.random.default_rng(0)
    for x in rng.standard_normal(1000) * 10.0 ** rng.integers(-20, 20, 1000):
        assert float(format_float(x)) == x


def test_dumps_floats():
    assert dumps({"a": 1.0, "b": 0.1, "ratio": 0.8}, overrides={"ratio": 15}) == \
        '{\n  "a": 1.0,\n  "b": 0.10000000000000001,\n  "ratio": 0.8\n}\n'
    assert dumps([]) == "[]\n"


def test_moment_report_json(diag2):
    text = emitted(body_report(enumerate_tiling(diag2)))
    d = json.loads(text)
    assert d["meta"] == META and d["meta"]["generator"] == GENERATOR_ID
    assert d["ratio"] == 0.8
    assert d["mean_sq"] == pytest.approx(2 / 3, abs=1e-15)
    assert list(d) == ["meta", "mean_sq", "variance", "lambda_sq", "ratio", "bounds", "per_tile"]
    assert text == emitted(body_report(enumerate_tiling(diag2)))


def test_tiling_json_round_trip():
    t = enumerate_tiling(haar_subspace(7, 2, 3))
    text = emitted(t)
    assert dumps(json.loads(text)) == text


def test_sample_csv():
    b = sample_uniform(enumerate_tiling(haar_subspace(5, 1, 0)), 20, seed=0)
    header, rows = read_csv(emitted(b, "csv"))
    assert header == ["coord_1", "coord_2", "coord_3", "coord_4", "tile_id"]
    got = np.array([[float(c) for c in r[:-1]] for r in rows])
    assert np.array_equal(got, b.points)


def test_empty_ensemble_csv():
    text = emitted([], "csv")
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    assert lines == [",".join(ENSEMBLE_FIELDS)]


def test_ensemble_csv():
    recs = ensemble_run(6, 2, 3)
    header, rows = read_csv(emitted(recs, "csv"))
    assert header == list(ENSEMBLE_FIELDS) and len(rows) == 3
    assert float(rows[0][3]) == recs[0].ratio


def test_csv_meta_header():
    buf = io.StringIO()
    write_csv(buf, ["a"], [[1]], META)
    assert buf.getvalue().startswith("# version: ")
    assert "# generator: " + GENERATOR_ID in buf.getvalue()


def test_io_error_has_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ReportIOError, match=str(blocker)):
        emit_report([], "csv", blocker / "sub" / "out.csv", META)


def test_unknown_report():
    with pytest.raises(TypeError):
        emit_report(object(), "json", io.StringIO())
    with pytest.raises(ValueError):
        emit_report([], "xml", io.StringIO())
