import csv
import json
import subprocess
import sys

import pytest

from ensemble_spectra import __version__
from ensemble_spectra.cli import fmt_float, parse_poly, run, to_json

TOP_KEYS = {"tool_version", "config", "results", "checks"}


def _json(capsys, argv):
    code = run(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def _validate(report):
    assert set(report) == TOP_KEYS
    assert report["tool_version"] == __version__
    assert isinstance(report["config"], dict)
    for c in report["checks"]:
        assert {"name", "status", "measured", "tolerance"} <= set(c)
        assert c["status"] in ("pass", "fail")


def test_density_csv_shape(tmp_path):
    out = tmp_path / "d.csv"
    code = run(["density", "--kind", "gue", "--n", "5", "--sigma2", "0.2", "--grid", "-3:3:601",
                "--deriv", "0", "--format", "csv", "--output", str(out)])
    assert code == 0
    raw = out.read_bytes()
    assert b"\r" not in raw
    rows = list(csv.reader(raw.decode("utf-8").splitlines()))
    assert rows[0] == ["x", "value"]
    assert len(rows) == 602
    assert float(rows[1][0]) == -3.0 and float(rows[-1][0]) == 3.0


def test_density_json(capsys):
    code, rep = _json(capsys, ["density", "--kind", "goe", "--n", "3", "--grid", "0:1:3", "--format", "json"])
    assert code == 0
    _validate(rep)
    assert len(rep["results"]["value"]) == 3
    assert rep["config"]["sigma2"] == "1/3"


def test_moments_example(capsys):
    code, rep = _json(capsys, ["moments", "--kind", "gue", "--n", "2", "--sigma2", "auto", "--upto", "4"])
    assert code == 0
    _validate(rep)
    assert rep["results"]["m4"] == "9/4"
    assert rep["results"]["m2"] == "1/1"


def test_mgf_value_and_table(capsys):
    code, rep = _json(capsys, ["mgf", "--kind", "gue", "--n", "10", "--s", "1", "--expansion"])
    assert code == 0
    assert rep["results"]["partials"][-1] == pytest.approx(rep["results"]["value"], rel=1e-12)


def test_mgf_table_needs_scaled_variance(capsys):
    assert run(["mgf", "--kind", "gue", "--n", "10", "--sigma2", "0.5", "--s", "1", "--expansion"]) == 2
    assert run(["mgf", "--kind", "goe", "--n", "4", "--s", "1", "--expansion"]) == 2


def test_expand_json_and_csv(capsys, tmp_path):
    code, rep = _json(capsys, ["expand", "--kind", "gse", "--n", "10", "--g", "x^2", "--doubling"])
    assert code == 0
    _validate(rep)
    res = rep["results"]
    assert abs(res["partials"][-1] - res["reference"]) < 1e-3
    assert {"ratios", "divergent", "doubling_shift"} <= set(res["diagnostics"])
    out = tmp_path / "e.csv"
    assert run(["expand", "--kind", "goe", "--n", "10", "--format", "csv", "--output", str(out)]) == 0
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0] == ["j", "term", "partial"] and len(rows) == 8


def test_expand_gue_exact(capsys):
    code, rep = _json(capsys, ["expand", "--kind", "gue", "--n", "3", "--g", "x^6"])
    assert code == 0
    assert rep["results"]["exact_terms"] == ["5/1", "10/9"]


def test_precision_env(capsys, monkeypatch):
    monkeypatch.setenv("ENSEMBLE_SPECTRA_PRECISION_BITS", "512")
    code, rep = _json(capsys, ["expand", "--kind", "gse", "--n", "10", "--no-reference"])
    assert code == 0 and rep["config"]["precision_bits"] == 512
    monkeypatch.setenv("ENSEMBLE_SPECTRA_PRECISION_BITS", "junk")
    assert run(["expand", "--kind", "gse", "--n", "10"]) == 2


def test_sample(capsys):
    code, rep = _json(capsys, ["sample", "--kind", "goe", "--n", "2", "--sigma2", "0.5", "--count", "500"])
    assert code == 0
    _validate(rep)
    assert set(rep["results"]) == {"mean", "stderr", "count"}


@pytest.mark.parametrize("argv", [
    ["density", "--kind", "gue", "--n", "5", "--grid", "3:3:10"],
    ["density", "--kind", "gue", "--n", "5", "--grid", "0:3:1"],
    ["density", "--kind", "gue", "--n", "5", "--grid", "0:3"],
    ["density", "--kind", "gue", "--n", "5", "--grid", "0:3:5", "--bogus"],
    ["density", "--kind", "abc", "--n", "5", "--grid", "0:3:5"],
    ["moments", "--kind", "gue", "--n", "0"],
    ["moments", "--kind", "gue", "--n", "2", "--upto", "3"],
    ["moments", "--kind", "gue", "--n", "2", "--sigma2", "-1"],
    ["sample", "--kind", "gue", "--n", "2", "--seed", "-4"],
    ["verify", "--fast", "--full"],
    [],
])
def test_usage_errors(argv, capsys):
    assert run(argv) == 2


def test_idempotent_output(tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert run(["sample", "--kind", "gse", "--n", "3", "--count", "300", "--seed", "9",
                    "--g", "x^4", "--output", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_float_format():
    assert fmt_float(0.1) == "0.10000000000000001"
    assert to_json({"a": [1.5, float("nan")], "b": True}) == '{\n  "a": [\n    1.5,\n    null\n  ],\n  "b": true\n}'


def test_parse_poly():
    assert parse_poly("x^4").coeffs == (0, 0, 0, 0, 1)
    assert parse_poly("x").coeffs == (0, 1)
    assert parse_poly("1, 0, 1/2").coeffs == (1, 0, 0.5)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ensemble_spectra", "moments", "--kind", "gse", "--n", "3",
                           "--upto", "2"], capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["results"]["m2"] == "5/3"


def test_verify_fast(capsys):
    code, rep = _json(capsys, ["verify", "--fast", "--quiet"])
    _validate(rep)
    assert code == 0
    assert rep["checks"] and all(c["status"] == "pass" for c in rep["checks"])
