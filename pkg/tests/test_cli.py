import csv
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from wfarima.cli import main, read_series
from wfarima.pipeline import sample_path

GOLDEN = Path(__file__).parent / "golden" / "fit_document_schema.json"
STRONG = str(sample_path("strong"))

EXAMPLE_J = np.array(
    [
        [2 / 0.96, -2 / 0.9, -2 * np.log(0.8) / 0.2],
        [-2 / 0.9, 2 / 0.75, 2 * np.log(0.5) / 0.5],
        [-2 * np.log(0.8) / 0.2, 2 * np.log(0.5) / 0.5, np.pi**2 / 3],
    ]
)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def _kind(v):
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, int):
        return "int"
    if isinstance(v, float):
        return "float"
    if isinstance(v, str):
        return "str"
    if v is None:
        return "null"
    if isinstance(v, list):
        return "matrix" if v and isinstance(v[0], list) else "array"
    return "object"


@pytest.mark.parametrize("cmd", ["simulate", "fit", "mc", "timing", "jmatrix", "serve"])
def test_help_exits_zero(cmd, capsys):
    code, out, _ = run([cmd, "--help"], capsys)
    assert code == 0
    assert "usage: wfarima " + cmd in out


def test_top_level_help_and_missing_command(capsys):
    assert run(["--help"], capsys)[0] == 0
    code, _, err = run([], capsys)
    assert code == 1
    code, out, _ = run(["--help"], capsys)
    assert "FARIMA_WORKERS" in out


@pytest.mark.parametrize("method", ["onestep", "lse"])
def test_fit_document_matches_golden_schema(method, capsys):
    code, out, _ = run(["fit", STRONG, "--p", "1", "--q", "1", "--method", method, "--delta", "0.9", "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    schema = json.loads(GOLDEN.read_text())
    assert sorted(doc) == sorted(schema)
    for key, want in schema.items():
        allowed = want if isinstance(want, list) else [want]
        assert _kind(doc[key]) in allowed, key
    assert len(doc["theta"]) == 3 and doc["n"] == 5000
    assert doc["m_used"] == (5000 if method == "lse" else 2133)


def test_fit_text_output(capsys):
    code, out, _ = run(["fit", STRONG, "--p", "1", "--q", "1"], capsys)
    assert code == 0
    assert "a1" in out and "b1" in out and "sigma2" in out


def test_fit_rejects_bad_delta(capsys):
    code, _, err = run(["fit", STRONG, "--p", "1", "--q", "1", "--delta", "0.4"], capsys)
    assert code == 1
    assert "(1/2, 1]" in err


def test_fit_usage_errors(tmp_path, capsys):
    assert run(["fit", str(tmp_path / "missing.csv"), "--p", "0", "--q", "0"], capsys)[0] == 1
    assert run(["fit", STRONG, "--p", "1", "--q", "1", "--method", "mle"], capsys)[0] == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("x\n1.0\nabc\n")
    assert run(["fit", str(bad), "--p", "0", "--q", "0"], capsys)[0] == 1


def test_fit_numerical_failures(tmp_path, capsys):
    short = tmp_path / "short.csv"
    short.write_text("\n".join(str(v) for v in np.random.default_rng(0).normal(size=10)) + "\n")
    code, _, err = run(["fit", str(short), "--p", "0", "--q", "0"], capsys)
    assert code == 2 and "series too short" in err
    const = tmp_path / "const.csv"
    const.write_text("1.5\n" * 100)
    code, _, err = run(["fit", str(const), "--p", "0", "--q", "0"], capsys)
    assert code == 2 and "degenerate input" in err


@pytest.mark.slow
def test_lse_and_onestep_agree_on_fixture(capsys):
    theta = {}
    for method in ("lse", "onestep"):
        code, out, _ = run(["fit", STRONG, "--p", "1", "--q", "1", "--method", method, "--format", "json"], capsys)
        assert code == 0
        theta[method] = np.array(json.loads(out)["theta"])
    assert np.max(np.abs(theta["lse"] - theta["onestep"])) <= 0.5 / np.sqrt(5000)


def test_simulate_deterministic(tmp_path, capsys):
    args = ["simulate", "--p", "0", "--q", "0", "--d", "0", "--n", "100", "--seed", "7"]
    assert run(args + ["--out", str(tmp_path / "a.csv")], capsys)[0] == 0
    assert run(args + ["--out", str(tmp_path / "b.csv")], capsys)[0] == 0
    a = (tmp_path / "a.csv").read_bytes()
    assert a == (tmp_path / "b.csv").read_bytes()
    assert len(a.decode().splitlines()) == 101


def test_simulate_roundtrips_through_fit(tmp_path, capsys):
    path = tmp_path / "x.csv"
    run(["simulate", "--ar", "0.2", "--ma", "0.5", "--d", "0.3", "--n", "300", "--seed", "3", "--out", str(path)], capsys)
    x = read_series(str(path))
    assert x.shape == (300,)
    code, _, _ = run(["fit", str(path), "--p", "1", "--q", "1"], capsys)
    assert code == 0


def test_simulate_rejects_unstable(capsys):
    code, _, err = run(["simulate", "--ar", "1.2", "--d", "0.3", "--n", "50"], capsys)
    assert code == 1 and "unit circle" in err


def test_jmatrix(capsys):
    code, out, _ = run(["jmatrix", "--a", "0.2", "--b", "0.5", "--sigma2", "1", "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["N"] == 100000
    assert np.max(np.abs(np.array(doc["J"]) - EXAMPLE_J)) <= 1e-3
    code, out, _ = run(["jmatrix", "--a", "0.2", "--b", "0.5", "--sigma2", "1"], capsys)
    assert code == 0 and "N=100000" in out


def test_mc_exports(tmp_path, capsys):
    prefix = tmp_path / "run" / "mc"
    code, out, _ = run(["mc", "--ar", "0.2", "--ma", "0.5", "--d", "0.3", "--M", "10", "--n", "500", "--seed", "1", "--out", str(prefix)], capsys)
    assert code == 0
    with open(f"{prefix}.csv") as fh:
        rows = list(csv.DictReader(fh))
    for m in ("lse_full", "lse_subsample", "onestep"):
        assert sum(r["method"] == m for r in rows) == 10
    doc = json.loads(Path(f"{prefix}.json").read_text())
    assert doc["M"] == 10 and doc["n"] == 500
    assert json.loads(out) == doc


def test_timing_export(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code, _, _ = run(["timing", "--d", "0.3", "--sizes", "400,800", "--repetitions", "3", "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,method,median_time,repetitions" and len(lines) == 7
    assert run(["timing", "--sizes", "400,200"], capsys)[0] == 1
    assert run(["timing", "--sizes", "200", "--repetitions", "2"], capsys)[0] == 1


def test_config_file_defaults_and_overrides(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"ar": [0.2], "ma": [0.5], "d": 0.3, "n": 120, "seed": 5}))
    a, b, c = (tmp_path / f"{k}.csv" for k in "abc")
    assert run(["simulate", "--config", str(cfg), "--out", str(a)], capsys)[0] == 0
    assert run(["simulate", "--ar", "0.2", "--ma", "0.5", "--d", "0.3", "--n", "120", "--seed", "5", "--out", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    # explicit flags win over the file
    assert run(["simulate", "--config", str(cfg), "--n", "60", "--out", str(c)], capsys)[0] == 0
    assert len(c.read_text().splitlines()) == 61
    ycfg = tmp_path / "c.yaml"
    ycfg.write_text("d: 0.3\nn: 80\nseed: 5\n")
    code, out, _ = run(["simulate", "--config", str(ycfg)], capsys)
    assert code == 0 and len(out.splitlines()) == 81
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nonsense": 1}))
    assert run(["simulate", "--config", str(bad)], capsys)[0] == 1


def test_workers_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("FARIMA_WORKERS", "many")
    code, _, err = run(["mc", "--d", "0.3", "--M", "2", "--n", "200", "--out", str(tmp_path / "m")], capsys)
    assert code == 1 and "FARIMA_WORKERS" in err


def test_read_series_formats(tmp_path):
    plain = tmp_path / "plain.csv"
    plain.write_text("1.0\n2.5\n-3\n")
    np.testing.assert_array_equal(read_series(str(plain)), [1.0, 2.5, -3.0])
    header = tmp_path / "header.csv"
    header.write_text("value\n1.0\n2.5\n")
    np.testing.assert_array_equal(read_series(str(header)), [1.0, 2.5])
    multi = tmp_path / "multi.csv"
    multi.write_text("date,price\n2020-01-01,100\n2020-01-02,101\n")
    np.testing.assert_array_equal(read_series(str(multi), column=1), [100.0, 101.0])


def test_returns_transform_flag(tmp_path, capsys):
    rng = np.random.default_rng(4)
    prices = 100 * np.exp(np.cumsum(rng.normal(0, 0.01, 400)))
    path = tmp_path / "p.csv"
    path.write_text("price\n" + "\n".join(repr(float(v)) for v in prices) + "\n")
    code, out, _ = run(["fit", str(path), "--p", "0", "--q", "0", "--transform", "returns", "--format", "json"], capsys)
    assert code == 0
    assert json.loads(out)["n"] == 399


def test_console_script():
    exe = Path(sys.executable).with_name("wfarima")
    cmd = [str(exe)] if exe.exists() else [sys.executable, "-m", "wfarima.cli"]
    proc = subprocess.run(cmd + ["jmatrix", "--d", "0.3"], capture_output=True, text=True, env=os.environ)
    assert proc.returncode == 0
    proc = subprocess.run(cmd + ["fit", STRONG, "--p", "1", "--q", "1", "--delta", "0.4"], capture_output=True, text=True)
    assert proc.returncode == 1
