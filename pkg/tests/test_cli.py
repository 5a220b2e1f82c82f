from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from pathint.cli import build_parser, main
from pathint.paths import SampledPath, read_csv, uniform_grid, write_csv


def _write(tmp_path, name, fn, n=257):
    t = uniform_grid(1.0, n)
    p = tmp_path / name
    write_csv(SampledPath(t, fn(t)), p)
    return str(p)


def _json(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


def test_simulate_round_trip(tmp_path):
    out = tmp_path / "x.csv"
    assert main(["simulate", "--kind", "fbm", "--hurst", "0.75", "--n", "4096", "--seed", "3",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,value" and len(lines) == 4097
    x = read_csv(out)
    assert x.n == 4096 and x.values[0] == 0.0
    again = tmp_path / "y.csv"
    main(["simulate", "--kind", "fbm", "--hurst", "0.75", "--n", "4096", "--seed", "3", "--out", str(again)])
    assert again.read_text() == out.read_text()


def test_seed_from_environment(tmp_path, monkeypatch):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    monkeypatch.setenv("PATHINT_SEED", "11")
    main(["simulate", "--kind", "brownian", "--n", "65", "--out", str(a)])
    main(["simulate", "--kind", "brownian", "--n", "65", "--seed", "11", "--out", str(b)])
    assert a.read_text() == b.read_text()
    monkeypatch.setenv("PATHINT_SEED", "eleven")
    assert main(["simulate", "--kind", "brownian", "--n", "65", "--out", str(a)]) == 1


def test_gls_of_identity_against_square(tmp_path, capsys):
    # int_0^1 s d(s^2) = 2/3
    f = _write(tmp_path, "f.csv", lambda t: t, n=1025)
    g = _write(tmp_path, "g.csv", lambda t: t**2, n=1025)
    assert main(["gls", "--f", f, "--g", g, "--beta", "0.5"]) == 0
    d = _json(capsys)
    assert d["schema_version"] == "1.0"
    assert d["value"] == pytest.approx(2 / 3, abs=1e-5)
    assert d["apriori_bound"] >= abs(d["value"])


def test_gls_window_midpoint_and_rejections(tmp_path, capsys):
    f = _write(tmp_path, "f.csv", lambda t: t)
    assert main(["gls", "--f", f, "--g", f, "--holder-f", "0.8", "--holder-g", "0.8", "--no-bound"]) == 0
    assert _json(capsys)["beta_used"] == pytest.approx(0.5)
    assert main(["gls", "--f", f, "--g", f, "--no-bound"]) == 1
    assert main(["gls", "--f", f, "--g", f, "--beta", "0.9", "--holder-f", "0.6", "--holder-g", "0.6"]) == 1


def test_rs_sum_and_partitions(tmp_path, capsys):
    f = _write(tmp_path, "f.csv", lambda t: t)
    assert main(["rs-sum", "--f", f, "--g", f, "--partition", "dyadic:3", "--tags", "midpoint"]) == 0
    d = _json(capsys)
    assert d["intervals"] == 8 and d["value"] == pytest.approx(0.5)
    assert main(["rs-sum", "--f", f, "--g", f, "--partition", "uniform:7"]) == 1
    assert main(["rs-sum", "--f", f, "--g", f, "--partition", "weird"]) == 1


def test_pvar_supremum_of_monotone_path_is_total_increase(tmp_path, capsys):
    f = _write(tmp_path, "f.csv", lambda t: t**3, n=129)
    assert main(["pvar", "--input", f, "--p", "1", "--sup", "--dyadic-levels", "2..4"]) == 0
    d = _json(capsys)
    assert d["supremum"] == pytest.approx(1.0, rel=1e-12)
    assert sorted(d["dyadic"]) == ["2", "3", "4"]
    assert main(["pvar", "--input", f, "--p", "2", "--sup", "--cap", "10"]) == 1
    assert main(["pvar", "--input", f, "--p", "2", "--sup", "--cap", "10", "--preselect"]) == 0


def test_frac_deriv_and_besov(tmp_path, capsys):
    f = _write(tmp_path, "f.csv", lambda t: t, n=1025)
    out = tmp_path / "d.csv"
    assert main(["frac-deriv", "--input", f, "--beta", "0.5", "--output", str(out)]) == 0
    d = read_csv(out)
    # D^{1/2} t = 2 sqrt(t / pi)
    assert d.values[-1] == pytest.approx(2 / np.sqrt(np.pi), rel=1e-3)
    assert main(["besov-norm", "--input", f, "--beta", "0.5", "--which", "w1"]) == 0
    assert _json(capsys)["norm"] > 0


def test_grr_check_constant(tmp_path, capsys):
    f = _write(tmp_path, "f.csv", lambda t: t, n=65)
    assert main(["grr-check", "--input", f, "--p", "4", "--alpha", "0.5"]) == 0
    d = _json(capsys)
    assert d["constant_lower_bound"] == pytest.approx(d["lhs_max_ratio"] / d["rhs_integral"])


def test_verify_ito_smooth_writes_report(tmp_path):
    out = tmp_path / "r.json"
    assert main(["verify-ito", "--kind", "smooth", "--grids", "8,10", "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert d["schema_version"] == "1.0" and len(d["rows"]) == 2


def test_exit_codes(tmp_path, capsys):
    f = _write(tmp_path, "f.csv", lambda t: t)
    assert main(["gls", "--f", f]) == 1
    assert main(["pvar", "--input", f, "--p", "2", "--bogus"]) == 1
    assert main(["besov-norm", "--input", str(tmp_path / "missing.csv"), "--beta", "0.5"]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("time,x\n0,1\n")
    assert main(["pvar", "--input", str(bad), "--p", "2"]) == 1
    huge = tmp_path / "huge.csv"
    huge.write_text("t,value\n0,0\n0.5,1e308\n1,-1e308\n")
    assert main(["frac-deriv", "--input", str(huge), "--beta", "0.5"]) == 2
    err = capsys.readouterr().err
    assert "NumericError" in err and "Warning" not in err


def test_every_option_has_help():
    parser = build_parser()
    subs = [a for a in parser._actions if a.__class__.__name__ == "_SubParsersAction"][0]
    for name, sp in subs.choices.items():
        for act in sp._actions:
            if act.dest != "help":
                assert act.help, f"{name} {act.dest}"


def test_console_script_runs():
    r = subprocess.run([sys.executable, "-m", "pathint.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "simulate" in r.stdout
