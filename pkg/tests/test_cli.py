"""End-to-end CLI tests: exit codes, output formats, cache lifecycle,
determinism, and error reporting."""
from __future__ import annotations

import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

import qgspectra as qg
from qgspectra import builtins


def run(*args):
    return subprocess.run([sys.executable, "-m", "qgspectra", *args],
                          capture_output=True, text=True)


def csv_rows(text):
    lines = [l for l in text.strip().splitlines() if l]
    header = lines[0].split(",")
    return header, [l.split(",") for l in lines[1:]]


# ---------------------------------------------------------------------------
# examples
# ---------------------------------------------------------------------------

def test_examples_list():
    r = run("examples", "list")
    assert r.returncode == 0
    names = [l.split()[0] for l in r.stdout.strip().splitlines()]
    assert sorted(names) == sorted(builtins.BUILDERS)


def test_examples_emit_round_trip(tmp_path):
    r = run("examples", "emit", "star3-kirchhoff", "--out-dir", str(tmp_path))
    assert r.returncode == 0
    prob = qg.load_problem(str(tmp_path / "star3-kirchhoff.json"))
    assert qg.canonical_hash(prob) == qg.canonical_hash(builtins.build("star3-kirchhoff"))
    oracle = json.loads((tmp_path / "star3-kirchhoff.oracle.json").read_text())
    assert oracle["weyl_exponent"] == 2.0


def test_examples_emit_unknown_name():
    assert run("examples", "emit", "no-such-problem").returncode == 2
    assert run("examples", "emit").returncode == 2


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def test_check_elliptic_exit_0():
    r = run("check", "interval-dirichlet")
    assert r.returncode == 0
    rep = json.loads(r.stdout)
    assert rep["ellipticity"]["elliptic"] is True
    assert rep["self_adjointness"]["symmetric"] is True
    assert rep["problem_digest"] == qg.canonical_hash(builtins.build("interval-dirichlet"))


def test_check_non_elliptic_exit_1():
    r = run("check", "transmission-bad")
    assert r.returncode == 1
    rep = json.loads(r.stdout)
    assert rep["ellipticity"]["elliptic"] is False


def test_check_missing_file_exit_2():
    r = run("check", "no-such-file.json")
    assert r.returncode == 2
    assert "no such file or builtin" in r.stderr


def test_check_malformed_problem_exit_1(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": "bcp-1", "order": 3}')
    r = run("check", str(bad))
    assert r.returncode == 1
    assert "error:" in r.stderr


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

def test_spectrum_csv_closed_form():
    r = run("spectrum", "interval-dirichlet", "--lambda-max", "30")
    assert r.returncode == 0
    header, rows = csv_rows(r.stdout)
    assert header == ["k", "lambda", "multiplicity"]
    lams = [float(row[1]) for row in rows]
    assert np.allclose(lams, [1.0, 4.0, 9.0, 16.0, 25.0], atol=1e-9)
    assert all(row[2] == "1" for row in rows)


def test_spectrum_requires_window():
    r = run("spectrum", "interval-dirichlet")
    assert r.returncode == 2
    assert "--lambda-max or --max-eig" in r.stderr


def test_spectrum_max_eig():
    r = run("spectrum", "circle-glued", "--max-eig", "5", "--format", "json")
    assert r.returncode == 0
    payload = json.loads(r.stdout)
    assert sum(q for _, q in payload["eigenvalues"]) == 5
    want = [0.0, math.pi ** 2, (2 * math.pi) ** 2]
    got = [lam for lam, _ in payload["eigenvalues"]]
    assert np.allclose(got, want, atol=1e-8)


def test_spectrum_json_certificate():
    r = run("spectrum", "interval-dirichlet", "--lambda-max", "30",
            "--format", "json")
    payload = json.loads(r.stdout)
    assert payload["problem_digest"] == qg.canonical_hash(
        builtins.build("interval-dirichlet"))
    assert all(w["count"] == w["expected"] for w in payload["certificate"])


def test_spectrum_force_numeric():
    r = run("spectrum", "interval-dirichlet", "--lambda-max", "30",
            "--force-numeric")
    _, rows = csv_rows(r.stdout)
    lams = [float(row[1]) for row in rows]
    assert np.allclose(lams, [1.0, 4.0, 9.0, 16.0, 25.0], atol=1e-6)


# ---------------------------------------------------------------------------
# cache lifecycle
# ---------------------------------------------------------------------------

def test_cache_roundtrip_byte_identical(tmp_path):
    cache = str(tmp_path / "cache")
    args = ("spectrum", "star3-kirchhoff", "--lambda-max", "120",
            "--cache-dir", cache)
    first = run(*args)
    assert first.returncode == 0
    assert os.listdir(cache)
    second = run(*args)
    assert second.returncode == 0
    assert second.stdout == first.stdout


def test_cache_covering_window_reused(tmp_path):
    cache = str(tmp_path / "cache")
    warm = run("spectrum", "interval-dirichlet", "--lambda-max", "120",
               "--cache-dir", cache)
    assert warm.returncode == 0
    small = run("spectrum", "interval-dirichlet", "--lambda-max", "30",
                "--cache-dir", cache)
    assert small.returncode == 0
    _, rows = csv_rows(small.stdout)
    assert [float(r[1]) for r in rows] == pytest.approx([1, 4, 9, 16, 25], abs=1e-9)


def test_cache_corruption_recovery(tmp_path):
    cache = tmp_path / "cache"
    args = ("spectrum", "interval-dirichlet", "--lambda-max", "30",
            "--cache-dir", str(cache))
    first = run(*args)
    assert first.returncode == 0
    entries = list(cache.rglob("*.json"))
    assert entries
    for f in entries:
        f.write_text("{ not json !!")
    second = run(*args)
    assert second.returncode == 0
    assert second.stdout == first.stdout
    assert "cache" in second.stderr           # warning about the dropped entry
    third = run(*args)                         # healed entry reused silently
    assert third.stdout == first.stdout
    assert third.stderr == ""


# ---------------------------------------------------------------------------
# asymptotics commands
# ---------------------------------------------------------------------------

def test_heat_command_csv():
    r = run("heat", "interval-dirichlet", "--t-grid", "0.05:0.5:5",
            "--lambda-max", "450")
    assert r.returncode == 0
    header, rows = csv_rows(r.stdout)
    assert header == ["t", "value", "tail_bound"]
    assert len(rows) == 5
    ref = sum(math.exp(-0.05 * k * k) for k in range(1, 200))
    assert float(rows[0][1]) == pytest.approx(ref, abs=1e-6)


def test_heat_window_too_small_exit_1():
    r = run("heat", "interval-dirichlet", "--t-grid", "1e-7:1e-6:3",
            "--lambda-max", "450")
    assert r.returncode == 1
    assert "window too small" in r.stderr


def test_heat_bad_grid_exit_2():
    r = run("heat", "interval-dirichlet", "--t-grid", "0.5:0.1:5")
    assert r.returncode == 2


def test_heat_phi_unknown_edge_exit_2():
    r = run("heat", "interval-dirichlet", "--phi", "zz=1.0")
    assert r.returncode == 2
    assert "unknown edge" in r.stderr


def test_heat_fit_command():
    r = run("heat-fit", "interval-neumann", "--lambda-max", "14400")
    assert r.returncode == 0
    payload = json.loads(r.stdout)
    assert payload["alphas"][0] == pytest.approx(math.pi / math.sqrt(4 * math.pi),
                                                 abs=1e-3)
    assert payload["alphas"][1] == pytest.approx(0.5, abs=1e-2)


def test_zeta_command():
    r = run("zeta", "interval-dirichlet", "--s", "2", "--lambda-max", "2000")
    assert r.returncode == 0
    payload = json.loads(r.stdout)
    assert payload["value"][0] == pytest.approx(math.pi ** 4 / 90.0, abs=1e-6)
    assert payload["value"][1] == pytest.approx(0.0, abs=1e-12)
    assert payload["poles"][0]["s"] == 0.5


def test_zeta_zero_mode_exit_1():
    r = run("zeta", "interval-neumann", "--s", "2", "--lambda-max", "450")
    assert r.returncode == 1
    assert "zeta undefined" in r.stderr


def test_zeta_bad_s_exit_2():
    assert run("zeta", "interval-dirichlet", "--s", "two").returncode == 2


def test_weyl_command():
    r = run("weyl", "interval-dirichlet", "--lambda-max", "46000")
    assert r.returncode == 0
    payload = json.loads(r.stdout)
    assert payload["exponent"] == pytest.approx(2.0, abs=0.01)
    assert payload["constant"] == pytest.approx(1.0, rel=0.02)
    assert payload["n_used"] >= 100
    assert "offset" in payload


def test_resolvent_scan_command():
    r = run("resolvent-scan", "interval-dirichlet", "--decades", "3:5:3",
            "--ray-deg", "135", "--lambda-max", "450")
    assert r.returncode == 0
    header, rows = csv_rows(r.stdout)
    assert header == ["abs_lambda", "norm", "abs_lambda_times_norm",
                      "trace_re", "trace_im", "trace_tail"]
    # |lambda| >> lambda_max on the 135-degree ray: distance to the real
    # axis tail is |Im lambda| so |lambda| * norm = sqrt(2)
    for row in rows:
        assert float(row[2]) == pytest.approx(math.sqrt(2.0), abs=1e-9)


def test_resolvent_fit_command():
    r = run("resolvent-fit", "interval-dirichlet", "--ray-deg", "180",
            "--decades", "2:4:12", "--lambda-max", "450")
    assert r.returncode == 0
    payload = json.loads(r.stdout)
    c = payload["coefficients"]
    assert c[0][0] == pytest.approx(math.pi / 2.0, abs=5e-3)
    assert c[1][0] == pytest.approx(-0.5, abs=5e-3)


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _write_rhs(tmp_path, samples):
    path = tmp_path / "rhs.json"
    path.write_text(json.dumps({"edges": {"e1": samples}}))
    return str(path)


def test_solve_command_json(tmp_path):
    xs = np.linspace(0.0, math.pi, 41)
    rhs = _write_rhs(tmp_path, [[[math.sin(3 * x), 0.0]] for x in xs])
    r = run("solve", "interval-dirichlet", "--lambda", "2", "--rhs", rhs)
    assert r.returncode == 0
    payload = json.loads(r.stdout)
    assert payload["coupling_residual"] < 1e-8
    assert payload["interior_residual"] < 1e-8
    got = np.array([u[0][0] + 1j * u[0][1] for u in payload["edges"]["e1"]["u"]])
    want = np.sin(3 * np.array(payload["edges"]["e1"]["x"])) / 7.0
    assert np.max(np.abs(got - want)) < 1e-8


def test_solve_command_csv(tmp_path):
    xs = np.linspace(0.0, math.pi, 41)
    rhs = _write_rhs(tmp_path, [[[math.sin(2 * x), 0.0]] for x in xs])
    r = run("solve", "interval-dirichlet", "--lambda", "2,1", "--rhs", rhs,
            "--format", "csv")
    assert r.returncode == 0
    header, rows = csv_rows(r.stdout)
    assert header == ["edge", "x", "component", "u_re", "u_im"]
    assert len(rows) == 41


def test_solve_near_eigenvalue_exit_1(tmp_path):
    xs = np.linspace(0.0, math.pi, 41)
    rhs = _write_rhs(tmp_path, [[[math.sin(x), 0.0]] for x in xs])
    r = run("solve", "interval-dirichlet", "--lambda", "4", "--rhs", rhs)
    assert r.returncode == 1
    assert "error:" in r.stderr


def test_solve_bad_rhs_exit_1(tmp_path):
    path = tmp_path / "rhs.json"
    path.write_text(json.dumps({"edges": {"e1": [[[0.0, 0.0]]] * 4}}))
    r = run("solve", "interval-dirichlet", "--lambda", "2", "--rhs", str(path))
    assert r.returncode == 1
    assert "expected >= 9 samples" in r.stderr


def test_solve_missing_rhs_file_exit_2():
    r = run("solve", "interval-dirichlet", "--lambda", "2", "--rhs", "nope.json")
    assert r.returncode == 2


# ---------------------------------------------------------------------------
# output handling
# ---------------------------------------------------------------------------

def test_out_flag_writes_file(tmp_path):
    out = tmp_path / "table.csv"
    direct = run("spectrum", "interval-dirichlet", "--lambda-max", "30")
    r = run("spectrum", "interval-dirichlet", "--lambda-max", "30",
            "--out", str(out))
    assert r.returncode == 0
    assert r.stdout == ""
    assert out.read_text() == direct.stdout


def test_repeated_runs_byte_identical():
    args = ("check", "star3-delta")
    assert run(*args).stdout == run(*args).stdout
