import json
import os
import subprocess
import sys
import time

import pytest

from taumap import cli


def run(*args, env=None):
    return subprocess.run([sys.executable, "-m", "taumap", *args], capture_output=True,
                          text=True, env=env)


def write_curve(path, fourier):
    path.write_text(json.dumps({"fourier": fourier}))
    return str(path)


def entries(table):
    return {(tuple(e["unbarred"]), tuple(e["barred"])): (e["num"], e["den"], e["t0_exp"]) for e in table}


# -- coeffs -----------------------------------------------------------------------

def test_coeffs_w1(tmp_path):
    out = tmp_path / "c.json"
    assert cli.main(["coeffs", "--cutoff", "1", "--out", str(out)]) == 0
    assert entries(json.loads(out.read_text())) == {((1,), (1,)): ("1", "1", 1)}


def test_coeffs_w2(tmp_path):
    out = tmp_path / "c.json"
    assert cli.main(["coeffs", "--cutoff", "2", "--out", str(out)]) == 0
    got = entries(json.loads(out.read_text()))
    assert set(got) == {((1,), (1,)), ((2,), (2,)), ((1, 1), (2,)), ((2,), (1, 1)), ((1, 1), (1, 1))}
    assert got[((2,), (2,))][:2] == ("2", "1") and got[((2,), (2,))][2] == 2
    assert got[((1, 1), (2,))][:2] == ("2", "1") == got[((2,), (1, 1))][:2]
    assert got[((1, 1), (1, 1))][0] == "0"


def test_coeffs_invalid_cutoff():
    proc = run("coeffs", "--cutoff", "0")
    assert proc.returncode == 2 and "cutoff" in proc.stderr


def test_coeffs_output_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run("coeffs", "--cutoff", "4", "--out", str(a)).returncode == 0
    assert run("coeffs", "--cutoff", "4", "--out", str(b)).returncode == 0
    assert a.read_bytes() == b.read_bytes()


def test_memo_dump(tmp_path):
    memo = tmp_path / "memo.json"
    assert cli.main(["coeffs", "--cutoff", "3", "--out", str(tmp_path / "c.json"),
                     "--memo-dump", str(memo)]) == 0
    assert set(json.loads(memo.read_text())) == {"P", "T_pair", "T_multi", "S"}


def test_unwritable_output_reports_path(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["coeffs", "--cutoff", "1", "--out", str(blocker / "x.json")]) == 2
    assert str(blocker) in capsys.readouterr().err


# -- verify -----------------------------------------------------------------------

def test_verify_quick_mode(tmp_path):
    start = time.perf_counter()
    assert cli.main(["verify", "--cutoff", "2", "--out", str(tmp_path / "v.json")]) == 0
    assert time.perf_counter() - start < 1.0
    report = json.loads((tmp_path / "v.json").read_text())
    assert report["passed"] and report["mutation"] is None


def test_verify_mutation_fails(tmp_path):
    out = tmp_path / "v.json"
    assert cli.main(["verify", "--cutoff", "4", "--mutate", "--seed", "5", "--out", str(out)]) != 0
    report = json.loads(out.read_text())
    assert not report["passed"] and report["mutation"]["delta"] != "0"


def test_verify_parallel_matches_serial(tmp_path):
    serial, par = tmp_path / "s.json", tmp_path / "p.json"
    env = dict(os.environ, TAUMAP_THREADS="3")
    assert run("verify", "--cutoff", "4", "--out", str(serial)).returncode == 0
    assert run("verify", "--cutoff", "4", "--out", str(par), env=env).returncode == 0
    assert serial.read_bytes() == par.read_bytes()


# -- moments and map ------------------------------------------------------------------

def test_moments_subcommand(tmp_path):
    curve = write_curve(tmp_path / "c.json", [[1, 1.0, 0.0], [-1, 0.05, 0.0]])
    out = tmp_path / "m.json"
    assert cli.main(["moments", "--curve", curve, "--cutoff", "4", "--out", str(out)]) == 0
    m = json.loads(out.read_text())
    assert m["t0"] == pytest.approx(1.05 * 0.95, rel=1e-13)


def test_map_circle(tmp_path):
    curve = write_curve(tmp_path / "c.json", [[1, 1.5, 0.0]])
    out, csv_path = tmp_path / "w.json", tmp_path / "b.csv"
    proc = run("map", "--curve", curve, "--cutoff", "6", "--out", str(out), "--csv", str(csv_path),
               "--samples", "64")
    assert proc.returncode == 0 and "max||w|-1|" in proc.stderr
    w = json.loads(out.read_text())
    assert w["r"] == pytest.approx(1.5, rel=1e-14)
    assert max(abs(complex(*p)) for p in w["p"]) <= 1e-12
    assert w["boundary_error"] <= 1e-12
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "theta,re_w,im_w,abs_w_minus_1" and len(lines) == 65


def test_map_rejects_self_intersecting_curve(tmp_path):
    curve = write_curve(tmp_path / "c.json", [[1, 1.0, 0.0], [-2, 0.9, 0.0]])
    proc = run("map", "--curve", curve, "--cutoff", "3")
    assert proc.returncode == 2 and "self-intersects" in proc.stderr


def test_map_order_flags_validated(tmp_path):
    curve = write_curve(tmp_path / "c.json", [[1, 1.0, 0.0]])
    assert run("map", "--curve", curve, "--cutoff", "3", "--korder", "4").returncode == 2
    assert run("map", "--curve", curve, "--cutoff", "3", "--korder", "2", "--jorder", "3").returncode == 2


def test_run_config_defaults():
    cfg = cli.RunConfig(cutoff=5)
    assert (cfg.k, cfg.j) == (5, 5)
    assert cli.RunConfig(cutoff=5, korder=3).j == 3
