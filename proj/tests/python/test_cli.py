import json
import os
import subprocess

import pytest

CLI = os.environ.get("HOMLAB_CLI")
pytestmark = pytest.mark.skipif(not CLI, reason="HOMLAB_CLI not set")


def cli(*args):
    return subprocess.run([CLI, *args], capture_output=True, text=True)


def test_bad_size_exits_2(tmp_path):
    r = cli("rve", "--L", "7", "--out", str(tmp_path))
    assert r.returncode == 2
    assert "power of two" in r.stderr


def test_unknown_flag_exits_2():
    r = cli("rve", "--bogus", "1")
    assert r.returncode == 2


def test_bad_config_line(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("N = 4\nN = 5\n")
    r = cli("rve", "--config", str(cfg), "--out", str(tmp_path))
    assert r.returncode == 2
    assert "c.cfg:2" in r.stderr


def test_two_phase_sgap_is_rejected(tmp_path):
    assert cli("sgap", "--L", "8", "--N", "32", "--out", str(tmp_path)).returncode == 2


def test_rve_outputs_and_report(tmp_path):
    out = tmp_path / "out"
    r = cli("rve", "--L", "8,16", "--N", "4", "--workers", "2", "--out", str(out))
    assert r.returncode == 0, r.stderr
    assert "PASS rve voigt_reuss" in r.stdout
    lines = (out / "rve.csv").read_text().splitlines()
    assert lines[0].startswith("L,sample,")
    assert len(lines) == 1 + 8
    manifest = json.loads((out / "rve.manifest.json").read_text())
    assert len(manifest["input_hash"]) == 40
    assert set(manifest["outputs"]) == {"rve.csv", "rve.json"}

    # Same config through the file written next to the results.
    again = tmp_path / "again"
    r = cli("rve", "--config", str(out / "rve.config"), "--workers", "1", "--out", str(again))
    assert r.returncode == 0, r.stderr
    assert (again / "rve.csv").read_bytes() == (out / "rve.csv").read_bytes()

    r = cli("report", "--dir", str(out))
    assert r.returncode == 0
    assert "checks passed" in r.stdout


def test_gen_writes_a_field(tmp_path):
    f = tmp_path / "a.hgf"
    r = cli("gen", "--L", "8", "--law", "log-uniform", "--out", str(f))
    assert r.returncode == 0, r.stderr
    assert f.stat().st_size > 0
