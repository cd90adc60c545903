"""End-to-end CLI tests (exit codes, file outputs, config plumbing)."""

import subprocess
import sys
from pathlib import Path

import pytest

CLI = [sys.executable, "-m", "vsleg.cli"]


def run_cli(*args, cwd=None):
    return subprocess.run(CLI + list(args), capture_output=True, text=True,
                          cwd=cwd)


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Directory with a written config template plus a calibration file."""
    wd = tmp_path_factory.mktemp("cli")
    cfg = wd / "config.ini"
    out = run_cli("init-config")
    assert out.returncode == 0
    cfg.write_text(out.stdout)
    cal = run_cli("calibrate", "--config", str(cfg), "--out", str(wd))
    assert cal.returncode == 0, cal.stderr
    assert (wd / "calibration.txt").exists()
    return wd


def test_no_arguments_is_usage_error():
    out = run_cli()
    assert out.returncode == 2


def test_unknown_subcommand_is_usage_error():
    out = run_cli("frobnicate")
    assert out.returncode == 2


def test_bad_config_path_is_exit_2(tmp_path):
    out = run_cli("bench", "stiffness", "--config",
                  str(tmp_path / "missing.ini"), "--out", str(tmp_path))
    assert out.returncode == 2
    assert "error:" in out.stderr


def test_set_without_config_is_exit_2(tmp_path):
    out = run_cli("bench", "stiffness", "--set", "sim.dt=1e-3",
                  "--out", str(tmp_path))
    assert out.returncode == 2


def test_bad_override_is_exit_2(workdir, tmp_path):
    out = run_cli("hop", "inplace", "vs",
                  "--config", str(workdir / "config.ini"),
                  "--calibration", str(workdir / "calibration.txt"),
                  "--set", "sim.dt=zero", "--out", str(tmp_path))
    assert out.returncode == 2


def test_calibrate_reports_anchors(workdir):
    text = (workdir / "calibration.txt").read_text()
    assert "e = " in text and "a = " in text and "eta_tau_s = " in text


def test_bench_tables(workdir, tmp_path):
    for which in ("stiffness", "modulation", "power"):
        out = run_cli("bench", which, "--config", str(workdir / "config.ini"),
                      "--calibration", str(workdir / "calibration.txt"),
                      "--out", str(tmp_path))
        assert out.returncode == 0, out.stderr
    assert (tmp_path / "bench_modulation.csv").exists()


def test_hop_uncalibrated_is_exit_2(workdir, tmp_path):
    out = run_cli("hop", "inplace", "vs",
                  "--config", str(workdir / "config.ini"),
                  "--out", str(tmp_path))
    assert out.returncode == 2
    assert "calibrate" in out.stderr


def test_hop_run_and_report(workdir, tmp_path):
    out_dir = tmp_path / "run"
    out = run_cli("hop", "inplace", "chs",
                  "--config", str(workdir / "config.ini"),
                  "--calibration", str(workdir / "calibration.txt"),
                  "--out", str(out_dir))
    assert out.returncode == 0, out.stderr
    assert (out_dir / "trace.csv").exists()
    assert (out_dir / "metrics.txt").exists()
    rep = run_cli("report", str(out_dir / "trace.csv"))
    assert rep.returncode == 0, rep.stderr
    assert "energy_total" in rep.stdout
    # report also accepts the run directory itself
    rep_dir = run_cli("report", str(out_dir))
    assert rep_dir.returncode == 0


def test_report_missing_trace_is_exit_2(tmp_path):
    out = run_cli("report", str(tmp_path / "nope.csv"))
    assert out.returncode == 2


def test_default_config_runs_without_files(tmp_path):
    out = run_cli("hop", "inplace", "dmd", "--out", str(tmp_path / "r"))
    assert out.returncode == 0, out.stderr


def test_sweep_two_modes(workdir, tmp_path):
    out = run_cli("sweep", "inplace", "--modes", "dmd", "chs",
                  "--config", str(workdir / "config.ini"),
                  "--calibration", str(workdir / "calibration.txt"),
                  "--out", str(tmp_path / "sweep"))
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "sweep" / "dmd" / "trace.csv").exists()
    assert (tmp_path / "sweep" / "chs" / "metrics.txt").exists()
