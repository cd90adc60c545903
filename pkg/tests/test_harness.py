"""Bench tables, trace I/O, metrics, and scenario-runner tests."""

import dataclasses
import math

import pytest

from vsleg.actuator import BallScrewDrive, LeafSpringParams, baseline_power
from vsleg.config import ObstacleSpec, default_config
from vsleg.dynamics import LegParams
from vsleg.fsm import ActuationMode, StiffnessSchedule
from vsleg.harness import (CalibrationError, TraceError, TraceRecord,
                           bench_modulation, bench_power, bench_stiffness,
                           compute_metrics, energy_account, obstacle_outcome,
                           read_trace, run_inplace_hop, write_metrics,
                           write_run, write_table, write_trace)

PARAMS = LeafSpringParams()
DRIVE = BallScrewDrive()
SCHED = StiffnessSchedule()
LEG = LegParams()


def record(t=0.0, phase="stance", **over):
    base = dict(t=t, phase=phase, mode="vs",
                x_b=0.0, z_b=0.35, th_h=-0.5, th_k=1.2,
                dx_b=0.0, dz_b=0.0, dth_h=0.0, dth_k=0.0,
                q=0.05, slider_x=0.070,
                tau_hip=1.0, tau_knee=2.0, tau_vllsa=0.5, f_contact=80.0,
                i_hip=0.5, i_knee=1.0,
                p_hip=2.0, p_knee=5.0, p_stiffness=1.2,
                e_hip=1.0, e_knee=2.0, e_stiffness=0.5, e_total=3.5,
                foot_x=0.0, foot_z=0.0)
    base.update(over)
    return TraceRecord(**base)


def straight_leg(x_b, z_b, **over):
    """Record with the leg hanging straight down (hip, knee, foot on one
    vertical line th_h=0, knee fully open)."""
    lt, ls = LEG.thigh_length, LEG.shank_length
    th_k = math.radians(150.0)  # interior offset: fully open
    # knee at z_b - lt, foot directly below at z_b - lt - ls
    over.setdefault("foot_x", x_b)
    over.setdefault("foot_z", z_b - lt - ls)
    return record(x_b=x_b, z_b=z_b, th_h=0.0, th_k=th_k, **over)


# -- bench tables -----------------------------------------------------------

def test_bench_stiffness_grid():
    rows = bench_stiffness(PARAMS)
    assert len(rows) >= 4
    for row in rows:
        q = math.radians(row["q_deg"])
        x = row["x_mm"] / 1000.0
        assert row["stiffness"] > 0.0 or row["q_deg"] > 44.0
        assert math.copysign(1.0, row["torque"]) == -math.copysign(1.0, q) \
            or row["q_deg"] == 0.0


def test_bench_modulation_durations():
    rows = bench_modulation(PARAMS, SCHED, DRIVE)
    table = {(r["band"], r["direction"]): r for r in rows}
    assert table[("small", "hs_to_ls")]["duration"] == 0.28
    assert table[("small", "ls_to_hs")]["duration"] == 0.20
    assert table[("large", "hs_to_ls")]["duration"] == 0.35
    assert table[("large", "ls_to_hs")]["duration"] == 0.29
    for r in rows:
        assert r["traversal_power"] >= baseline_power(DRIVE)
        assert r["avg_modulation_speed"] == pytest.approx(
            r["delta_k"] / r["duration"])


def test_bench_power_holding_grows_with_deflection():
    rows = bench_power(PARAMS, DRIVE, x=0.070, q_degrees=(0.0, 10.0, 20.0))
    powers = [r["holding_power"] for r in rows]
    assert powers[0] == 0.0
    assert powers[1] < powers[2]
    assert all(r["total_power"] == pytest.approx(
        baseline_power(DRIVE) + r["holding_power"]) for r in rows)


def test_write_table(tmp_path):
    path = tmp_path / "table.csv"
    write_table(path, bench_power(PARAMS, DRIVE))
    lines = path.read_text().splitlines()
    assert lines[0].startswith("q_deg,")
    with pytest.raises(ValueError):
        write_table(path, [])


# -- trace I/O --------------------------------------------------------------

def test_trace_round_trip(tmp_path):
    trace = [record(t=0.001 * k, tau_knee=0.1 * k) for k in range(5)]
    path = tmp_path / "trace.csv"
    write_trace(path, trace)
    back = read_trace(path)
    assert len(back) == len(trace)
    for a, b in zip(back, trace):
        assert a.phase == b.phase and a.mode == b.mode
        for field in ("t", "tau_knee", "z_b", "e_total"):
            assert getattr(a, field) == pytest.approx(
                getattr(b, field), rel=1e-9, abs=1e-12)


def test_read_trace_rejects_bad_header(tmp_path):
    path = tmp_path / "trace.csv"
    path.write_text("t,phase\n0.0,stance\n")
    with pytest.raises(TraceError):
        read_trace(path)


def test_read_trace_rejects_column_mismatch(tmp_path):
    path = tmp_path / "trace.csv"
    path.write_text("# vsleg-trace v1\nt,phase\n")
    with pytest.raises(TraceError):
        read_trace(path)


# -- metrics ----------------------------------------------------------------

def test_energy_account_requires_increasing_times():
    with pytest.raises(TraceError):
        energy_account([])
    with pytest.raises(TraceError):
        energy_account([record(t=0.0), record(t=0.0)])


def test_energy_account_values():
    trace = [record(t=0.0, phase="extend"),
             record(t=0.1, phase="flight_retract", p_knee=60.0),
             record(t=0.2, phase="landing", p_knee=30.0),
             record(t=0.3, phase="stance", p_knee=5.0,
                    e_hip=2.0, e_knee=4.0, e_stiffness=1.0, e_total=7.0)]
    acct = energy_account(trace)
    assert acct["energy_total"] == 7.0
    assert acct["stiffness_share"] == pytest.approx(1.0 / 7.0)
    assert acct["peak_knee_power_flight_retract"] == 60.0
    assert acct["peak_knee_power_landing"] == 30.0


def test_compute_metrics_timings_and_validation():
    trace = [record(t=0.0, phase="crouch"),
             record(t=0.1, phase="extend"),
             record(t=0.38, phase="flight_retract", foot_z=0.12),
             record(t=0.80, phase="landing"),
             record(t=1.20, phase="stance")]
    transitions = [(0.0, "crouch"), (0.1, "extend"),
                   (0.38, "flight_retract"), (0.80, "landing"),
                   (1.20, "stance")]
    m = compute_metrics(trace, transitions)
    assert m.t_jl == pytest.approx(0.28)
    assert m.t_ll == pytest.approx(0.42)
    assert m.peak_foot_lift == pytest.approx(0.12)
    assert m.hops == 1
    with pytest.raises(TraceError):
        compute_metrics([], transitions)


# -- obstacle geometry ------------------------------------------------------

BOX = ObstacleSpec(distance=1.5, width=0.10, height=0.24,
                   clearance_margin=0.01)


def test_obstacle_cleared_by_flight():
    # hop arc: straight leg at low altitude before and after the box,
    # tucked high above it
    trace = [straight_leg(1.0, 0.35, t=0.0),
             record(t=0.5, x_b=1.55, z_b=1.0, foot_x=1.55, foot_z=0.65,
                    th_h=0.0, th_k=2.0),
             straight_leg(2.2, 0.35, t=1.0)]
    cleared, collided = obstacle_outcome(trace, LEG, BOX)
    assert cleared and not collided


def test_obstacle_foot_through_box_collides():
    trace = [straight_leg(1.0, 0.35, t=0.0),
             straight_leg(1.55, 0.35, t=0.5),
             straight_leg(2.2, 0.35, t=1.0)]
    cleared, collided = obstacle_outcome(trace, LEG, BOX)
    assert collided and not cleared


def test_obstacle_landed_short_not_cleared():
    trace = [straight_leg(1.0, 0.35, t=0.0),
             straight_leg(1.4, 0.35, t=0.5)]
    cleared, collided = obstacle_outcome(trace, LEG, BOX)
    assert not cleared and not collided


def test_obstacle_zero_height_is_distance_mark():
    flat = ObstacleSpec(distance=1.5, width=0.1, height=0.0,
                        clearance_margin=0.01)
    short = [straight_leg(1.0, 0.35, t=0.0)]
    past = short + [straight_leg(1.7, 0.35, t=1.0)]
    assert obstacle_outcome(short, LEG, flat) == (False, False)
    assert obstacle_outcome(past, LEG, flat) == (True, False)


# -- runners ----------------------------------------------------------------

def test_uncalibrated_config_rejected():
    cfg = dataclasses.replace(default_config("inplace"), calibrated=False)
    with pytest.raises(CalibrationError):
        run_inplace_hop(ActuationMode.VS, None, cfg)


def test_write_run_layout(tmp_path, inplace_results):
    _, result, _ = inplace_results[ActuationMode.VS]
    out = write_run(tmp_path / "run", result)
    assert (out / "trace.csv").exists()
    assert (out / "metrics.txt").exists()
    assert (out / "events.log").exists()
    back = read_trace(out / "trace.csv")
    assert len(back) == len(result.trace)


def test_metrics_file_format(tmp_path, inplace_results):
    metrics, _, _ = inplace_results[ActuationMode.CHS]
    path = tmp_path / "metrics.txt"
    write_metrics(path, metrics)
    text = path.read_text()
    assert "energy_total =" in text
    assert "cleared =" in text


def test_run_phase_sequence_legal(inplace_results):
    legal = {
        "crouch": {"extend"},
        "extend": {"flight_retract"},
        "flight_retract": {"flight_extend", "landing"},
        "flight_extend": {"landing"},
        "landing": {"stance"},
        "stance": {"extend"},
    }
    for metrics, result, _ in inplace_results.values():
        assert not result.faulted
        phases = [ph for _, ph in result.transitions]
        for a, b in zip(phases, phases[1:]):
            assert b in legal[a], (a, b)
