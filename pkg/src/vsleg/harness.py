"""Experiment harness: calibration, bench rigs, scenario runner, traces.

Everything here is deterministic: the same config produces byte-identical
trace files.  Metrics are recomputed from the trace columns, so they can
be rebuilt offline from a saved CSV.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from . import actuator, dynamics, fsm as fsm_mod
from .actuator import ActuatorState, BallScrewDrive, LeafSpringParams
from .config import MotorModel, ObstacleSpec, SimConfig, apply_calibration
from .dynamics import (Event, LegParams, LegState, Phase, SimulationFault,
                       foot_position, forward_kinematics, knee_position,
                       leg_extension, state_from_leg_frame)
from .fsm import (ActuationMode, HoppingFsm, HopPhase, HopPlan,
                  StiffnessSchedule, deflection_from_knee,
                  stiffness_motor_power)
from .vmc import (ContactEstimate, joint_torques, motor_torques,
                  virtual_force)

TRACE_VERSION = "vsleg-trace v1"

TRACE_COLUMNS = (
    "t", "phase", "mode",
    "x_b", "z_b", "th_h", "th_k",
    "dx_b", "dz_b", "dth_h", "dth_k",
    "q", "slider_x",
    "tau_hip", "tau_knee", "tau_vllsa", "f_contact",
    "i_hip", "i_knee",
    "p_hip", "p_knee", "p_stiffness",
    "e_hip", "e_knee", "e_stiffness", "e_total",
    "foot_x", "foot_z",
)


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    return format(float(value), ".10g")


class CalibrationError(RuntimeError):
    """Lever-arm fit failed to converge or produced unphysical values."""


class TraceError(ValueError):
    """Trace is empty, truncated, or out of order."""


# ---------------------------------------------------------------------------
# calibration

def calibrate_lever_arms(anchors, q: float,
                         template: LeafSpringParams | None = None,
                         max_residual: float = 0.05):
    """Fit the crank/hinge lever arms (e, a) to stiffness anchor points.

    anchors is a sequence of (slider_x, stiffness) pairs measured at
    deflection q.  Two points determine the pair uniquely (one fixes the
    x-dependence through a, the other the overall scale through e);
    more are fit in the least-squares sense.
    """
    anchors = [(float(x), float(k)) for x, k in anchors]
    if len(anchors) < 2:
        raise CalibrationError("need at least two (x, K) anchor points")
    base = template or LeafSpringParams()
    L = base.spring_length
    scale = 3.0 * base.youngs_modulus * base.area_moment / L**3

    def model(e, a, x):
        rel_a = a / L
        u = rel_a + 1.0 - x / L
        return scale * e * e * math.cos(2.0 * q) / (u**3 - rel_a**3)

    def residuals(p):
        e, a = p
        return [model(e, a, x) / k - 1.0 for x, k in anchors]

    fit = least_squares(residuals, x0=(0.03, 0.02),
                        bounds=((1e-4, 1e-4), (L / 3.0 - 1e-6, 0.5 * L)))
    if not fit.success:
        raise CalibrationError(f"lever-arm fit did not converge: {fit.message}")
    e, a = map(float, fit.x)
    if a <= 0.0 or e >= L / 3.0:
        raise CalibrationError(f"unphysical fit result e={e}, a={a}")
    worst = max(abs(r) for r in residuals((e, a)))
    if worst > max_residual:
        raise CalibrationError(
            f"fit residual {worst:.3f} exceeds {max_residual:.0%}")
    return e, a


def write_calibration(path, lever_e: float, lever_a: float,
                      eta_tau_s: float):
    """Append a calibration record; the last record in the file wins."""
    path = Path(path)
    lines = [f"e = {_fmt(lever_e)}", f"a = {_fmt(lever_a)}",
             f"eta_tau_s = {_fmt(eta_tau_s)}", ""]
    with path.open("a") as f:
        f.write("\n".join(lines))


def read_calibration(path) -> dict:
    values = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, raw = (part.strip() for part in line.split("=", 1))
        values[key] = float(raw)
    for key in ("e", "a", "eta_tau_s"):
        if key not in values:
            raise CalibrationError(f"calibration file missing {key!r}")
    return values


def load_calibrated(config: SimConfig, path) -> SimConfig:
    cal = read_calibration(path)
    return apply_calibration(config, cal["e"], cal["a"], cal["eta_tau_s"])


# ---------------------------------------------------------------------------
# bench rigs

BENCH_Q_DEGREES = (0, 4, 8, 12, 16, 20)
BENCH_X_MM = tuple(range(35, 71, 5))


def bench_stiffness(params: LeafSpringParams,
                    q_degrees=BENCH_Q_DEGREES, x_mm=BENCH_X_MM):
    """Stiffness/torque table over the characterization grid.

    Returns a list of dict rows with keys q_deg, x_mm, stiffness,
    torque; values come straight from the closed-form model.
    """
    rows = []
    for q_deg in q_degrees:
        q = math.radians(q_deg)
        for xm in x_mm:
            x = xm / 1000.0
            rows.append({
                "q_deg": float(q_deg), "x_mm": float(xm),
                "stiffness": actuator.spring_stiffness(params, q, x),
                "torque": actuator.spring_torque(params, q, x),
            })
    return rows


def bench_modulation(params: LeafSpringParams, schedule: StiffnessSchedule,
                     drive: BallScrewDrive):
    """Traversal timing and power table, one row per (band, direction).

    Traversal times are the configured measured values; the average
    modulation speed is the stiffness span over that time.  Traversal
    power is the no-load baseline plus the worst-case holding term over
    the travel.
    """
    p0 = actuator.baseline_power(drive)
    rows = []
    for band, q_deg in (("small", 0.0), ("large", 20.0)):
        q = math.radians(q_deg)
        dk = (actuator.spring_stiffness(params, q, schedule.x_hs)
              - actuator.spring_stiffness(params, q, schedule.x_ls))
        xs = np.linspace(schedule.x_ls, schedule.x_hs, 101)
        f_peak = max(abs(actuator.spring_holding_force(params, q, x))
                     for x in xs)
        for direction, toward_hs in (("ls_to_hs", True), ("hs_to_ls", False)):
            t = schedule.traversal_time(toward_hs, q)
            rows.append({
                "band": band, "q_deg": q_deg, "direction": direction,
                "duration": t,
                "delta_k": dk,
                "avg_modulation_speed": dk / t,
                "traversal_power": p0 + f_peak * drive.slider_speed
                / drive.screw_efficiency,
            })
    return rows


def bench_power(params: LeafSpringParams, drive: BallScrewDrive,
                x: float = 0.070, q_degrees=BENCH_Q_DEGREES):
    """Holding force/power versus deflection at a fixed slider position."""
    p0 = actuator.baseline_power(drive)
    rows = []
    for q_deg in q_degrees:
        q = math.radians(q_deg)
        f = actuator.spring_holding_force(params, q, x)
        dp = abs(f) * drive.slider_speed / drive.screw_efficiency
        rows.append({
            "q_deg": float(q_deg), "x_mm": x * 1000.0,
            "holding_force": f, "holding_power": dp,
            "total_power": p0 + dp,
        })
    return rows


def write_table(path, rows):
    if not rows:
        raise ValueError("empty table")
    cols = list(rows[0].keys())
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in cols))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# scenario runner

@dataclass(frozen=True)
class TraceRecord:
    t: float
    phase: str
    mode: str
    x_b: float
    z_b: float
    th_h: float
    th_k: float
    dx_b: float
    dz_b: float
    dth_h: float
    dth_k: float
    q: float
    slider_x: float
    tau_hip: float
    tau_knee: float
    tau_vllsa: float
    f_contact: float
    i_hip: float
    i_knee: float
    p_hip: float
    p_knee: float
    p_stiffness: float
    e_hip: float
    e_knee: float
    e_stiffness: float
    e_total: float
    foot_x: float
    foot_z: float

    def row(self):
        return tuple(getattr(self, c) for c in TRACE_COLUMNS)


@dataclass(frozen=True)
class RunMetrics:
    peak_foot_lift: float
    t_jl: float                      # jump (extend) to leg retraction
    t_ll: float                      # leg retraction to landing
    peak_knee_power_retraction: float
    peak_knee_power_landing: float
    peak_knee_power_stance: float
    energy_hip: float
    energy_knee: float
    energy_stiffness: float
    energy_total: float
    stiffness_share: float
    cleared: bool
    hops: int
    distance: float
    duration: float
    audit_residual: float            # fraction of energy throughput

    def __post_init__(self):
        numeric = (self.peak_foot_lift, self.t_jl, self.t_ll,
                   self.peak_knee_power_retraction,
                   self.peak_knee_power_landing,
                   self.peak_knee_power_stance, self.energy_hip,
                   self.energy_knee, self.energy_stiffness,
                   self.energy_total, self.duration)
        if any(v < 0.0 for v in numeric):
            raise ValueError("metrics must be non-negative")
        if not 0.0 <= self.stiffness_share <= 1.0:
            raise ValueError("stiffness share must lie in [0, 1]")

    def as_dict(self):
        return {
            "peak_foot_lift": self.peak_foot_lift,
            "t_jl": self.t_jl, "t_ll": self.t_ll,
            "peak_knee_power_retraction": self.peak_knee_power_retraction,
            "peak_knee_power_landing": self.peak_knee_power_landing,
            "peak_knee_power_stance": self.peak_knee_power_stance,
            "energy_hip": self.energy_hip,
            "energy_knee": self.energy_knee,
            "energy_stiffness": self.energy_stiffness,
            "energy_total": self.energy_total,
            "stiffness_share": self.stiffness_share,
            "cleared": int(self.cleared),
            "hops": self.hops, "distance": self.distance,
            "duration": self.duration,
            "audit_residual": self.audit_residual,
        }


@dataclass
class RunResult:
    trace: list
    metrics: RunMetrics
    transitions: list                # (t, phase-name)
    events: list                     # (t, text)
    faulted: bool = False
    fault: str = ""


class _EnergyAudit:
    """Running mechanical energy balance for one simulation."""

    def __init__(self):
        self.work_motor = 0.0
        self.work_spring = 0.0
        self.work_stop = 0.0
        self.impact_loss = 0.0

    def residual(self, e0: float, e1: float) -> float:
        supplied = self.work_motor + self.work_spring + self.work_stop
        delta = e1 - e0 + self.impact_loss
        residual = supplied - delta
        throughput = (abs(self.work_motor) + abs(self.work_spring)
                      + abs(self.work_stop) + abs(self.impact_loss)
                      + abs(e1 - e0))
        if throughput < 1e-9:
            return 0.0
        return abs(residual) / throughput


class HopSimulator:
    """Fixed-step hybrid simulation of one hopping run."""

    def __init__(self, config: SimConfig, mode: ActuationMode,
                 obstacle: ObstacleSpec | None = None):
        self.cfg = config
        self.mode = mode
        self.obstacle = obstacle
        self.inplace = config.inplace
        self.fsm = HoppingFsm(mode=mode, plan=config.plan,
                              schedule=config.schedule)
        self.substeps = round(config.sim.control_dt / config.sim.dt)

    # -- per-tick torque computation -------------------------------------

    def _spring_torque_knee(self, th_k: float, x: float) -> float:
        if not self.fsm.spring_engaged():
            return 0.0
        q = deflection_from_knee(self.cfg.gear, th_k)
        tau = actuator.spring_torque(self.cfg.spring, q, x)
        return tau / self.cfg.gear.ratio_i

    def _control(self, t, state, command):
        cfg = self.cfg
        kin = forward_kinematics(cfg.leg, state)
        f_v = virtual_force(command.gains, command.target, kin.r, kin.r_dot)
        bias = dynamics.bias_terms(cfg.leg, state)
        j_c = dynamics.contact_jacobian(cfg.leg, state.qpos)
        j_v = dynamics.virtual_jacobian(cfg.leg, state.qpos)
        if state.phase is Phase.STANCE:
            f_hat = ContactEstimate.stance(cfg.leg)
        else:
            f_hat = ContactEstimate.flight()
        tau_j = joint_torques(bias, j_v, j_c, f_v, f_hat)
        tau_spring = self._spring_torque_knee(state.qpos[3], command.slider_x)
        # peak rating only during the short push-off burst; the motors run
        # at their continuous rating everywhere else
        if command.phase is HopPhase.EXTEND:
            limits = (cfg.leg.hip_torque_limit, cfg.leg.knee_torque_limit)
        else:
            limits = (cfg.leg.hip_torque_nominal,
                      cfg.leg.knee_torque_nominal)
        # ground phases regulate posture against the spring preload;
        # flight runs pure PD so stiffness shapes the tuck depth
        if command.phase in (HopPhase.FLIGHT_RETRACT, HopPhase.FLIGHT_EXTEND):
            feedforward = 0.0
        else:
            feedforward = tau_spring
        motors = motor_torques(tau_j, *limits, tau_knee_spring=feedforward)
        return motors.tau, tau_spring

    # -- main loop -------------------------------------------------------

    def run(self) -> RunResult:
        cfg = self.cfg
        dt = cfg.sim.dt
        control_dt = cfg.sim.control_dt
        state = state_from_leg_frame(cfg.leg, cfg.plan.d_0, cfg.plan.h_0,
                                     phase=Phase.STANCE)
        audit = _EnergyAudit()
        e_mech0 = dynamics.mechanical_energy(cfg.leg, state)

        trace: list[TraceRecord] = []
        events_log: list[tuple[float, str]] = []
        e_hip = e_knee = e_stiff = 0.0
        tick_events: set = set()
        last_liftoff = -math.inf
        finish_at = None
        fault_text = ""
        faulted = False

        t = 0.0
        n_ticks = int(round(cfg.sim.max_duration / control_dt))
        for tick in range(n_ticks):
            t = tick * control_dt
            q = deflection_from_knee(cfg.gear, state.qpos[3])
            h = leg_extension(cfg.leg, state.qpos)
            try:
                command = self.fsm.advance(t, tick_events, h,
                                           state.qpos[1], state.qvel[1], q)
            except fsm_mod.FsmFault as exc:
                faulted, fault_text = True, f"t={t:.4f}: {exc}"
                break
            for ev in sorted(tick_events, key=lambda e: e.value):
                events_log.append((t, f"event {ev.value}"))
            tick_events = set()

            try:
                tau_m, tau_spring = self._control(t, state, command)
            except (dynamics.SimulationFault,
                    actuator.ActuatorDomainError) as exc:
                faulted, fault_text = True, f"t={t:.4f}: {exc}"
                break

            # electrical bookkeeping at the tick rate
            p_hip = cfg.motor.electrical_power(tau_m[0], state.qvel[2])
            p_knee = cfg.motor.electrical_power(tau_m[1], state.qvel[3])
            p_stiff = stiffness_motor_power(self.fsm, t, q, cfg.spring,
                                            cfg.drive)
            e_hip += p_hip * control_dt
            e_knee += p_knee * control_dt
            e_stiff += p_stiff * control_dt

            # physics substeps with zero-order-hold motor torques
            try:
                state, f_c_log, td_loss, sub_events, last_liftoff = \
                    self._integrate_tick(state, t, tau_m, command,
                                         last_liftoff)
            except dynamics.SimulationFault as exc:
                faulted, fault_text = True, f"t={t:.4f}: {exc}"
                break
            audit.impact_loss += td_loss
            tick_events |= sub_events
            self._accumulate_work(audit, tau_m, tau_spring)
            kin_foot = foot_position(cfg.leg, state.qpos)

            trace.append(TraceRecord(
                t=t, phase=command.phase.value, mode=self.mode.value,
                x_b=state.qpos[0], z_b=state.qpos[1],
                th_h=state.qpos[2], th_k=state.qpos[3],
                dx_b=state.qvel[0], dz_b=state.qvel[1],
                dth_h=state.qvel[2], dth_k=state.qvel[3],
                q=q, slider_x=command.slider_x,
                tau_hip=tau_m[0], tau_knee=tau_m[1], tau_vllsa=tau_spring,
                f_contact=f_c_log,
                i_hip=cfg.motor.current(tau_m[0]),
                i_knee=cfg.motor.current(tau_m[1]),
                p_hip=p_hip, p_knee=p_knee, p_stiffness=p_stiff,
                e_hip=e_hip, e_knee=e_knee, e_stiffness=e_stiff,
                e_total=e_hip + e_knee + e_stiff,
                foot_x=kin_foot[0], foot_z=kin_foot[1]))

            if finish_at is None and self.fsm.finished():
                finish_at = t + 0.3
            if finish_at is not None and t >= finish_at:
                break
            if self.obstacle is not None and self._past_obstacle(state):
                break

        if not trace:
            raise SimulationFault(fault_text or "run produced no trace")
        audit_res = audit.residual(
            e_mech0, dynamics.mechanical_energy(cfg.leg, state))
        transitions = [(tt, ph.value) for tt, ph in self.fsm.transitions]
        for tt, target in self.fsm.slider_commands:
            events_log.append((tt, f"slider -> {_fmt(target)}"))
        events_log.extend((tt, f"phase {name}") for tt, name in transitions)
        events_log.sort(key=lambda item: item[0])
        metrics = compute_metrics(trace, transitions, self.obstacle,
                                  audit_residual=audit_res)
        return RunResult(trace=trace, metrics=metrics,
                         transitions=transitions, events=events_log,
                         faulted=faulted, fault=fault_text)

    def _integrate_tick(self, state, t0, tau_m, command, last_liftoff):
        """Advance one control period; returns events seen inside it."""
        cfg = self.cfg
        dt = cfg.sim.dt
        events: set = set()
        td_loss = 0.0
        f_c = 0.0
        threshold = self.fsm.height_trigger()
        self._work_terms = []
        for k in range(self.substeps):
            t = t0 + k * dt
            x_slider = self.fsm.slider_position(t)
            tau_spring = self._spring_torque_knee(state.qpos[3], x_slider)
            stop = dynamics.joint_stop_torque(state.qpos, state.qvel)
            prev = state
            new, info = dynamics.step(cfg.leg, state, tau_m, tau_spring,
                                      dt, self.inplace)
            if state.phase is Phase.STANCE and info.force[1] < 0.0:
                # contact can no longer push: switch to flight and redo
                state = LegState(state.qpos, state.qvel, Phase.FLIGHT)
                new, info = dynamics.step(cfg.leg, state, tau_m, tau_spring,
                                          dt, self.inplace)
                events.add(Event.LIFTOFF)
                last_liftoff = t
            dt_eff = dt
            if (state.phase is Phase.FLIGHT
                    and foot_position(cfg.leg, new.qpos)[1] <= 0.0
                    and t - last_liftoff > cfg.sim.touchdown_refractory):
                new, dt_eff = self._touchdown(state, tau_m, tau_spring, dt)
                events.add(Event.TOUCHDOWN)
                v_plus, loss = dynamics.touchdown_projection(
                    cfg.leg, new, self.inplace)
                td_loss += loss
                new = LegState(new.qpos, v_plus, Phase.STANCE)
            if prev.qvel[1] > 0.0 >= new.qvel[1] \
                    and prev.phase is Phase.FLIGHT:
                events.add(Event.APEX)
            if threshold is not None:
                h0 = leg_extension(cfg.leg, prev.qpos)
                h1 = leg_extension(cfg.leg, new.qpos)
                if h0 < threshold <= h1:
                    events.add(Event.HEIGHT_CROSSING)
            f_c = info.force[1]
            self._work_terms.append(
                (tau_spring, stop, new.qvel[2], new.qvel[3], dt_eff))
            state = new
        return state, f_c, td_loss, events, last_liftoff

    def _touchdown(self, state, tau_m, tau_spring, dt):
        """Bisect the impact time inside one substep, land the state there."""
        cfg = self.cfg

        def foot_height(s):
            return foot_position(cfg.leg, s.qpos)[1]

        try:
            t_star, at_event = dynamics.locate_event(
                cfg.leg, state, tau_m, tau_spring, dt, foot_height,
                self.inplace)
        except ValueError:
            # foot already at/below ground at the substep start
            t_star, at_event = 0.0, state.copy()
        return LegState(at_event.qpos, at_event.qvel, Phase.FLIGHT), t_star

    def _accumulate_work(self, audit, tau_m, tau_spring_tick):
        for tau_spring, stop, w_hip, w_knee, dt in self._work_terms:
            audit.work_motor += (tau_m[0] * w_hip + tau_m[1] * w_knee) * dt
            audit.work_spring += tau_spring * w_knee * dt
            audit.work_stop += stop * w_knee * dt

    def _past_obstacle(self, state) -> bool:
        end = self.obstacle.distance + self.obstacle.width + 0.3
        return state.qpos[0] > end and state.phase is Phase.STANCE


# ---------------------------------------------------------------------------
# metrics (pure functions of the trace)

def _segment_hits_box(p0, p1, x_lo, x_hi, z_hi, samples: int = 24) -> bool:
    for i in range(samples + 1):
        s = i / samples
        x = p0[0] + s * (p1[0] - p0[0])
        z = p0[1] + s * (p1[1] - p0[1])
        if x_lo <= x <= x_hi and z <= z_hi:
            return True
    return False


def obstacle_outcome(trace, leg: LegParams, obstacle: ObstacleSpec):
    """(cleared, collided) from leg-segment geometry along the trace."""
    if obstacle.height <= 0.0:
        final_x = max(rec.foot_x for rec in trace)
        return final_x > obstacle.distance + obstacle.width, False
    m = obstacle.clearance_margin
    x_lo = obstacle.distance - m
    x_hi = obstacle.distance + obstacle.width + m
    z_hi = obstacle.height + m
    collided = False
    max_foot_x = -math.inf
    for rec in trace:
        max_foot_x = max(max_foot_x, rec.foot_x)
        qpos = np.array([rec.x_b, rec.z_b, rec.th_h, rec.th_k])
        hip = (rec.x_b, rec.z_b)
        knee = tuple(knee_position(leg, qpos))
        foot = (rec.foot_x, rec.foot_z)
        span = (min(hip[0], knee[0], foot[0]), max(hip[0], knee[0], foot[0]))
        if span[1] < x_lo or span[0] > x_hi:
            continue
        if (_segment_hits_box(hip, knee, x_lo, x_hi, z_hi)
                or _segment_hits_box(knee, foot, x_lo, x_hi, z_hi)):
            collided = True
            break
    cleared = (not collided) and max_foot_x > obstacle.distance + obstacle.width
    return cleared, collided


def _phase_entries(transitions, name):
    return [t for t, ph in transitions if ph == name]


def _peak_power_in(trace, t0, t1, column="p_knee"):
    peak = 0.0
    for rec in trace:
        if t0 <= rec.t < t1:
            peak = max(peak, getattr(rec, column))
    return peak


def compute_metrics(trace, transitions, obstacle: ObstacleSpec | None = None,
                    leg: LegParams | None = None,
                    audit_residual: float = 0.0) -> RunMetrics:
    if not trace:
        raise TraceError("empty trace")
    leg = leg or LegParams()
    t_end = trace[-1].t

    peak_lift = max(rec.foot_z for rec in trace)
    extends = _phase_entries(transitions, HopPhase.EXTEND.value)
    retracts = _phase_entries(transitions, HopPhase.FLIGHT_RETRACT.value)
    landings = _phase_entries(transitions, HopPhase.LANDING.value)
    t_jl = retracts[0] - extends[0] if extends and retracts else 0.0
    t_ll = landings[0] - retracts[0] if retracts and landings else 0.0

    def window(entries, fallback=(0.0, 0.0)):
        if not entries:
            return fallback
        t0 = entries[-1]
        later = [t for t, _ in transitions if t > t0]
        return t0, min(later) if later else t_end
    p_retract = _peak_power_in(trace, *window(retracts))
    p_landing = _peak_power_in(trace, *window(landings))
    stances = (_phase_entries(transitions, HopPhase.STANCE.value)
               or _phase_entries(transitions, HopPhase.EXTEND.value))
    p_stance = _peak_power_in(trace, *window(stances))

    last = trace[-1]
    total = last.e_total
    share = last.e_stiffness / total if total > 0.0 else 0.0

    cleared = True
    if obstacle is not None:
        cleared, _ = obstacle_outcome(trace, leg, obstacle)

    hops = len(landings)
    distance = last.x_b - trace[0].x_b
    return RunMetrics(
        peak_foot_lift=peak_lift, t_jl=max(t_jl, 0.0), t_ll=max(t_ll, 0.0),
        peak_knee_power_retraction=p_retract,
        peak_knee_power_landing=p_landing,
        peak_knee_power_stance=p_stance,
        energy_hip=last.e_hip, energy_knee=last.e_knee,
        energy_stiffness=last.e_stiffness, energy_total=total,
        stiffness_share=min(max(share, 0.0), 1.0),
        cleared=cleared, hops=hops, distance=distance,
        duration=t_end, audit_residual=audit_residual)


def energy_account(trace) -> dict:
    """Per-motor energies and event-window power extrema from a trace."""
    if not trace:
        raise TraceError("empty trace")
    ts = [rec.t for rec in trace]
    if any(t1 <= t0 for t0, t1 in zip(ts, ts[1:])):
        raise TraceError("trace times are not strictly increasing")
    last = trace[-1]
    transitions = []
    for prev, rec in zip(trace, trace[1:]):
        if rec.phase != prev.phase:
            transitions.append((rec.t, rec.phase))
    account = {
        "energy_hip": last.e_hip,
        "energy_knee": last.e_knee,
        "energy_stiffness": last.e_stiffness,
        "energy_total": last.e_total,
        "stiffness_share": (last.e_stiffness / last.e_total
                            if last.e_total > 0.0 else 0.0),
        "peak_power_hip": max(rec.p_hip for rec in trace),
        "peak_power_knee": max(rec.p_knee for rec in trace),
        "peak_power_stiffness": max(rec.p_stiffness for rec in trace),
    }
    for name in (HopPhase.FLIGHT_RETRACT, HopPhase.LANDING, HopPhase.STANCE):
        entries = [t for t, ph in transitions if ph == name.value]
        if entries:
            t0 = entries[-1]
            later = [t for t, _ in transitions if t > t0]
            t1 = later[0] if later else last.t
        else:
            t0 = t1 = 0.0
        account[f"peak_knee_power_{name.value}"] = _peak_power_in(
            trace, t0, t1)
    return account


# ---------------------------------------------------------------------------
# scenario entry points

def run_inplace_hop(mode: ActuationMode, plan: HopPlan | None,
                    config: SimConfig) -> tuple:
    cfg = replace(config, scenario="inplace")
    if plan is not None:
        cfg = replace(cfg, plan=plan)
    if not cfg.calibrated:
        raise CalibrationError("config is uncalibrated; run calibrate first")
    result = HopSimulator(cfg, mode).run()
    return result.trace, result.metrics, result


def run_forward_hop(mode: ActuationMode, plan: HopPlan | None,
                    obstacle: ObstacleSpec | None,
                    config: SimConfig) -> tuple:
    cfg = replace(config, scenario="forward")
    if plan is not None:
        cfg = replace(cfg, plan=plan)
    if not cfg.calibrated:
        raise CalibrationError("config is uncalibrated; run calibrate first")
    obstacle = obstacle or cfg.obstacle
    result = HopSimulator(cfg, mode, obstacle=obstacle).run()
    return result.trace, result.metrics, result


def _sweep_job(args):
    scenario, mode_value, config = args
    mode = ActuationMode(mode_value)
    if scenario == "inplace":
        _, metrics, result = run_inplace_hop(mode, None, config)
    else:
        _, metrics, result = run_forward_hop(mode, None, None, config)
    return mode_value, result


def run_sweep(config: SimConfig, modes=None, jobs: int = 1) -> dict:
    """Run all requested modes on one scenario; optionally in parallel.

    Each job owns its simulator exclusively; results are merged in mode
    order afterwards, so the output is independent of scheduling.
    """
    modes = list(modes or ActuationMode)
    args = [(config.scenario, m.value, config) for m in modes]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as ex:
            done = list(ex.map(_sweep_job, args))
    else:
        done = [_sweep_job(a) for a in args]
    return {ActuationMode(value): result for value, result in done}


# ---------------------------------------------------------------------------
# run-directory output

def write_trace(path, trace):
    lines = [f"# {TRACE_VERSION}", ",".join(TRACE_COLUMNS)]
    for rec in trace:
        lines.append(",".join(_fmt(v) for v in rec.row()))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace(path) -> list:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != f"# {TRACE_VERSION}":
        raise TraceError(f"not a {TRACE_VERSION} file: {path}")
    header = lines[1].split(",")
    if tuple(header) != TRACE_COLUMNS:
        raise TraceError("trace column mismatch")
    out = []
    for line in lines[2:]:
        parts = line.split(",")
        kwargs = {}
        for name, raw in zip(TRACE_COLUMNS, parts):
            kwargs[name] = raw if name in ("phase", "mode") else float(raw)
        out.append(TraceRecord(**kwargs))
    return out


def write_metrics(path, metrics: RunMetrics):
    lines = [f"{key} = {_fmt(value)}"
             for key, value in metrics.as_dict().items()]
    Path(path).write_text("\n".join(lines) + "\n")


def write_events(path, events):
    lines = [f"{_fmt(t)} {text}" for t, text in events]
    Path(path).write_text("\n".join(lines) + "\n")


def write_run(out_dir, result: RunResult):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trace(out / "trace.csv", result.trace)
    write_metrics(out / "metrics.txt", result.metrics)
    write_events(out / "events.log", result.events)
    return out
