"""Run configuration: defaults, INI-style file loading, overrides.

The config file is a flat INI file with sections [spring], [gear],
[drive], [leg], [vmc], [plan], [schedule], [motor], [sim].  Keys use SI
units; a "_deg" suffix marks an angle in degrees and "_mm" a length in
millimetres, both converted on load.  Pair-valued keys (gains) are two
comma-separated numbers.

The lever arms e and a are deliberately absent from the built-in file
template: they come from calibration.  A config without them (and
without a calibration file) is considered uncalibrated and refuses to
run bench or hopping commands.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .actuator import BallScrewDrive, GearCoupling, LeafSpringParams
from .dynamics import LegParams
from .fsm import ActuationMode, HopPlan, StiffnessSchedule, forward_plan
from .vmc import VmcGains


class ConfigError(ValueError):
    """Malformed or incomplete configuration."""


@dataclass(frozen=True)
class MotorModel:
    """Joint motor electrical model, for current/power proxies.

    Not catalog data: chosen so stance-phase currents land in a
    plausible range for a small gimbal-class motor with a 1:6 reducer.
    """

    torque_constant: float = 0.07    # N*m/A at the rotor
    winding_resistance: float = 0.25  # ohm
    gear_ratio: float = 6.0
    gear_efficiency: float = 0.9

    def __post_init__(self):
        if min(self.torque_constant, self.winding_resistance,
               self.gear_ratio) <= 0.0:
            raise ValueError("motor parameters must be positive")
        if not 0.0 < self.gear_efficiency <= 1.0:
            raise ValueError("gear efficiency must be in (0, 1]")

    def current(self, torque: float) -> float:
        return torque / (self.torque_constant * self.gear_ratio)

    def electrical_power(self, torque: float, speed: float) -> float:
        """Drawn power: positive mechanical work plus copper loss.

        Negative mechanical work is dissipated, not regenerated, so the
        draw never goes below the copper loss.
        """
        mech = max(torque * speed, 0.0) / self.gear_efficiency
        i = self.current(torque)
        return mech + i * i * self.winding_resistance


@dataclass(frozen=True)
class ObstacleSpec:
    height: float = 0.24
    distance: float = 1.5
    width: float = 0.10
    clearance_margin: float = 0.02


@dataclass(frozen=True)
class SimSettings:
    dt: float = 1e-4                 # physics step
    control_dt: float = 1e-3         # controller tick
    max_duration: float = 20.0
    touchdown_refractory: float = 0.010   # ignore re-contact after liftoff

    def __post_init__(self):
        if self.dt <= 0 or self.control_dt <= 0:
            raise ValueError("time steps must be positive")
        ratio = self.control_dt / self.dt
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("control_dt must be a multiple of dt")


@dataclass(frozen=True)
class SimConfig:
    spring: LeafSpringParams = field(default_factory=LeafSpringParams)
    gear: GearCoupling = field(default_factory=GearCoupling)
    drive: BallScrewDrive = field(default_factory=BallScrewDrive)
    leg: LegParams = field(default_factory=LegParams)
    plan: HopPlan = field(default_factory=HopPlan)
    schedule: StiffnessSchedule = field(default_factory=StiffnessSchedule)
    motor: MotorModel = field(default_factory=MotorModel)
    sim: SimSettings = field(default_factory=SimSettings)
    obstacle: ObstacleSpec = field(default_factory=ObstacleSpec)
    scenario: str = "inplace"        # "inplace" locks the base x
    calibrated: bool = True

    @property
    def inplace(self) -> bool:
        return self.scenario == "inplace"


def default_config(scenario: str = "inplace") -> SimConfig:
    if scenario == "inplace":
        return SimConfig(scenario="inplace")
    if scenario == "forward":
        from .actuator import slider_for_stiffness
        spring = LeafSpringParams()
        # the forward rig parks the high-stiffness stop further out so
        # the zero-deflection stiffness reaches 65 N*m/rad
        x_hs = slider_for_stiffness(spring, 0.0, 65.0)
        schedule = replace(StiffnessSchedule(), x_hs=x_hs)
        return SimConfig(scenario="forward", plan=forward_plan(),
                         schedule=schedule)
    raise ConfigError(f"unknown scenario {scenario!r}")


# ---------------------------------------------------------------------------
# file loading

def _convert(key: str, raw: str):
    raw = raw.strip()
    if "," in raw:
        return tuple(_convert(key, part) for part in raw.split(","))
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{key} = {raw!r} is not a number") from None
    if key.endswith("_deg"):
        return math.radians(value)
    if key.endswith("_mm"):
        return value / 1000.0
    return value


def _base_key(key: str) -> str:
    for suffix in ("_deg", "_mm"):
        if key.endswith(suffix):
            return key[: -len(suffix)]
    return key


def _section(parser, name) -> dict:
    if not parser.has_section(name):
        return {}
    out = {}
    for key, raw in parser.items(name):
        base = _base_key(key)
        if base in out:
            raise ConfigError(f"duplicate key {base!r} in [{name}]")
        out[base] = _convert(key, raw)
    return out


def _pop_float(sec: dict, key: str, default):
    value = sec.pop(key, default)
    return value


def _require_empty(sec: dict, name: str):
    if sec:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(sec)}")


def _build_gains(sec: dict, prefix: str, default: VmcGains) -> VmcGains:
    kp = sec.pop(f"kp_{prefix}", default.kp)
    kd = sec.pop(f"kd_{prefix}", default.kd)
    if not (isinstance(kp, tuple) and len(kp) == 2):
        raise ConfigError(f"kp_{prefix} must be two comma-separated values")
    if not (isinstance(kd, tuple) and len(kd) == 2):
        raise ConfigError(f"kd_{prefix} must be two comma-separated values")
    return VmcGains(kp=kp, kd=kd)


def load_config(path, overrides=None, scenario: str = "inplace") -> SimConfig:
    """Load a config file over the scenario defaults.

    overrides is an iterable of "section.key=value" strings applied on
    top of the file (command line beats file beats defaults).
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    parser.read(path)

    seen = set()
    for item in overrides or ():
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} is not section.key=value")
        target, value = item.split("=", 1)
        sec_name, key = target.split(".", 1)
        if (sec_name, _base_key(key)) in seen:
            raise ConfigError(f"conflicting overrides for {target}")
        seen.add((sec_name, _base_key(key)))
        if not parser.has_section(sec_name):
            parser.add_section(sec_name)
        parser.set(sec_name, key, value)

    base = default_config(scenario)

    spring_sec = _section(parser, "spring")
    calibrated = "e" in spring_sec and "a" in spring_sec
    spring_kwargs = {}
    for key, fld in (("youngs_modulus", "youngs_modulus"),
                     ("area_moment", "area_moment"),
                     ("length", "spring_length"),
                     ("e", "lever_e"), ("a", "lever_a"),
                     ("width", "width"), ("thickness", "thickness")):
        if key in spring_sec:
            spring_kwargs[fld] = spring_sec.pop(key)
    if "n_pieces" in spring_sec:
        spring_kwargs["n_pieces"] = int(spring_sec.pop("n_pieces"))
    _require_empty(spring_sec, "spring")
    spring = replace(base.spring, **spring_kwargs)

    gear_sec = _section(parser, "gear")
    gear = GearCoupling(
        ratio_i=gear_sec.pop("ratio", base.gear.ratio_i),
        theta0=gear_sec.pop("theta0", base.gear.theta0),
        theta_max=gear_sec.pop("theta_max", base.gear.theta_max))
    _require_empty(gear_sec, "gear")

    drive_sec = _section(parser, "drive")
    drive = BallScrewDrive(
        lead_p=drive_sec.pop("lead", base.drive.lead_p),
        motor_speed_n=drive_sec.pop("rpm", base.drive.motor_speed_n),
        efficiency_eta=drive_sec.pop("efficiency", base.drive.efficiency_eta),
        motor_torque_ts=drive_sec.pop("motor_torque",
                                      base.drive.motor_torque_ts),
        screw_efficiency=drive_sec.pop("screw_efficiency",
                                       base.drive.screw_efficiency))
    _require_empty(drive_sec, "drive")

    leg_sec = _section(parser, "leg")
    leg_kwargs = {}
    for key in ("thigh_length", "shank_length", "total_mass", "base_mass",
                "thigh_mass", "shank_mass", "foot_mass", "thigh_inertia",
                "shank_inertia", "gravity", "hip_torque_limit",
                "knee_torque_limit", "hip_torque_nominal",
                "knee_torque_nominal", "vllsa_mass", "stiffness_motor_mass"):
        if key in leg_sec:
            leg_kwargs[key] = leg_sec.pop(key)
    _require_empty(leg_sec, "leg")
    leg = replace(base.leg, **leg_kwargs)

    vmc_sec = _section(parser, "vmc")
    extend_gains = _build_gains(vmc_sec, "extend", base.plan.extend_gains)
    flight_gains = _build_gains(vmc_sec, "flight", base.plan.flight_gains)
    landing_gains = _build_gains(vmc_sec, "landing", base.plan.landing_gains)
    _require_empty(vmc_sec, "vmc")

    plan_sec = _section(parser, "plan")
    obstacle = ObstacleSpec(
        height=plan_sec.pop("obstacle_height", base.obstacle.height),
        distance=plan_sec.pop("obstacle_distance", base.obstacle.distance),
        width=plan_sec.pop("obstacle_width", base.obstacle.width),
        clearance_margin=plan_sec.pop("obstacle_margin",
                                      base.obstacle.clearance_margin))
    plan_kwargs = {}
    for key in ("h_e", "h_c", "h_r", "d_e", "d_a", "d_r", "d_0", "h_0",
                "reextend_z"):
        if key in plan_sec:
            plan_kwargs[key] = plan_sec.pop(key)
    for key in ("n_hops", "accel_hops"):
        if key in plan_sec:
            plan_kwargs[key] = int(plan_sec.pop(key))
    _require_empty(plan_sec, "plan")
    plan = replace(base.plan, extend_gains=extend_gains,
                   flight_gains=flight_gains, landing_gains=landing_gains,
                   **plan_kwargs)

    sched_sec = _section(parser, "schedule")
    sched_kwargs = {}
    for key, fld in (("x_ls", "x_ls"), ("x_hs", "x_hs"),
                     ("t_ls_to_hs", "t_ls_to_hs_small"),
                     ("t_hs_to_ls", "t_hs_to_ls_small"),
                     ("t_ls_to_hs_large", "t_ls_to_hs_large"),
                     ("t_hs_to_ls_large", "t_hs_to_ls_large"),
                     ("q_band", "q_band")):
        if key in sched_sec:
            sched_kwargs[fld] = sched_sec.pop(key)
    _require_empty(sched_sec, "schedule")
    schedule = replace(base.schedule, **sched_kwargs)

    motor_sec = _section(parser, "motor")
    motor = MotorModel(
        torque_constant=motor_sec.pop("kt", base.motor.torque_constant),
        winding_resistance=motor_sec.pop("resistance",
                                         base.motor.winding_resistance),
        gear_ratio=motor_sec.pop("gear_ratio", base.motor.gear_ratio),
        gear_efficiency=motor_sec.pop("gear_efficiency",
                                      base.motor.gear_efficiency))
    _require_empty(motor_sec, "motor")

    sim_sec = _section(parser, "sim")
    sim = SimSettings(
        dt=sim_sec.pop("dt", base.sim.dt),
        control_dt=sim_sec.pop("control_dt", base.sim.control_dt),
        max_duration=sim_sec.pop("max_duration", base.sim.max_duration),
        touchdown_refractory=sim_sec.pop("touchdown_refractory",
                                         base.sim.touchdown_refractory))
    _require_empty(sim_sec, "sim")

    return SimConfig(spring=spring, gear=gear, drive=drive, leg=leg,
                     plan=plan, schedule=schedule, motor=motor, sim=sim,
                     obstacle=obstacle, scenario=scenario,
                     calibrated=calibrated)


def apply_calibration(config: SimConfig, lever_e: float, lever_a: float,
                      eta_tau_s: float | None = None) -> SimConfig:
    spring = replace(config.spring, lever_e=lever_e, lever_a=lever_a)
    drive = config.drive
    if eta_tau_s is not None:
        drive = replace(drive,
                        motor_torque_ts=eta_tau_s / drive.efficiency_eta)
    return replace(config, spring=spring, drive=drive, calibrated=True)


CONFIG_TEMPLATE = """\
# vsleg run configuration (SI units; _deg and _mm suffixes converted)
[spring]
youngs_modulus = 196e9
length_mm = 150
width_mm = 18
thickness_mm = 2
n_pieces = 2
# lever arms e_mm / a_mm come from `vsleg calibrate`

[gear]
ratio = 1.87
theta0_deg = 50

[drive]
lead_mm = 2
rpm = 2000

[leg]
thigh_length_mm = 350
shank_length_mm = 350
total_mass = 3.82

[vmc]
kp_extend = 100, 2000
kd_extend = 10, 20
kp_flight = 100, 550
kd_flight = 10, 20
kp_landing = 100, 200
kd_landing = 10, 10

[plan]
h_e_mm = 500
h_c_mm = 255
h_r_mm = 270
n_hops = 1

[schedule]
x_ls_mm = 35
x_hs_mm = 70
t_ls_to_hs = 0.20
t_hs_to_ls = 0.28
t_ls_to_hs_large = 0.29
t_hs_to_ls_large = 0.35

[motor]
kt = 0.07
resistance = 0.25
gear_ratio = 6

[sim]
dt = 1e-4
control_dt = 1e-3
"""


def write_template(path):
    Path(path).write_text(CONFIG_TEMPLATE)


MODE_NAMES = {m.value: m for m in ActuationMode}
