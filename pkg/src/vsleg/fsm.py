"""Event-triggered hopping phase machine and stiffness schedule.

Phases cycle Crouch -> Extend -> FlightRetract -> FlightExtend ->
Landing -> Stance -> Extend ...  Transitions are driven by the hybrid
dynamics events (liftoff, apex, touchdown) plus kinematic triggers on
the leg extension h.  In variable-stiffness mode the slider runs to low
stiffness when the leg starts retracting and back to high stiffness when
the landing extension begins, so it is parked at high stiffness at every
touchdown.

Slider motion is modeled kinematically with the measured traversal
durations (two per direction, split on a deflection band), not from the
screw speed n*p/60 - the two are inconsistent in the measured data and
the durations are the ground truth.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from . import actuator
from .actuator import BallScrewDrive, GearCoupling, LeafSpringParams
from .dynamics import Event
from .vmc import VmcGains, VirtualTarget

# Static power to keep the slider in place (screw self-holding plus
# controller idle draw), W.
HOLD_POWER = 1.20

# Hysteresis on kinematic height triggers to avoid chattering, m.
HEIGHT_HYSTERESIS = 0.002

# Ascent speed below which the stiffness slider is sent back to high
# stiffness: just before apex, giving the traversal a margin over the
# remaining descent time.
APEX_LEAD_SPEED = 0.0


class FsmFault(RuntimeError):
    """An event arrived that is illegal for the current phase."""


class ActuationMode(enum.Enum):
    DMD = "dmd"     # direct motor drive, spring disengaged
    CLS = "cls"     # constant low stiffness
    CHS = "chs"     # constant high stiffness
    VS = "vs"       # scheduled variable stiffness


class HopPhase(enum.Enum):
    CROUCH = "crouch"
    EXTEND = "extend"
    FLIGHT_RETRACT = "flight_retract"
    FLIGHT_EXTEND = "flight_extend"
    LANDING = "landing"
    STANCE = "stance"


@dataclass(frozen=True)
class HopPlan:
    """Per-phase targets and gains for a hopping run."""

    h_e: float = 0.500            # extension height target
    h_c: float = 0.255            # crouch / landing height target
    h_r: float = 0.270            # flight retraction height target
    d_e: float = 0.0
    d_a: float = 0.0              # forward lean during the lead-in hops
    d_r: float = 0.0
    d_0: float = 0.0              # stance / crouch horizontal target
    h_0: float = 0.35             # initial standing height
    reextend_z: float = 0.66      # base height that triggers re-extension
    n_hops: int = 1
    accel_hops: int = 0           # lead-in hops before the clearance hop
    extend_gains: VmcGains = field(
        default_factory=lambda: VmcGains(kp=(100.0, 2000.0), kd=(10.0, 20.0)))
    flight_gains: VmcGains = field(
        default_factory=lambda: VmcGains(kp=(100.0, 550.0), kd=(10.0, 20.0)))
    landing_gains: VmcGains = field(
        default_factory=lambda: VmcGains(kp=(100.0, 200.0), kd=(10.0, 10.0)))

    def __post_init__(self):
        if not self.h_r < self.h_e:
            raise ValueError("retraction height must be below extension height")
        if self.n_hops < 0 or self.accel_hops < 0:
            raise ValueError("hop counts must be non-negative")


def forward_plan() -> HopPlan:
    """Default plan for the forward-hopping scenario."""
    return HopPlan(h_e=0.500, h_c=0.250, h_r=0.250,
                   d_e=0.120, d_a=0.050, d_r=-0.050, d_0=0.0, h_0=0.35,
                   reextend_z=0.52, n_hops=3, accel_hops=2,
                   extend_gains=VmcGains(kp=(800.0, 800.0), kd=(5.0, 5.0)),
                   flight_gains=VmcGains(kp=(200.0, 400.0), kd=(10.0, 10.0)),
                   landing_gains=VmcGains(kp=(300.0, 300.0), kd=(10.0, 10.0)))


@dataclass(frozen=True)
class StiffnessSchedule:
    """Slider endpoints and measured traversal durations.

    Durations depend on the spring deflection at the moment the command
    is issued (more deflection, more friction): one pair for the small
    band, one for larger deflections.
    """

    x_ls: float = 0.035
    x_hs: float = 0.070
    t_ls_to_hs_small: float = 0.20
    t_hs_to_ls_small: float = 0.28
    t_ls_to_hs_large: float = 0.29
    t_hs_to_ls_large: float = 0.35
    q_band: float = math.radians(12.0)

    def __post_init__(self):
        if not 0.0 <= self.x_ls < self.x_hs:
            raise ValueError("need 0 <= x_ls < x_hs")
        for t in (self.t_ls_to_hs_small, self.t_hs_to_ls_small,
                  self.t_ls_to_hs_large, self.t_hs_to_ls_large):
            if t <= 0.0:
                raise ValueError("traversal times must be positive")

    def traversal_time(self, toward_hs: bool, q: float) -> float:
        small = abs(q) <= self.q_band
        if toward_hs:
            return self.t_ls_to_hs_small if small else self.t_ls_to_hs_large
        return self.t_hs_to_ls_small if small else self.t_hs_to_ls_large

    def rate(self, toward_hs: bool, q: float) -> float:
        return (self.x_hs - self.x_ls) / self.traversal_time(toward_hs, q)


@dataclass
class SliderProfile:
    """Constant-rate slider trajectory; holds position with no command."""

    x0: float
    target: float
    t0: float = 0.0
    rate: float = 0.0              # m/s, magnitude

    def position(self, t: float) -> float:
        if self.rate == 0.0 or self.target == self.x0:
            return self.x0
        span = abs(self.target - self.x0)
        travelled = min(self.rate * max(t - self.t0, 0.0), span)
        return self.x0 + math.copysign(travelled, self.target - self.x0)

    def moving(self, t: float) -> bool:
        return self.position(t) != self.target and t >= self.t0

    def command(self, schedule: StiffnessSchedule, target: float, t: float,
                q: float) -> "SliderProfile":
        """Retarget from the current position; a mid-traversal re-command
        restarts at the current x with the remaining time scaled by the
        remaining span (rate is preserved for the full-span duration)."""
        here = self.position(t)
        toward_hs = target > here
        return SliderProfile(x0=here, target=target, t0=t,
                             rate=schedule.rate(toward_hs, q))


@dataclass(frozen=True)
class PhaseCommand:
    phase: HopPhase
    target: VirtualTarget
    gains: VmcGains
    slider_x: float
    spring_engaged: bool


@dataclass
class HoppingFsm:
    """Deterministic event-triggered phase machine for one run."""

    mode: ActuationMode
    plan: HopPlan
    schedule: StiffnessSchedule
    settle_speed: float = 0.02       # m/s
    settle_time: float = 0.050       # s

    def __post_init__(self):
        self.phase = HopPhase.CROUCH
        self.hops_done = 0
        x0 = self._pinned_x()
        if x0 is None:
            x0 = self.schedule.x_hs    # VS starts in high stiffness
        self.slider = SliderProfile(x0=x0, target=x0)
        self.transitions: list[tuple[float, HopPhase]] = []
        self.slider_commands: list[tuple[float, float]] = []
        self._settle_since: float | None = None

    def _pinned_x(self):
        if self.mode is ActuationMode.CLS:
            return self.schedule.x_ls
        if self.mode is ActuationMode.CHS:
            return self.schedule.x_hs
        if self.mode is ActuationMode.DMD:
            return self.schedule.x_ls   # parked, spring disengaged anyway
        return None

    # -- queries ----------------------------------------------------------

    def slider_position(self, t: float) -> float:
        return self.slider.position(t)

    def spring_engaged(self) -> bool:
        return self.mode is not ActuationMode.DMD

    def height_trigger(self) -> float | None:
        """Leg-extension threshold the harness should watch right now."""
        if self.phase is HopPhase.EXTEND:
            return self.plan.h_e - HEIGHT_HYSTERESIS
        return None

    def finished(self) -> bool:
        return (self.hops_done >= self.plan.n_hops
                and self.phase is HopPhase.STANCE)

    # -- transitions ------------------------------------------------------

    def _enter(self, phase: HopPhase, t: float, q: float):
        self.phase = phase
        self.transitions.append((t, phase))
        if self.mode is ActuationMode.VS:
            if phase is HopPhase.FLIGHT_RETRACT:
                self._command_slider(self.schedule.x_ls, t, q)
            elif phase is HopPhase.FLIGHT_EXTEND:
                # normally already commanded at apex; idempotent fallback
                self._command_slider(self.schedule.x_hs, t, q)

    def _command_slider(self, target: float, t: float, q: float):
        if target != self.slider.target:
            self.slider = self.slider.command(self.schedule, target, t, q)
            self.slider_commands.append((t, target))

    def _settled(self, t: float, zdot: float) -> bool:
        if abs(zdot) < self.settle_speed:
            if self._settle_since is None:
                self._settle_since = t
            return t - self._settle_since >= self.settle_time
        self._settle_since = None
        return False

    def advance(self, t: float, events: set, h: float, z: float,
                zdot: float, q: float) -> PhaseCommand:
        """Process one controller tick: events, settle logic, commands.

        h is the kinematic leg extension, z/zdot the base height and
        vertical rate, q the current spring deflection (used to pick
        traversal times).
        """
        ph = self.phase
        if Event.TOUCHDOWN in events and ph in (
                HopPhase.CROUCH, HopPhase.EXTEND, HopPhase.STANCE):
            raise FsmFault(f"touchdown event while in {ph.value}")

        if ph is HopPhase.CROUCH:
            if self._settled(t, zdot) and self.hops_done < self.plan.n_hops:
                self._settle_since = None
                self._enter(HopPhase.EXTEND, t, q)
        elif ph is HopPhase.EXTEND:
            if Event.HEIGHT_CROSSING in events or Event.LIFTOFF in events:
                self._enter(HopPhase.FLIGHT_RETRACT, t, q)
        elif ph is HopPhase.FLIGHT_RETRACT:
            if (self.mode is ActuationMode.VS
                    and (Event.APEX in events or zdot <= APEX_LEAD_SPEED)):
                # raise stiffness just before apex so the spring is stiff
                # at touchdown; the leg stays retracted until re-extension
                self._command_slider(self.schedule.x_hs, t, q)
            if Event.TOUCHDOWN in events:
                # late retraction: land anyway
                self.hops_done += 1
                self._settle_since = None
                self._enter(HopPhase.LANDING, t, q)
            elif zdot < 0.0 and z <= self.plan.reextend_z:
                self._enter(HopPhase.FLIGHT_EXTEND, t, q)
        elif ph is HopPhase.FLIGHT_EXTEND:
            if Event.TOUCHDOWN in events:
                self.hops_done += 1
                self._settle_since = None
                self._enter(HopPhase.LANDING, t, q)
        elif ph is HopPhase.LANDING:
            # bounces (liftoff/touchdown pairs) are tolerated here; the
            # settle criterion simply keeps waiting through them
            if self._settled(t, zdot):
                self._settle_since = None
                self._enter(HopPhase.STANCE, t, q)
        elif ph is HopPhase.STANCE:
            if self.hops_done < self.plan.n_hops:
                self._enter(HopPhase.EXTEND, t, q)

        return self.command(t)

    def command(self, t: float) -> PhaseCommand:
        plan = self.plan
        if self.phase in (HopPhase.CROUCH, HopPhase.LANDING,
                          HopPhase.STANCE):
            target = VirtualTarget(r_d=(plan.d_0, plan.h_c))
            gains = plan.landing_gains
        elif self.phase is HopPhase.EXTEND:
            # lead-in hops build speed with a gentler lean than the
            # clearance hop
            if self.hops_done < plan.accel_hops:
                lean = plan.d_a
            else:
                lean = plan.d_e
            target = VirtualTarget(r_d=(lean, plan.h_e))
            gains = plan.extend_gains
        elif self.phase is HopPhase.FLIGHT_RETRACT:
            target = VirtualTarget(r_d=(plan.d_r, plan.h_r))
            gains = plan.flight_gains
        else:  # FLIGHT_EXTEND
            target = VirtualTarget(r_d=(plan.d_r, plan.h_e))
            gains = plan.flight_gains
        return PhaseCommand(phase=self.phase, target=target, gains=gains,
                            slider_x=self.slider_position(t),
                            spring_engaged=self.spring_engaged())


def stiffness_motor_power(fsm: HoppingFsm, t: float, q: float,
                          params: LeafSpringParams,
                          drive: BallScrewDrive) -> float:
    """Electrical power of the stiffness drive at time t.

    While the slider traverses, the drive draws its rated electrical
    power (measured at the rated screw speed, load included).  While
    parked the self-locking screw only needs the small static hold draw.
    A disengaged spring (direct motor drive) consumes nothing.
    """
    if not fsm.spring_engaged():
        return 0.0
    if fsm.slider.moving(t):
        return actuator.baseline_power(drive)
    return HOLD_POWER


def deflection_from_knee(gear: GearCoupling, th_k: float) -> float:
    """Spring deflection for a knee angle, without the range guard.

    The simulator may transiently push the knee slightly outside the
    nominal range; the spring model itself is valid to +/-45 deg.
    """
    return (th_k - gear.theta0) / gear.ratio_i
