"""Closed-form model of a variable-length leaf-spring knee actuator.

The elastic element is a stack of leaf springs clamped by a roller-bearing
slider.  Moving the slider (position x along the spring) changes the
effective bending length and therefore the output stiffness.  The spring
output couples to the knee joint through a gear set with ratio i, so a
small spring deflection q maps to a large knee excursion.

All angles are radians, all lengths metres.  Small-deflection beam theory
gives the torque/stiffness/force expressions below; they are mutually
consistent gradients of a single elastic potential, which the test suite
checks by finite differences.

Sign convention: q > 0 is knee flexion past the equilibrium angle; the
output torque is the spring's reaction on the output link, so tau <= 0
for q > 0 (restoring).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

# Lever arms of the crank/hinge linkage between spring tip and output
# link.  Not a catalog dimension: fitted to the two measured stiffness
# anchors (9.43 and 22.55 N*m/rad at q=12deg, x=35/70 mm), see
# harness.calibrate_lever_arms.  Frozen here so the default model is
# usable without running the fit.
CALIBRATED_LEVER_E = 0.044607495003330236
CALIBRATED_LEVER_A = 0.024858675626961493

# Product of ball-screw efficiency and stiffness-motor torque, backed out
# of the measured 23.48 W no-load power at 2000 rpm.
CALIBRATED_ETA_TAU_S = 23.48 * 30.0 / (math.pi * 2000.0)

# cos(2q) changes sign at 45 deg; beyond that the model leaves its
# validity region, so reject.  The hardware band is narrower (0..32 deg).
Q_MODEL_LIMIT = math.pi / 4.0
Q_HARDWARE_MAX = math.radians(32.0)

# Slider excursion cap: the denominator diverges as x -> L, so evaluation
# stops at 0.95 L.  The physical slider range is far inside this anyway.
SLIDER_CAP_FRACTION = 0.95


class ActuatorDomainError(ValueError):
    """Input outside the validity region of the spring model."""


class GearRangeError(ValueError):
    """Knee angle outside the mechanical range of the gear coupling."""


@dataclass(frozen=True)
class LeafSpringParams:
    """Geometry and material of the leaf-spring stack and its lever arms."""

    youngs_modulus: float = 196e9       # Pa
    area_moment: float = 2.4e-11        # m^4, whole stack
    spring_length: float = 0.15         # m
    lever_e: float = CALIBRATED_LEVER_E  # m, crank arm
    lever_a: float = CALIBRATED_LEVER_A  # m, hinge link
    n_pieces: int = 2
    width: float = 0.018                # m, single leaf
    thickness: float = 0.002            # m, single leaf

    def __post_init__(self):
        for name in ("youngs_modulus", "area_moment", "spring_length",
                     "lever_e", "lever_a", "width", "thickness"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.n_pieces < 1:
            raise ValueError("n_pieces must be >= 1")
        # Calibration can push lever_e close to L/3; anything beyond that
        # is no longer a short crank and the small-deflection model breaks.
        if self.lever_e >= self.spring_length / 3.0:
            raise ValueError("lever_e too long relative to spring_length")

    @classmethod
    def from_stack(cls, n_pieces, width, thickness, **kwargs):
        """Build params with the stack area moment I = n*w*t^3/12."""
        area_moment = n_pieces * width * thickness**3 / 12.0
        return cls(area_moment=area_moment, n_pieces=n_pieces,
                   width=width, thickness=thickness, **kwargs)

    @property
    def x_max(self) -> float:
        return SLIDER_CAP_FRACTION * self.spring_length

    @property
    def gain(self) -> float:
        """Stiffness scale 3*E*I*e^2 / L^3 (N*m/rad)."""
        return (3.0 * self.youngs_modulus * self.area_moment
                * self.lever_e**2 / self.spring_length**3)

    def with_pieces(self, n_pieces: int) -> "LeafSpringParams":
        """Same leaf geometry with a different stack count."""
        area_moment = n_pieces * self.width * self.thickness**3 / 12.0
        return replace(self, n_pieces=n_pieces, area_moment=area_moment)


@dataclass(frozen=True)
class ActuatorState:
    """Spring deflection angle q (rad) and slider position x (m)."""

    deflection_q: float
    slider_x: float

    def __post_init__(self):
        if abs(self.deflection_q) > Q_MODEL_LIMIT + 1e-12:
            raise ActuatorDomainError(
                f"deflection {self.deflection_q!r} rad outside +/-45 deg")
        if self.slider_x < 0.0:
            raise ActuatorDomainError("slider position must be >= 0")


@dataclass(frozen=True)
class GearCoupling:
    """Linear gear map between spring deflection and knee angle."""

    ratio_i: float = 1.87
    theta0: float = math.radians(50.0)   # knee angle at q = 0
    theta_max: float = math.radians(110.0)

    def __post_init__(self):
        if self.ratio_i <= 0.0:
            raise ValueError("gear ratio must be positive")


@dataclass(frozen=True)
class BallScrewDrive:
    """Ball-screw drive of the stiffness slider."""

    lead_p: float = 0.002                     # m per revolution
    motor_speed_n: float = 2000.0             # rpm
    efficiency_eta: float = 0.9
    motor_torque_ts: float = CALIBRATED_ETA_TAU_S / 0.9   # N*m
    # small-lead screws are self-locking and convert axial load to
    # electrical power poorly
    screw_efficiency: float = 0.16

    def __post_init__(self):
        if self.lead_p <= 0.0:
            raise ValueError("screw lead must be positive")
        if not 0.0 < self.efficiency_eta <= 1.0:
            raise ValueError("efficiency must be in (0, 1]")
        if not 0.0 < self.screw_efficiency <= 1.0:
            raise ValueError("screw efficiency must be in (0, 1]")
        if self.motor_speed_n < 0.0:
            raise ValueError("motor speed must be >= 0")

    @property
    def slider_speed(self) -> float:
        """Slider translation speed n*p/60 (m/s)."""
        return self.motor_speed_n * self.lead_p / 60.0

    @classmethod
    def from_power_datum(cls, power_w, rpm, lead_p=0.002, efficiency_eta=0.9):
        """Back out eta*tau_s from a measured no-load power at given rpm."""
        eta_tau_s = power_w * 30.0 / (math.pi * rpm)
        return cls(lead_p=lead_p, motor_speed_n=rpm,
                   efficiency_eta=efficiency_eta,
                   motor_torque_ts=eta_tau_s / efficiency_eta)


# ---------------------------------------------------------------------------
# scalar kernels (used directly by the simulator hot loop)

def _check_domain(params: LeafSpringParams, q: float, x: float):
    if abs(q) > Q_MODEL_LIMIT + 1e-12:
        raise ActuatorDomainError(f"deflection {q!r} rad outside +/-45 deg")
    if x < 0.0 or x >= params.x_max:
        raise ActuatorDomainError(
            f"slider position {x!r} outside [0, {params.x_max!r})")


def _denominator(params: LeafSpringParams, x: float) -> float:
    L = params.spring_length
    rel_a = params.lever_a / L
    u = rel_a + 1.0 - x / L
    return u * u * u - rel_a**3


def spring_torque(params: LeafSpringParams, q: float, x: float) -> float:
    """Output torque (N*m) at the spring side of the gear set."""
    _check_domain(params, q, x)
    return -params.gain * math.sin(q) * math.cos(q) / _denominator(params, x)


def spring_stiffness(params: LeafSpringParams, q: float, x: float) -> float:
    """Rotational output stiffness (N*m/rad), -d(tau)/dq."""
    _check_domain(params, q, x)
    return params.gain * math.cos(2.0 * q) / _denominator(params, x)


def spring_holding_force(params: LeafSpringParams, q: float, x: float) -> float:
    """Axial force (N) the slider must resist to hold position; <= 0."""
    _check_domain(params, q, x)
    L = params.spring_length
    u = params.lever_a / L + 1.0 - x / L
    s = math.sin(q)
    return (-1.5 * params.gain / L) * u * u * s * s / _denominator(params, x) ** 2


def spring_energy(params: LeafSpringParams, q: float, x: float) -> float:
    """Elastic potential (J); tau = -dU/dq and F = -dU/dx."""
    _check_domain(params, q, x)
    s = math.sin(q)
    return 0.5 * params.gain * s * s / _denominator(params, x)


# ---------------------------------------------------------------------------
# spec-level operations on ActuatorState

def output_torque(params: LeafSpringParams, state: ActuatorState) -> float:
    return spring_torque(params, state.deflection_q, state.slider_x)


def output_stiffness(params: LeafSpringParams, state: ActuatorState) -> float:
    return spring_stiffness(params, state.deflection_q, state.slider_x)


def holding_force(params: LeafSpringParams, state: ActuatorState) -> float:
    return spring_holding_force(params, state.deflection_q, state.slider_x)


def elastic_energy(params: LeafSpringParams, state: ActuatorState) -> float:
    return spring_energy(params, state.deflection_q, state.slider_x)


def stiffness_bounds(params: LeafSpringParams, q: float, x_max: float):
    """(K_min, K_max) over slider travel [0, x_max].

    K_min sits at x = 0 (longest effective spring); K_max at x = x_max and
    grows without bound as x_max approaches the spring length.
    """
    if not 0.0 <= x_max < params.spring_length:
        raise ActuatorDomainError("x_max must lie in [0, spring_length)")
    k_min = spring_stiffness(params, q, 0.0)
    if x_max >= params.x_max:
        # Between the evaluation cap and L the bound is only reported at
        # the cap; the divergence beyond it is documented, not evaluated.
        x_max = math.nextafter(params.x_max, 0.0)
    k_max = spring_stiffness(params, q, x_max)
    return k_min, k_max


def slider_for_stiffness(params: LeafSpringParams, q: float,
                         stiffness: float) -> float:
    """Slider position x achieving the requested output stiffness at q.

    Inverts K = gain*cos(2q)/D(x) in closed form; D is monotone in x so
    the solution is unique when it exists within the travel range.
    """
    numer = params.gain * math.cos(2.0 * q)
    if stiffness <= 0.0 or numer <= 0.0:
        raise ActuatorDomainError("stiffness target must be positive and "
                                  "q within +/-45 deg")
    L = params.spring_length
    rel_a = params.lever_a / L
    u3 = numer / stiffness + rel_a**3
    x = L * (rel_a + 1.0 - u3 ** (1.0 / 3.0))
    if x < 0.0 or x >= params.x_max:
        raise ActuatorDomainError(
            f"stiffness {stiffness!r} not reachable within slider travel")
    return x


def modulation_speed(params: LeafSpringParams, state: ActuatorState,
                     drive: BallScrewDrive) -> float:
    """Stiffness slew rate dK/dt (N*m/(rad*s)) at constant deflection.

    Assumes q is held fixed while the slider moves, so the rate is
    (dK/dx) * xdot with xdot = n*p/60.
    """
    q, x = state.deflection_q, state.slider_x
    _check_domain(params, q, x)
    L = params.spring_length
    u = params.lever_a / L + 1.0 - x / L
    dk_dx = (3.0 * params.gain / L) * u * u * math.cos(2.0 * q) \
        / _denominator(params, x) ** 2
    return dk_dx * drive.slider_speed


def baseline_power(drive: BallScrewDrive) -> float:
    """No-load electrical power of the screw drive, pi*eta*n*tau_s/30 (W)."""
    return (math.pi * drive.efficiency_eta * drive.motor_speed_n
            * drive.motor_torque_ts / 30.0)


def holding_power(params: LeafSpringParams, state: ActuatorState,
                  drive: BallScrewDrive) -> float:
    """Extra electrical power |F|*xdot/eta_screw (W) to move the slider
    against the deflected spring; zero at q = 0."""
    return (abs(holding_force(params, state)) * drive.slider_speed
            / drive.screw_efficiency)


def total_power_bounds(params: LeafSpringParams, q_max: float, x_max: float,
                       drive: BallScrewDrive):
    """(P_low, P_high) envelope of drive power over the operating range.

    P_low is the no-load power; P_high adds the worst-case holding term at
    (q_max, x_max).  Both are finite for any x_max below the slider cap.
    """
    p_low = baseline_power(drive)
    if q_max == 0.0:
        return p_low, p_low
    f = abs(spring_holding_force(params, q_max, x_max))
    return p_low, p_low + f * drive.slider_speed / drive.screw_efficiency


def knee_angle_from_deflection(gear: GearCoupling, q: float) -> float:
    """theta = theta0 + q*i; rejects angles outside the knee range."""
    theta = gear.theta0 + q * gear.ratio_i
    if not gear.theta0 - 1e-9 <= theta <= gear.theta_max + 1e-9:
        raise GearRangeError(f"knee angle {math.degrees(theta):.2f} deg "
                             "outside mechanical range")
    return theta


def deflection_from_knee_angle(gear: GearCoupling, theta: float) -> float:
    if not gear.theta0 - 1e-9 <= theta <= gear.theta_max + 1e-9:
        raise GearRangeError(f"knee angle {math.degrees(theta):.2f} deg "
                             "outside mechanical range")
    return (theta - gear.theta0) / gear.ratio_i


def knee_torque(gear: GearCoupling, tau_spring: float) -> float:
    """Torque delivered at the knee joint, tau/i."""
    return tau_spring / gear.ratio_i


@dataclass(frozen=True)
class SpringCountResult:
    n_pieces: int
    peak_torque: float       # N*m, actuator output at the returned count
    feasible: bool           # False if even a single leaf breaks the budget


def spring_count_for_task(geometry: LeafSpringParams,
                          torque_budget: float = 8.0,
                          q_range=(0.0, math.radians(20.0)),
                          x_range=(0.035, 0.070),
                          max_pieces: int = 8) -> SpringCountResult:
    """Largest stack count whose peak output torque stays within budget.

    The budget is compared against the actuator output torque over the
    given deflection and slider ranges (the output must stay under the
    joint motor's nominal torque so the motor is never forced to oppose
    the spring).  Peak torque is monotone in both q (below 45 deg) and x,
    so only the range corners matter; it also scales linearly with the
    stack count through the area moment.
    """
    if torque_budget <= 0.0:
        raise ValueError("torque_budget must be positive")
    q_peak = max(abs(q_range[0]), abs(q_range[1]))
    x_peak = max(x_range)
    last_ok = 0
    peak_at_ok = 0.0
    for n in range(1, max_pieces + 1):
        candidate = geometry.with_pieces(n)
        peak = abs(spring_torque(candidate, q_peak, x_peak))
        if peak <= torque_budget:
            last_ok, peak_at_ok = n, peak
        else:
            break
    if last_ok == 0:
        single = abs(spring_torque(geometry.with_pieces(1), q_peak, x_peak))
        return SpringCountResult(n_pieces=1, peak_torque=single, feasible=False)
    return SpringCountResult(n_pieces=last_ok, peak_torque=peak_at_ok,
                             feasible=True)
