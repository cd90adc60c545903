"""Planar rigid-body dynamics of the two-link hopping leg.

Generalized coordinates: qpos = [x_B, z_B, th_H, th_K]
  x_B, z_B  base (hip) position in the world frame, z up, ground at 0
  th_H      hip angle, absolute from straight down, positive swings the
            foot toward +x
  th_K      knee angle as read at the gear-side encoder, flexion
            positive.  The interior thigh/shank angle is
            beta = KNEE_INTERIOR_OFFSET - th_K, so th_K = 50 deg is the
            most extended configuration and 110 deg the deepest crouch.

The leg frame variables used by the controller are r = [d, h] with
  d = x_B - foot_x   (positive when the hip leads the foot)
  h = z_B - foot_z   (leg length projected on the vertical)

Bodies: point-mass base, thigh rod (leaf-spring assembly lumped at its
midpoint), shank rod, and a foot point mass.  The mass matrix and bias
are assembled from per-body center-of-mass Jacobians, which keeps every
term analytic.

Contact is a rigid unilateral point at the foot with no slip (both foot
coordinates constrained in stance).  The in-place rig adds a linear-guide
constraint that locks x_B in every phase.
"""

from __future__ import annotations

import math
import enum
from dataclasses import dataclass

import numpy as np

GRAVITY = 9.81

# Interior knee angle at th_K = 0; chosen so the encoder range
# [50, 110] deg spans leg lengths of roughly 0.24..0.54 m.
KNEE_INTERIOR_OFFSET = math.radians(150.0)

TH_K_MIN = math.radians(50.0)
TH_K_MAX = math.radians(110.0)

# Soft joint stops just outside the mechanical knee range.
STOP_MARGIN = math.radians(2.0)
STOP_STIFFNESS = 400.0     # N*m/rad
STOP_DAMPING = 4.0         # N*m*s/rad


class SimulationFault(RuntimeError):
    """Integration produced a non-finite or singular state."""


class SingularConfigurationError(SimulationFault):
    """Constrained solve hit a rank-deficient (straight-leg) Jacobian."""


class Phase(enum.Enum):
    STANCE = "stance"
    FLIGHT = "flight"


class Event(enum.Enum):
    TOUCHDOWN = "touchdown"
    LIFTOFF = "liftoff"
    APEX = "apex"
    HEIGHT_CROSSING = "height_crossing"


@dataclass(frozen=True)
class LegParams:
    thigh_length: float = 0.35
    shank_length: float = 0.35
    total_mass: float = 3.82
    vllsa_mass: float = 0.45
    stiffness_motor_mass: float = 0.128
    base_mass: float = 3.07
    thigh_mass: float = 0.45        # includes the lumped actuator mass
    shank_mass: float = 0.25
    foot_mass: float = 0.05
    thigh_inertia: float = 0.45 * 0.35**2 / 12.0
    shank_inertia: float = 0.25 * 0.35**2 / 12.0
    gravity: float = GRAVITY
    # peak (short-burst) and nominal (continuous) motor ratings; the
    # controller may use peak torque only during the explosive push-off
    hip_torque_limit: float = 35.0
    knee_torque_limit: float = 35.0
    hip_torque_nominal: float = 20.0
    knee_torque_nominal: float = 20.0

    def __post_init__(self):
        if min(self.thigh_length, self.shank_length, self.total_mass) <= 0:
            raise ValueError("lengths and masses must be positive")
        parts = (self.base_mass + self.thigh_mass + self.shank_mass
                 + self.foot_mass)
        if abs(parts - self.total_mass) > 1e-6 * self.total_mass:
            raise ValueError(
                f"component masses sum to {parts}, expected {self.total_mass}")
        for lim in (self.hip_torque_limit, self.knee_torque_limit):
            if not 0.0 <= lim <= 35.0:
                raise ValueError("torque limits must lie in [0, 35] N*m")
        if not (0.0 <= self.hip_torque_nominal <= self.hip_torque_limit
                and 0.0 <= self.knee_torque_nominal
                <= self.knee_torque_limit):
            raise ValueError("nominal torque must not exceed the peak limit")


@dataclass
class LegState:
    qpos: np.ndarray                 # (4,)
    qvel: np.ndarray                 # (4,)
    phase: Phase = Phase.FLIGHT

    def copy(self) -> "LegState":
        return LegState(self.qpos.copy(), self.qvel.copy(), self.phase)


@dataclass(frozen=True)
class ContactInfo:
    in_contact: bool
    force: np.ndarray                # (2,) world x/z force on the foot
    contact_point: np.ndarray        # (2,)

    @staticmethod
    def none() -> "ContactInfo":
        return ContactInfo(False, np.zeros(2), np.zeros(2))


# ---------------------------------------------------------------------------
# kinematics

def interior_knee_angle(th_k: float) -> float:
    return KNEE_INTERIOR_OFFSET - th_k


def _angles(qpos):
    th_h = qpos[2]
    # shank absolute angle: thigh angle plus (pi - interior angle)
    phi_s = th_h + math.pi - KNEE_INTERIOR_OFFSET + qpos[3]
    return th_h, phi_s


def foot_position(params: LegParams, qpos) -> np.ndarray:
    th_h, phi_s = _angles(qpos)
    lt, ls = params.thigh_length, params.shank_length
    x = qpos[0] + lt * math.sin(th_h) + ls * math.sin(phi_s)
    z = qpos[1] - lt * math.cos(th_h) - ls * math.cos(phi_s)
    return np.array([x, z])


def knee_position(params: LegParams, qpos) -> np.ndarray:
    th_h = qpos[2]
    return np.array([qpos[0] + params.thigh_length * math.sin(th_h),
                     qpos[1] - params.thigh_length * math.cos(th_h)])


def contact_jacobian(params: LegParams, qpos) -> np.ndarray:
    """J_c (2x4): foot world velocity = J_c @ qvel."""
    th_h, phi_s = _angles(qpos)
    lt, ls = params.thigh_length, params.shank_length
    ch, sh = math.cos(th_h), math.sin(th_h)
    cs, ss = math.cos(phi_s), math.sin(phi_s)
    return np.array([
        [1.0, 0.0, lt * ch + ls * cs, ls * cs],
        [0.0, 1.0, lt * sh + ls * ss, ls * ss],
    ])


def contact_jacobian_dot(params: LegParams, qpos, qvel) -> np.ndarray:
    th_h, phi_s = _angles(qpos)
    lt, ls = params.thigh_length, params.shank_length
    dth = qvel[2]
    dphi = qvel[2] + qvel[3]
    ch, sh = math.cos(th_h), math.sin(th_h)
    cs, ss = math.cos(phi_s), math.sin(phi_s)
    a = -lt * sh * dth - ls * ss * dphi
    b = lt * ch * dth + ls * cs * dphi
    return np.array([
        [0.0, 0.0, a, -ls * ss * dphi],
        [0.0, 0.0, b, ls * cs * dphi],
    ])


def virtual_jacobian(params: LegParams, qpos) -> np.ndarray:
    """J_v (2x4): d[d, h]/dt = J_v @ qvel, with r = base - foot.

    The base columns vanish, so the controller feedback depends only on
    the joint angles and their rates.
    """
    jc = contact_jacobian(params, qpos)
    p = np.array([[1.0, 0.0, 0.0, 0.0],
                  [0.0, 1.0, 0.0, 0.0]])
    return p - jc


@dataclass(frozen=True)
class FootKinematics:
    foot: np.ndarray        # world position
    foot_vel: np.ndarray
    r: np.ndarray           # [d, h]
    r_dot: np.ndarray


def forward_kinematics(params: LegParams, state: LegState) -> FootKinematics:
    foot = foot_position(params, state.qpos)
    jc = contact_jacobian(params, state.qpos)
    foot_vel = jc @ state.qvel
    r = state.qpos[:2] - foot
    jv = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]) - jc
    return FootKinematics(foot=foot, foot_vel=foot_vel, r=r,
                          r_dot=jv @ state.qvel)


def leg_extension(params: LegParams, qpos) -> float:
    """Kinematic leg length h = z_B - foot_z."""
    th_h, phi_s = _angles(qpos)
    return (params.thigh_length * math.cos(th_h)
            + params.shank_length * math.cos(phi_s))


def is_singular(params: LegParams, qpos, tol: float = 1e-3) -> bool:
    """True when the joint block of J_c is rank deficient (straight leg)."""
    jc = contact_jacobian(params, qpos)[:, 2:]
    return np.linalg.svd(jc, compute_uv=False)[-1] < tol


# ---------------------------------------------------------------------------
# dynamics terms

def _body_terms(params: LegParams, qpos):
    """Per-body com Jacobians; shared by mass matrix and bias assembly."""
    th_h, phi_s = _angles(qpos)
    lt, ls = params.thigh_length, params.shank_length
    ch, sh = math.cos(th_h), math.sin(th_h)
    cs, ss = math.cos(phi_s), math.sin(phi_s)
    ct, cshank = 0.5 * lt, 0.5 * ls

    j_thigh = np.array([
        [1.0, 0.0, ct * ch, 0.0],
        [0.0, 1.0, ct * sh, 0.0],
    ])
    j_shank = np.array([
        [1.0, 0.0, lt * ch + cshank * cs, cshank * cs],
        [0.0, 1.0, lt * sh + cshank * ss, cshank * ss],
    ])
    j_foot = np.array([
        [1.0, 0.0, lt * ch + ls * cs, ls * cs],
        [0.0, 1.0, lt * sh + ls * ss, ls * ss],
    ])
    return (ch, sh, cs, ss), j_thigh, j_shank, j_foot


def mass_matrix(params: LegParams, state: LegState) -> np.ndarray:
    _, j_thigh, j_shank, j_foot = _body_terms(params, state.qpos)
    m = np.zeros((4, 4))
    m[0, 0] = m[1, 1] = params.base_mass
    m += params.thigh_mass * j_thigh.T @ j_thigh
    m += params.shank_mass * j_shank.T @ j_shank
    m += params.foot_mass * j_foot.T @ j_foot
    # rod inertias: omega_thigh = dth_H, omega_shank = dth_H + dth_K
    m[2, 2] += params.thigh_inertia + params.shank_inertia
    m[2, 3] += params.shank_inertia
    m[3, 2] += params.shank_inertia
    m[3, 3] += params.shank_inertia
    return m


def bias_terms(params: LegParams, state: LegState) -> np.ndarray:
    """H(q, qd): Coriolis/centrifugal plus generalized gravity."""
    qpos, qvel = state.qpos, state.qvel
    (ch, sh, cs, ss), j_thigh, j_shank, j_foot = _body_terms(params, qpos)
    lt, ls = params.thigh_length, params.shank_length
    dth = qvel[2]
    dphi = qvel[2] + qvel[3]

    # Jdot columns: d/dt (c*cos a, c*sin a) = (-c*sin a, c*cos a) * adot
    ct, cshank = 0.5 * lt, 0.5 * ls
    jd_thigh = np.array([
        [0.0, 0.0, -ct * sh * dth, 0.0],
        [0.0, 0.0, ct * ch * dth, 0.0],
    ])
    a1 = -lt * sh * dth - cshank * ss * dphi
    a2 = lt * ch * dth + cshank * cs * dphi
    jd_shank = np.array([
        [0.0, 0.0, a1, -cshank * ss * dphi],
        [0.0, 0.0, a2, cshank * cs * dphi],
    ])
    b1 = -lt * sh * dth - ls * ss * dphi
    b2 = lt * ch * dth + ls * cs * dphi
    jd_foot = np.array([
        [0.0, 0.0, b1, -ls * ss * dphi],
        [0.0, 0.0, b2, ls * cs * dphi],
    ])

    h = (params.thigh_mass * j_thigh.T @ (jd_thigh @ qvel)
         + params.shank_mass * j_shank.T @ (jd_shank @ qvel)
         + params.foot_mass * j_foot.T @ (jd_foot @ qvel))
    # gravity: dV/dq with V = sum(m_i * g * z_i); z-row of each Jacobian
    g = params.gravity
    h += g * (params.thigh_mass * j_thigh[1]
              + params.shank_mass * j_shank[1]
              + params.foot_mass * j_foot[1])
    h[1] += g * params.base_mass
    return h


def joint_stop_torque(qpos, qvel) -> float:
    """Soft stop slightly outside the knee range; dissipative part damps."""
    th_k, dth_k = qpos[3], qvel[3]
    lo, hi = TH_K_MIN - STOP_MARGIN, TH_K_MAX + STOP_MARGIN
    if th_k < lo:
        return -STOP_STIFFNESS * (th_k - lo) - STOP_DAMPING * dth_k
    if th_k > hi:
        return -STOP_STIFFNESS * (th_k - hi) - STOP_DAMPING * dth_k
    return 0.0


def generalized_forces(joint_torque, spring_torque_knee, stop_torque=0.0):
    """Stack acting torques onto the generalized coordinates."""
    q = np.zeros(4)
    q[2] = joint_torque[0]
    q[3] = joint_torque[1] + spring_torque_knee + stop_torque
    return q


def _constraint_rows(params: LegParams, qpos, qvel, contact: bool,
                     inplace: bool):
    rows, drows = [], []
    if inplace:
        rows.append(np.array([1.0, 0.0, 0.0, 0.0]))
        drows.append(np.zeros(4))
    if contact:
        jc = contact_jacobian(params, qpos)
        jcd = contact_jacobian_dot(params, qpos, qvel)
        rows.extend(jc)
        drows.extend(jcd)
    if not rows:
        return None, None
    return np.array(rows), np.array(drows)


def _solve_constrained(m, h, q_ext, jac, jac_dot, qvel):
    n = 4
    k = jac.shape[0]
    kkt = np.zeros((n + k, n + k))
    kkt[:n, :n] = m
    kkt[:n, n:] = -jac.T
    kkt[n:, :n] = jac
    rhs = np.concatenate([q_ext - h, -jac_dot @ qvel])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularConfigurationError(
            "constrained solve is singular (straight leg?)") from exc
    return sol[:n], sol[n:]


def stance_dynamics(params: LegParams, state: LegState, joint_torque,
                    spring_torque_knee: float, inplace: bool = False):
    """Constrained accelerations and contact force in stance.

    Solves M qdd + H = Q + J^T F with J qdd + Jdot qd = 0 for the active
    constraint set (foot pinned, plus the guide row on the in-place rig).
    Returns (qdd, ContactInfo); a negative vertical force signals that
    liftoff should be triggered by the caller.
    """
    m = mass_matrix(params, state)
    h = bias_terms(params, state)
    q_ext = generalized_forces(joint_torque, spring_torque_knee,
                               joint_stop_torque(state.qpos, state.qvel))
    jac, jac_dot = _constraint_rows(params, state.qpos, state.qvel,
                                    contact=True, inplace=inplace)
    qdd, lam = _solve_constrained(m, h, q_ext, jac, jac_dot, state.qvel)
    f_c = lam[-2:]   # foot rows are always last
    info = ContactInfo(True, f_c, foot_position(params, state.qpos))
    return qdd, info


def flight_dynamics(params: LegParams, state: LegState, joint_torque,
                    spring_torque_knee: float, inplace: bool = False):
    """Unconstrained (or guide-constrained) accelerations with zero
    contact force."""
    m = mass_matrix(params, state)
    h = bias_terms(params, state)
    q_ext = generalized_forces(joint_torque, spring_torque_knee,
                               joint_stop_torque(state.qpos, state.qvel))
    jac, jac_dot = _constraint_rows(params, state.qpos, state.qvel,
                                    contact=False, inplace=inplace)
    if jac is None:
        try:
            return np.linalg.solve(m, q_ext - h)
        except np.linalg.LinAlgError as exc:
            raise SingularConfigurationError("mass matrix singular") from exc
    qdd, _ = _solve_constrained(m, h, q_ext, jac, jac_dot, state.qvel)
    return qdd


def touchdown_projection(params: LegParams, state: LegState,
                         inplace: bool = False):
    """Inelastic impact: project velocity onto the contact constraint.

    Returns (qvel_plus, kinetic_energy_loss).  A state whose constraint
    velocity is already zero is returned unchanged (no spurious impulse).
    """
    jac, _ = _constraint_rows(params, state.qpos, state.qvel,
                              contact=True, inplace=inplace)
    m = mass_matrix(params, state)
    v = state.qvel
    jv = jac @ v
    minv_jt = np.linalg.solve(m, jac.T)
    try:
        impulse = np.linalg.solve(jac @ minv_jt, jv)
    except np.linalg.LinAlgError as exc:
        raise SingularConfigurationError(
            "impact projection singular") from exc
    v_plus = v - minv_jt @ impulse
    loss = 0.5 * (v @ m @ v - v_plus @ m @ v_plus)
    return v_plus, loss


# ---------------------------------------------------------------------------
# integration and events

def step(params: LegParams, state: LegState, joint_torque,
         spring_torque_knee: float, dt: float, inplace: bool = False):
    """Semi-implicit Euler step at fixed dt.

    Accelerations are evaluated at the current state, velocities update
    first and positions follow with the new velocity.  Returns
    (next_state, ContactInfo) where the contact force is the one acting
    over this step.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if state.phase is Phase.STANCE:
        qdd, info = stance_dynamics(params, state, joint_torque,
                                    spring_torque_knee, inplace)
    else:
        qdd = flight_dynamics(params, state, joint_torque,
                              spring_torque_knee, inplace)
        info = ContactInfo.none()
    qvel = state.qvel + dt * qdd
    qpos = state.qpos + dt * qvel
    if not (np.all(np.isfinite(qpos)) and np.all(np.isfinite(qvel))):
        raise SimulationFault(
            f"non-finite state after step: qpos={qpos}, qvel={qvel}")
    return LegState(qpos, qvel, state.phase), info


def contact_force(params: LegParams, state: LegState, joint_torque,
                  spring_torque_knee: float, inplace: bool = False):
    """Vertical contact force the stance solve would produce right now."""
    _, info = stance_dynamics(params, state, joint_torque,
                              spring_torque_knee, inplace)
    return info.force[1]


def detect_events(params: LegParams, prev: LegState, new: LegState,
                  prev_contact_fz: float = 0.0, new_contact_fz: float = 0.0,
                  height_threshold: float | None = None) -> set:
    """Event set for the transition prev -> new over one step."""
    events = set()
    if prev.phase is Phase.FLIGHT:
        if (foot_position(params, prev.qpos)[1] > 0.0
                and foot_position(params, new.qpos)[1] <= 0.0):
            events.add(Event.TOUCHDOWN)
        if prev.qvel[1] > 0.0 >= new.qvel[1]:
            events.add(Event.APEX)
    else:
        if prev_contact_fz >= 0.0 > new_contact_fz:
            events.add(Event.LIFTOFF)
    if height_threshold is not None:
        h0 = leg_extension(params, prev.qpos)
        h1 = leg_extension(params, new.qpos)
        if h0 < height_threshold <= h1:
            events.add(Event.HEIGHT_CROSSING)
    return events


def locate_event(params: LegParams, state: LegState, joint_torque,
                 spring_torque_knee: float, dt: float, event_fn,
                 inplace: bool = False, rel_tol: float = 0.01):
    """Bisect the time of a sign change of event_fn within one step.

    event_fn maps a LegState to a scalar that changes sign across the
    event.  Returns (t_event, state_at_event); the time is resolved to
    rel_tol * dt.
    """
    f0 = event_fn(state)
    lo, hi = 0.0, dt

    def at(t):
        if t == 0.0:
            return state.copy()
        s, _ = step(params, state, joint_torque, spring_torque_knee, t,
                    inplace)
        return s

    f_hi = event_fn(at(hi))
    if f0 * f_hi > 0.0:
        raise ValueError("event_fn does not change sign over the step")
    while hi - lo > rel_tol * dt:
        mid = 0.5 * (lo + hi)
        if f0 * event_fn(at(mid)) > 0.0:
            lo = mid
        else:
            hi = mid
    t_event = 0.5 * (lo + hi)
    return t_event, at(t_event)


def mechanical_energy(params: LegParams, state: LegState) -> float:
    """Kinetic plus gravitational potential energy of the linkage."""
    m = mass_matrix(params, state)
    ke = 0.5 * state.qvel @ m @ state.qvel
    qpos = state.qpos
    th_h, phi_s = _angles(qpos)
    lt, ls = params.thigh_length, params.shank_length
    z_thigh = qpos[1] - 0.5 * lt * math.cos(th_h)
    z_shank = qpos[1] - lt * math.cos(th_h) - 0.5 * ls * math.cos(phi_s)
    z_foot = qpos[1] - lt * math.cos(th_h) - ls * math.cos(phi_s)
    pe = params.gravity * (params.base_mass * qpos[1]
                           + params.thigh_mass * z_thigh
                           + params.shank_mass * z_shank
                           + params.foot_mass * z_foot)
    return ke + pe


def state_from_leg_frame(params: LegParams, d: float, h: float,
                         x_b: float = 0.0, phase: Phase = Phase.STANCE,
                         qvel=None) -> LegState:
    """Build a state from leg-frame coordinates (inverse kinematics).

    Places the foot at (x_b - d, z) such that the hip sits at height h
    above the foot; in stance the foot is put on the ground.
    """
    lt, ls = params.thigh_length, params.shank_length
    rho = math.hypot(d, h)
    if rho >= lt + ls or rho <= abs(lt - ls):
        raise ValueError(f"leg frame target (d={d}, h={h}) unreachable")
    beta = math.acos((lt**2 + ls**2 - rho**2) / (2.0 * lt * ls))
    th_k = KNEE_INTERIOR_OFFSET - beta
    # hip-to-foot direction angle from straight down, then offset by the
    # thigh's share of the interior angle
    gamma = math.atan2(-d, h)
    delta = math.acos((lt**2 + rho**2 - ls**2) / (2.0 * lt * rho))
    th_h = gamma - delta
    qpos = np.array([x_b, h, th_h, th_k], dtype=float)
    state = LegState(qpos, np.zeros(4) if qvel is None else
                     np.asarray(qvel, dtype=float), phase)
    # verify round trip
    foot = foot_position(params, qpos)
    r = qpos[:2] - foot
    if not (abs(r[0] - d) < 1e-9 and abs(r[1] - h) < 1e-9):
        raise AssertionError(f"inverse kinematics mismatch: {r} vs ({d},{h})")
    return state
