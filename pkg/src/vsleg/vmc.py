"""Virtual model controller.

A virtual spring-damper is attached between the hip and the foot in the
leg frame r = [d, h].  The resulting virtual force maps to joint torques
through the Jacobian transpose, with gravity/Coriolis compensation and a
fixed contact-force estimate in stance.  The knee share of the torque is
then split between the joint motor and the parallel leaf spring.

All functions are pure; the same inputs always give the same outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class VmcGains:
    """Diagonal stiffness (N/m) and damping (N*s/m) of the virtual model."""

    kp: tuple  # (kp_d, kp_h)
    kd: tuple  # (kd_d, kd_h)

    def __post_init__(self):
        if min(self.kp) < 0.0 or min(self.kd) < 0.0:
            raise ValueError("gains must be non-negative")


@dataclass(frozen=True)
class VirtualTarget:
    """Desired leg-frame position [d, h] and rates (rates default zero)."""

    r_d: tuple
    r_dot_d: tuple = (0.0, 0.0)


@dataclass(frozen=True)
class ContactEstimate:
    """Assumed contact force used for feedforward; no force sensing."""

    f_vertical: float

    @classmethod
    def stance(cls, params) -> "ContactEstimate":
        return cls(params.total_mass * params.gravity)

    @classmethod
    def flight(cls) -> "ContactEstimate":
        return cls(0.0)

    @property
    def vector(self) -> np.ndarray:
        return np.array([0.0, self.f_vertical])


def virtual_force(gains: VmcGains, target: VirtualTarget, r, r_dot):
    """F_v = Kp (r_d - r) + Kd (rd_dot - r_dot), elementwise diagonal."""
    kp = np.asarray(gains.kp)
    kd = np.asarray(gains.kd)
    return kp * (np.asarray(target.r_d) - np.asarray(r)) \
        + kd * (np.asarray(target.r_dot_d) - np.asarray(r_dot))


@dataclass(frozen=True)
class JointTorques:
    tau: np.ndarray            # (2,) hip, knee before any clamping
    saturated: tuple           # per-joint flags after motor clamping


def joint_torques(bias, j_v, j_c, f_v, f_c_hat: ContactEstimate):
    """Joint rows of H + J_v^T F_v - J_c^T F_hat (no clamping here).

    bias is the full 4-vector of Coriolis+gravity terms; j_v and j_c are
    the 2x4 leg-frame and contact Jacobians.  Saturation is applied later
    in motor_torques, after the spring share is removed - the physical
    spring cannot be clamped.
    """
    tau_full = bias + j_v.T @ np.asarray(f_v) - j_c.T @ f_c_hat.vector
    return tau_full[2:4]


def motor_torques(tau_j, hip_limit: float, knee_limit: float,
                  tau_knee_spring: float = 0.0) -> JointTorques:
    """Clamp the virtual-model joint torques to the motor limits.

    When `tau_knee_spring` is given the knee motor compensates the spring
    preload (tau_M = tau_J - tau_spring), which pins the regulated posture
    regardless of the stiffness setting; this is used while the foot is on
    the ground.  In flight the spring is left uncompensated, so the leg
    tucks deeper when the spring is set soft.
    """
    tau_m = np.array([tau_j[0], tau_j[1] - tau_knee_spring])
    clamped = np.array([
        np.clip(tau_m[0], -hip_limit, hip_limit),
        np.clip(tau_m[1], -knee_limit, knee_limit),
    ])
    saturated = (clamped[0] != tau_m[0], clamped[1] != tau_m[1])
    return JointTorques(tau=clamped, saturated=saturated)
