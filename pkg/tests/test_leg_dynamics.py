"""Planar leg dynamics: kinematic oracles, constraint quality, energy."""
import math

import numpy as np
import pytest
from scipy.optimize import minimize

from vsleg.dynamics import (Event, LegParams, LegState, Phase,
                            contact_jacobian, detect_events, flight_dynamics,
                            foot_position, leg_extension, locate_event,
                            mass_matrix, mechanical_energy, stance_dynamics,
                            state_from_leg_frame, step, touchdown_projection)

PARAMS = LegParams()


def _stance_state(d=0.0, h=0.45, qvel=None):
    return state_from_leg_frame(PARAMS, d, h, phase=Phase.STANCE, qvel=qvel)


def test_contact_jacobian_matches_finite_differences():
    qpos = _stance_state(0.05, 0.5).qpos
    jac = contact_jacobian(PARAMS, qpos)
    eps = 1e-7
    for j in range(4):
        dq = np.zeros(4)
        dq[j] = eps
        fd = (foot_position(PARAMS, qpos + dq)
              - foot_position(PARAMS, qpos - dq)) / (2 * eps)
        assert jac[:, j] == pytest.approx(fd, abs=1e-6)


def test_inverse_kinematics_round_trip():
    for d, h in ((0.0, 0.3), (0.1, 0.5), (-0.08, 0.45)):
        st = state_from_leg_frame(PARAMS, d, h)
        r = st.qpos[:2] - foot_position(PARAMS, st.qpos)
        assert r[0] == pytest.approx(d, abs=1e-9)
        assert r[1] == pytest.approx(h, abs=1e-9)
        assert leg_extension(PARAMS, st.qpos) == pytest.approx(h, abs=1e-9)


def test_mass_matrix_symmetric_and_positive_definite():
    for d, h in ((0.0, 0.3), (0.1, 0.5)):
        m = mass_matrix(PARAMS, _stance_state(d, h))
        assert np.max(np.abs(m - m.T)) < 1e-12
        assert np.all(np.linalg.eigvalsh(m) > 0.0)


def test_stance_solve_satisfies_constraint():
    # J qdd + Jdot qd = 0 at the acceleration level, every configuration
    rng = np.random.default_rng(7)
    from vsleg.dynamics import contact_jacobian_dot
    for _ in range(20):
        d = rng.uniform(-0.1, 0.1)
        h = rng.uniform(0.3, 0.55)
        qvel = rng.uniform(-1.0, 1.0, 4)
        st = _stance_state(d, h, qvel)
        tau = rng.uniform(-10.0, 10.0, 2)
        qdd, info = stance_dynamics(PARAMS, st, tau, 0.0)
        jac = contact_jacobian(PARAMS, st.qpos)
        jdot = contact_jacobian_dot(PARAMS, st.qpos, st.qvel)
        residual = jac @ qdd + jdot @ st.qvel
        assert np.max(np.abs(residual)) < 1e-8


def test_static_equilibrium_contact_force_equals_weight():
    # find the joint torques that hold the crouch, then the vertical
    # contact force must carry the whole robot weight
    st = _stance_state(0.0, 0.40)

    def acc_norm(tau):
        qdd, _ = stance_dynamics(PARAMS, st, tau, 0.0, inplace=True)
        return float(qdd @ qdd)

    res = minimize(acc_norm, x0=(0.0, 5.0), method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-24,
                            "maxiter": 4000})
    qdd, info = stance_dynamics(PARAMS, st, res.x, 0.0, inplace=True)
    assert np.max(np.abs(qdd)) < 1e-8
    weight = PARAMS.total_mass * PARAMS.gravity
    assert info.force[1] == pytest.approx(weight, abs=1e-6)


def test_passive_flight_conserves_energy():
    # torque-free ballistic flight, 0.5 s at dt = 1e-4
    st = state_from_leg_frame(PARAMS, 0.0, 0.45, phase=Phase.FLIGHT,
                              qvel=(0.3, 1.0, 0.2, -0.3))
    e0 = mechanical_energy(PARAMS, st)
    dt = 1e-4
    for _ in range(5000):
        st, _ = step(PARAMS, st, np.zeros(2), 0.0, dt)
    drift = abs(mechanical_energy(PARAMS, st) - e0) / abs(e0)
    assert drift < 1e-3


def test_touchdown_projection_removes_contact_velocity():
    st = state_from_leg_frame(PARAMS, 0.0, 0.45, phase=Phase.FLIGHT,
                              qvel=(0.0, -1.2, 0.0, 0.0))
    v_plus, loss = touchdown_projection(PARAMS, st)
    jac = contact_jacobian(PARAMS, st.qpos)
    assert np.max(np.abs(jac @ v_plus)) < 1e-10
    assert loss >= 0.0


def test_touchdown_projection_is_idempotent():
    st = state_from_leg_frame(PARAMS, 0.0, 0.45, phase=Phase.FLIGHT,
                              qvel=(0.0, -1.2, 0.0, 0.0))
    v1, _ = touchdown_projection(PARAMS, st)
    st2 = LegState(st.qpos.copy(), v1, Phase.FLIGHT)
    v2, loss2 = touchdown_projection(PARAMS, st2)
    assert v2 == pytest.approx(v1, abs=1e-12)
    assert loss2 == pytest.approx(0.0, abs=1e-12)


def test_liftoff_event_on_negative_contact_force():
    prev = _stance_state(0.0, 0.4)
    new = _stance_state(0.0, 0.4)
    events = detect_events(PARAMS, prev, new,
                           prev_contact_fz=10.0, new_contact_fz=-1.0)
    assert Event.LIFTOFF in events


def test_locate_event_brackets_touchdown():
    # drop from a small height; bisection should land on foot_z ~ 0
    st = state_from_leg_frame(PARAMS, 0.0, 0.45, phase=Phase.FLIGHT,
                              qvel=(0.0, -0.5, 0.0, 0.0))
    # advance until the foot crosses the ground
    dt = 1e-3
    prev = st
    while foot_position(PARAMS, st.qpos)[1] > 0.0:
        prev = st
        st, _ = step(PARAMS, prev, np.zeros(2), 0.0, dt)
    t_star, hit = locate_event(PARAMS, prev, np.zeros(2), 0.0, dt,
                               lambda s: foot_position(PARAMS, s.qpos)[1])
    assert 0.0 <= t_star <= dt
    # bisection resolves time to 1% of dt; position follows the fall speed
    assert abs(foot_position(PARAMS, hit.qpos)[1]) < 1e-4


def test_knee_stop_resists_overflexion():
    from vsleg.dynamics import TH_K_MAX, joint_stop_torque
    qpos = np.array([0.0, 0.4, 0.3, TH_K_MAX + 0.05])
    tau = joint_stop_torque(qpos, np.zeros(4))
    assert tau < 0.0      # pushes the knee back into range


def test_nominal_torque_validation():
    with pytest.raises(ValueError):
        LegParams(knee_torque_nominal=36.0)
    with pytest.raises(ValueError):
        LegParams(knee_torque_limit=40.0)
