"""Closed-form spring model: internal consistency and domain guards."""
import math

import numpy as np
import pytest

from vsleg import actuator
from vsleg.actuator import (ActuatorDomainError, ActuatorState,
                            BallScrewDrive, GearCoupling, LeafSpringParams,
                            baseline_power, slider_for_stiffness,
                            spring_energy, spring_holding_force,
                            spring_stiffness, spring_torque)

PARAMS = LeafSpringParams(lever_e=actuator.CALIBRATED_LEVER_E,
                          lever_a=actuator.CALIBRATED_LEVER_A)


def test_zero_deflection_is_relaxed():
    for x in (0.035, 0.05, 0.070):
        assert spring_torque(PARAMS, 0.0, x) == 0.0
        assert spring_holding_force(PARAMS, 0.0, x) == 0.0
        assert spring_energy(PARAMS, 0.0, x) == 0.0


def test_torque_is_restoring_and_odd():
    for q in (0.05, 0.2, 0.3):
        tau = spring_torque(PARAMS, q, 0.05)
        assert tau < 0.0                    # opposes positive deflection
        assert spring_torque(PARAMS, -q, 0.05) == pytest.approx(-tau)


def test_stiffness_monotone_in_slider_position():
    ks = [spring_stiffness(PARAMS, 0.1, x)
          for x in np.linspace(0.035, 0.070, 8)]
    assert all(b > a for a, b in zip(ks, ks[1:]))


def test_stiffness_is_torque_gradient():
    eps = 1e-7
    for q in np.linspace(0.0, math.radians(20.0), 7):
        for x in (0.035, 0.055, 0.070):
            fd = -(spring_torque(PARAMS, q + eps, x)
                   - spring_torque(PARAMS, q - eps, x)) / (2 * eps)
            assert spring_stiffness(PARAMS, q, x) == pytest.approx(
                fd, rel=1e-6, abs=1e-6)


def test_holding_force_is_energy_gradient():
    eps = 1e-8
    for q in (0.1, 0.25):
        for x in (0.040, 0.065):
            fd = -(spring_energy(PARAMS, q, x + eps)
                   - spring_energy(PARAMS, q, x - eps)) / (2 * eps)
            assert spring_holding_force(PARAMS, q, x) == pytest.approx(
                fd, rel=1e-6)


def test_torque_is_energy_gradient_in_q():
    eps = 1e-7
    for q in (0.1, 0.3):
        fd = -(spring_energy(PARAMS, q + eps, 0.05)
               - spring_energy(PARAMS, q - eps, 0.05)) / (2 * eps)
        assert spring_torque(PARAMS, q, 0.05) == pytest.approx(fd, rel=1e-6)


def test_slider_for_stiffness_round_trip():
    for q in (0.0, 0.15):
        for x in (0.035, 0.052, 0.070):
            k = spring_stiffness(PARAMS, q, x)
            assert slider_for_stiffness(PARAMS, q, k) == pytest.approx(
                x, abs=1e-12)


def test_slider_for_stiffness_rejects_unreachable():
    k_hi = spring_stiffness(PARAMS, 0.0, PARAMS.x_max - 1e-6)
    with pytest.raises(ActuatorDomainError):
        slider_for_stiffness(PARAMS, 0.0, 10.0 * k_hi)


def test_domain_guards():
    with pytest.raises(ActuatorDomainError):
        spring_torque(PARAMS, math.pi / 2, 0.05)
    with pytest.raises(ActuatorDomainError):
        spring_torque(PARAMS, 0.1, PARAMS.spring_length)


def test_lever_arm_validation():
    with pytest.raises(ValueError):
        LeafSpringParams(lever_e=0.06, lever_a=0.02)  # e >= L/3


def test_baseline_power_scales_with_speed():
    d1 = BallScrewDrive(motor_speed_n=2000.0)
    d2 = BallScrewDrive(motor_speed_n=3000.0)
    assert baseline_power(d2) == pytest.approx(1.5 * baseline_power(d1),
                                               rel=1e-12)


def test_slider_speed():
    d = BallScrewDrive(lead_p=0.002, motor_speed_n=2000.0)
    assert d.slider_speed == pytest.approx(2000.0 * 0.002 / 60.0)


def test_gear_coupling_round_trip():
    gear = GearCoupling()
    for q in (0.0, 0.1, 0.3):
        th = actuator.knee_angle_from_deflection(gear, q)
        assert actuator.deflection_from_knee_angle(gear, th) == pytest.approx(
            q, abs=1e-12)


def test_actuator_state_wrappers():
    st = ActuatorState(deflection_q=0.2, slider_x=0.05)
    assert actuator.output_torque(PARAMS, st) == spring_torque(
        PARAMS, 0.2, 0.05)
    assert actuator.output_stiffness(PARAMS, st) == spring_stiffness(
        PARAMS, 0.2, 0.05)
