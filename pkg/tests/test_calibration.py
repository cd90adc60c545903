"""Lever-arm calibration: fit quality and file round-trips."""
import math

import pytest

from vsleg import actuator, default_config
from vsleg.actuator import (CALIBRATED_ETA_TAU_S, LeafSpringParams,
                            spring_stiffness)
from vsleg.harness import (CalibrationError, calibrate_lever_arms,
                           load_calibrated, read_calibration,
                           write_calibration)

ANCHORS = ((0.035, 9.43), (0.070, 22.55))
Q_ANCHOR = math.radians(12.0)


def test_fit_reproduces_anchors():
    e, a = calibrate_lever_arms(ANCHORS, Q_ANCHOR)
    params = LeafSpringParams(lever_e=e, lever_a=a)
    for x, k_target in ANCHORS:
        assert spring_stiffness(params, Q_ANCHOR, x) == pytest.approx(
            k_target, rel=5e-2)
    ratio = (spring_stiffness(params, Q_ANCHOR, 0.070)
             / spring_stiffness(params, Q_ANCHOR, 0.035))
    assert ratio == pytest.approx(22.55 / 9.43, rel=5e-2)


def test_fit_matches_frozen_constants():
    # the packaged default lever arms are this exact fit
    e, a = calibrate_lever_arms(ANCHORS, Q_ANCHOR)
    assert e == pytest.approx(actuator.CALIBRATED_LEVER_E, rel=1e-9)
    assert a == pytest.approx(actuator.CALIBRATED_LEVER_A, rel=1e-9)


def test_fit_rejects_inconsistent_anchors():
    bad = ((0.035, 9.43), (0.070, 500.0))
    with pytest.raises(CalibrationError):
        calibrate_lever_arms(bad, Q_ANCHOR)


def test_fit_needs_two_anchors():
    with pytest.raises(CalibrationError):
        calibrate_lever_arms([(0.035, 9.43)], Q_ANCHOR)


def test_calibration_file_round_trip(tmp_path):
    e, a = calibrate_lever_arms(ANCHORS, Q_ANCHOR)
    path = tmp_path / "calibration.txt"
    write_calibration(path, e, a, CALIBRATED_ETA_TAU_S)
    values = read_calibration(path)
    assert values["e"] == pytest.approx(e, rel=1e-9)
    assert values["a"] == pytest.approx(a, rel=1e-9)
    assert values["eta_tau_s"] == pytest.approx(CALIBRATED_ETA_TAU_S, rel=1e-9)


def test_calibration_file_last_value_wins(tmp_path):
    path = tmp_path / "calibration.txt"
    path.write_text("e = 0.01\na = 0.02\neta_tau_s = 0.1\ne = 0.03\n")
    assert read_calibration(path)["e"] == 0.03


def test_load_calibrated_config(tmp_path):
    e, a = calibrate_lever_arms(ANCHORS, Q_ANCHOR)
    path = tmp_path / "calibration.txt"
    write_calibration(path, e, a, CALIBRATED_ETA_TAU_S)
    cfg = load_calibrated(default_config("inplace"), path)
    assert cfg.calibrated
    assert cfg.spring.lever_e == pytest.approx(e)
