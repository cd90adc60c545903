"""Shared fixtures: calibrated configs and cached simulation runs.

The hopping runs are expensive (seconds each), so the four-mode result
sets are computed once per session and shared between the behavioral
tests and the acceptance suite.
"""
import time

import pytest

from vsleg import ActuationMode, default_config
from vsleg.harness import run_forward_hop, run_inplace_hop


@pytest.fixture(scope="session")
def cfg_inplace():
    return default_config("inplace")


@pytest.fixture(scope="session")
def cfg_forward():
    return default_config("forward")


@pytest.fixture(scope="session")
def inplace_results(cfg_inplace):
    """mode -> (metrics, result, wall_seconds) for the default one-hop plan."""
    out = {}
    for mode in ActuationMode:
        t0 = time.perf_counter()
        _, metrics, result = run_inplace_hop(mode, None, cfg_inplace)
        out[mode] = (metrics, result, time.perf_counter() - t0)
    return out


@pytest.fixture(scope="session")
def forward_results(cfg_forward):
    """mode -> (metrics, result, wall_seconds) for the obstacle course."""
    out = {}
    for mode in ActuationMode:
        t0 = time.perf_counter()
        _, metrics, result = run_forward_hop(mode, None, None, cfg_forward)
        out[mode] = (metrics, result, time.perf_counter() - t0)
    return out
