"""Shared fixtures.

Expensive runs (full-network propagation, the lossy reference point) are
computed once per session and reused by both the unit tests and the
acceptance suite.
"""

from __future__ import annotations

import time
from dataclasses import replace

import numpy as np
import pytest

from superw.evolve import evolve_lindblad
from superw.excitation import SystemLayout
from superw.experiments import ExperimentConfig, _closed_run, _open_run
from superw.pulses import StirapParams, stirap_pulses
from superw.superadiabatic import compute_angles


@pytest.fixture(scope="session")
def canonical_config() -> ExperimentConfig:
    """Default working point: N=4, couplings 80/T, drive area 8, corrected pulses."""
    return ExperimentConfig()


@pytest.fixture(scope="session")
def canonical_schedule():
    """Mixing angles of the default counterintuitive pulse pair."""
    return compute_angles(stirap_pulses(StirapParams()))


@pytest.fixture(scope="session")
def dense_schedule():
    """Same angles on a 10x finer grid, for finite-difference oracles."""
    grid = np.linspace(0.0, 1.0, 100_001)
    return compute_angles(stirap_pulses(StirapParams()), grid=grid)


@pytest.fixture(scope="session")
def full_run(canonical_config):
    """Timed full-network closed run with the corrected pulses."""
    start = time.perf_counter()
    trajectory = _closed_run(canonical_config)
    elapsed = time.perf_counter() - start
    return trajectory, elapsed


@pytest.fixture(scope="session")
def lossy_run(canonical_config):
    """Timed lossy run at the reference rates kappa = gamma = 0.005 * coupling."""
    config = replace(canonical_config, gamma=0.4, kappa=0.4)
    start = time.perf_counter()
    trajectory = _open_run(config)
    elapsed = time.perf_counter() - start
    return trajectory, elapsed
