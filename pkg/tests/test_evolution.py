"""Propagation engines: analytic oracles, conservation, and guard rails."""

import numpy as np
import pytest

from superw.errors import ConfigurationError, IntegrationError
from superw.evolve import (
    DecoherenceRates,
    HamiltonianSource,
    collapse_channels,
    default_steps,
    drive_source,
    effective_source,
    evolve_lindblad,
    evolve_schrodinger,
    fidelity,
    minimum_steps,
)
from superw.excitation import StateKind, SystemLayout, build_basis, initial_state, w_target
from superw.pulses import StirapParams, stirap_pulses
from superw.superadiabatic import corrected_pulses, physical_drive_schedules

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
EXCITED = np.array([0.0, 1.0], dtype=complex)
GROUND = np.array([1.0, 0.0], dtype=complex)


def rabi_source(omega):
    return HamiltonianSource((omega / 2.0) * SIGMA_X)


# ---------------------------------------------------------------------------
# Hamiltonian sources


def test_source_at_and_table():
    src = HamiltonianSource(np.zeros((2, 2), dtype=complex), ((SIGMA_X, lambda t: 3.0 * np.asarray(t)),))
    assert np.allclose(src.at(0.5), 1.5 * SIGMA_X)
    times = np.array([0.0, 0.25, 1.0])
    table = src.coefficient_table(times)
    assert np.allclose(table, [[0.0, 0.75, 3.0]])


def test_spectral_radius_bound():
    layout = SystemLayout(4, 80.0, 80.0)
    pulses = stirap_pulses(StirapParams())
    src = drive_source(layout, physical_drive_schedules(pulses, layout))
    radius = src.spectral_radius(1.0)
    # static graph alone reaches sqrt(5) * 80; the drive only adds to it
    assert radius >= np.sqrt(5.0) * 80.0 - 1e-9
    assert radius < np.sqrt(5.0) * 80.0 + 40.0


def test_drive_source_groups_shared_schedules():
    layout = SystemLayout(4, 80.0, 80.0)
    pulses = stirap_pulses(StirapParams())
    schedules = physical_drive_schedules(pulses, layout)
    src = drive_source(layout, schedules)
    # one term for atom 1, one for the shared schedule on atoms 2..4
    assert len(src.terms) == 2
    # and the grouped pattern matches evaluating the drive explicitly
    t = 0.37
    h = np.array(src.static, dtype=complex)
    for pattern, coeff in src.terms:
        h += complex(np.asarray(coeff(t)).item()) * pattern
    assert np.allclose(h, src.at(t), atol=1e-14)


def test_drive_source_schedule_count_guard():
    layout = SystemLayout(4, 80.0, 80.0)
    with pytest.raises(ConfigurationError):
        drive_source(layout, [lambda t: t])


def test_effective_source_terms():
    pulses = stirap_pulses(StirapParams())
    assert len(effective_source(pulses).terms) == 2
    assert len(effective_source(pulses, first_order_rate=lambda t: 0.0 * np.asarray(t)).terms) == 3


# ---------------------------------------------------------------------------
# step selection


def test_default_steps_scales_with_coupling():
    assert default_steps(80.0, 1.0) == 2_000  # floor
    assert default_steps(800.0, 1.0) == 10_000
    assert default_steps(800.0, 2.0) == 20_000


def test_minimum_steps_enforces_eigenvalue_bound():
    layout = SystemLayout(4, 80.0, 80.0)
    pulses = stirap_pulses(StirapParams())
    src = drive_source(layout, physical_drive_schedules(pulses, layout))
    n = minimum_steps(src, 1.0)
    radius = src.spectral_radius(1.0)
    assert (1.0 / n) * radius <= 0.05
    assert (1.0 / (n - 2)) * radius > 0.05  # tight, not padded


def test_step_precheck_raises():
    with pytest.raises(ConfigurationError, match="step"):
        evolve_schrodinger(rabi_source(3.0), GROUND, 100.0, 10)


# ---------------------------------------------------------------------------
# closed-system engine


def test_rabi_oscillation_matches_analytic():
    omega = 3.0
    traj = evolve_schrodinger(rabi_source(omega), GROUND, 2.0, 4_000, target=EXCITED)
    assert np.max(np.abs(traj.fidelity - np.sin(omega * traj.grid / 2.0) ** 2)) < 1e-12


def test_fourth_order_convergence():
    omega, total = 3.0, 2.0
    exact = np.sin(omega * total / 2.0) ** 2
    errors = [
        abs(evolve_schrodinger(rabi_source(omega), GROUND, total, n, target=EXCITED).final_fidelity - exact)
        for n in (100, 200, 400)
    ]
    assert 13.0 < errors[0] / errors[1] < 19.0
    assert 13.0 < errors[1] / errors[2] < 19.0


def test_norm_conservation_full_network(full_run):
    trajectory, _ = full_run
    assert trajectory.diagnostics["norm_drift"] < 1e-7


def test_initial_state_guards():
    with pytest.raises(ValueError):
        evolve_schrodinger(rabi_source(1.0), np.array([1.0, 1.0]), 1.0, 100)
    with pytest.raises(ValueError):
        evolve_schrodinger(rabi_source(1.0), np.array([1.0, 0.0, 0.0]), 1.0, 100)


def test_sampling_count_is_exact():
    traj = evolve_schrodinger(rabi_source(1.0), GROUND, 1.0, 1_000, target=EXCITED, max_samples=100)
    assert len(traj.grid) == 100
    assert traj.grid[0] == 0.0 and traj.grid[-1] == 1.0
    assert traj.populations.shape == (len(traj.grid), 2)
    # more samples than steps: every step is reported once
    dense = evolve_schrodinger(rabi_source(1.0), GROUND, 1.0, 50, target=EXCITED, max_samples=100)
    assert len(dense.grid) == 51
    # the two-point degenerate case keeps both endpoints
    ends = evolve_schrodinger(rabi_source(1.0), GROUND, 1.0, 50, target=EXCITED, max_samples=1)
    assert len(ends.grid) == 2 and ends.grid[-1] == 1.0


def test_fidelity_pads_vacuum():
    state = np.array([0.6, 0.8, 0.0], dtype=complex)  # last entry = vacuum
    target = np.array([0.6, 0.8], dtype=complex)
    assert np.isclose(fidelity(state, target), 1.0)
    rho = np.outer(state, state.conj())
    assert np.isclose(fidelity(rho, target), 1.0)
    with pytest.raises(ValueError):
        fidelity(state, np.array([1.0]))


# ---------------------------------------------------------------------------
# collapse channels


def test_channel_inventory():
    layout = SystemLayout(4, 80.0, 80.0)
    rates = DecoherenceRates(gamma=0.4, kappa=0.9)
    channels = collapse_channels(layout, rates)
    assert len(channels) == 4 * 4 - 1
    labels = [c.label for c in channels]
    assert labels == (
        [f"rydberg_decay_{k}" for k in (1, 2, 3, 4)]
        + [f"intermediate_decay_{k}" for k in (1, 2, 3, 4)]
        + [f"cavity_loss_{k}" for k in (1, 2, 3, 4)]
        + [f"fiber_loss_{k}" for k in (1, 2, 3)]
    )
    basis = build_basis(layout, include_vacuum=True)
    vac = len(basis) - 1
    for channel in channels:
        op = np.asarray(channel.operator)
        assert op.shape == (16, 16)
        rows, cols = np.nonzero(op)
        assert len(rows) == 1  # single-entry operators
        kind = basis[cols[0]].kind
        if kind is StateKind.RYDBERG:
            assert basis[rows[0]].kind is StateKind.INTERMEDIATE
            assert basis[rows[0]].site == basis[cols[0]].site
            assert np.isclose(op[rows[0], cols[0]].real, np.sqrt(0.01 * 0.4))
        elif kind is StateKind.INTERMEDIATE:
            assert rows[0] == vac
            assert np.isclose(op[rows[0], cols[0]].real, np.sqrt(0.4))
        else:
            assert rows[0] == vac
            assert np.isclose(op[rows[0], cols[0]].real, np.sqrt(0.9))


def test_rydberg_rate_override():
    assert np.isclose(DecoherenceRates(gamma=0.4).rydberg_rate, 0.004)
    assert np.isclose(DecoherenceRates(gamma=0.4, gamma_rydberg=0.07).rydberg_rate, 0.07)
    with pytest.raises(ValueError):
        DecoherenceRates(gamma=-0.1)
    with pytest.raises(ValueError):
        DecoherenceRates(gamma_rydberg=-0.1)


# ---------------------------------------------------------------------------
# open-system engine


def test_lindblad_zero_rates_matches_schrodinger():
    layout = SystemLayout(4, 80.0, 80.0)
    pulses = corrected_pulses(stirap_pulses(StirapParams()))
    schedules = physical_drive_schedules(pulses, layout)
    target = w_target(layout)

    closed_src = drive_source(layout, schedules)
    steps = minimum_steps(closed_src, 1.0)
    closed = evolve_schrodinger(closed_src, initial_state(layout), 1.0, steps, target=target)

    open_src = drive_source(layout, schedules, include_vacuum=True)
    channels = collapse_channels(layout, DecoherenceRates())  # all rates zero
    psi0 = initial_state(layout, include_vacuum=True)
    rho0 = np.outer(psi0, psi0.conj())
    opened = evolve_lindblad(open_src, channels, rho0, 1.0, steps, target=target)

    assert abs(closed.final_fidelity - opened.final_fidelity) < 1e-12


def test_lindblad_conserves_trace_and_positivity(lossy_run):
    trajectory, _ = lossy_run
    assert trajectory.diagnostics["trace_drift"] < 1e-8
    assert trajectory.diagnostics["min_eigenvalue"] >= -1e-6
    # a lossy run really does lose excitation into the sink
    assert trajectory.final_state[-1, -1].real > 0.001


def test_maximally_mixed_state_is_stationary():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(6, 6))
    src = HamiltonianSource(((a + a.T) / 2.0).astype(complex))
    rho0 = np.eye(6) / 6.0
    traj = evolve_lindblad(src, [], rho0, 1.0, 400)
    assert np.max(np.abs(traj.final_state - rho0)) == 0.0


def test_lindblad_input_guards():
    src = HamiltonianSource(np.zeros((2, 2), dtype=complex))
    good = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    with pytest.raises(ValueError):  # not hermitian
        evolve_lindblad(src, [], good + np.array([[0.0, 0.2], [0.0, 0.0]]), 1.0, 100)
    with pytest.raises(ValueError):  # trace != 1
        evolve_lindblad(src, [], 2.0 * good, 1.0, 100)
    with pytest.raises(ValueError):  # not positive semidefinite
        bad = np.array([[1.5, 0.0], [0.0, -0.5]], dtype=complex)
        evolve_lindblad(src, [], bad, 1.0, 100)
    with pytest.raises(ValueError):  # dimension mismatch
        evolve_lindblad(src, [], np.eye(3, dtype=complex) / 3.0, 1.0, 100)


def test_lindblad_precheck_includes_rates():
    """Rates far above the step resolution are rejected before integrating."""
    layout = SystemLayout(2, 5.0, 5.0)
    pulses = stirap_pulses(StirapParams())
    schedules = physical_drive_schedules(pulses, layout)
    src = drive_source(layout, schedules, include_vacuum=True)
    channels = collapse_channels(layout, DecoherenceRates(gamma=2_000.0, kappa=2_000.0))
    psi0 = initial_state(layout, include_vacuum=True)
    rho0 = np.outer(psi0, psi0.conj())
    with pytest.raises(ConfigurationError, match="step"):
        evolve_lindblad(src, channels, rho0, 1.0, minimum_steps(src, 1.0))


def test_lindblad_runtime_positivity_abort():
    """A narrow coefficient spike the radius probe misses must abort at runtime."""
    from superw.evolve import LindbladChannel
    from superw.hamiltonians import Operator

    spike = lambda t: 5e3 * np.exp(-(((np.asarray(t) - 0.03125) / 0.002) ** 2))
    src = HamiltonianSource(np.zeros((2, 2), dtype=complex), ((SIGMA_X, spike),))
    assert src.spectral_radius(1.0) < 1.0  # the 17-point probe misses the spike
    op = np.zeros((2, 2), dtype=complex)
    op[0, 1] = np.sqrt(0.5)
    rho0 = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
    with pytest.raises(IntegrationError, match="positivity|eigenvalue"):
        evolve_lindblad(src, [LindbladChannel(Operator(op), "decay")], rho0, 1.0, 16)
