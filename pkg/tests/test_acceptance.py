"""Acceptance suite: every headline claim, one pass/fail line each.

Each test prints exactly one `PASS criterion N: ...` or `FAIL criterion N: ...`
line with the measured numbers, then asserts.  Criteria that the faithful
implementation cannot reach are allowed to fail here — the analysis lives in
the project decision ledger — rather than being weakened to pass.
"""

from dataclasses import replace

import numpy as np

from superw.evolve import evolve_schrodinger, effective_source
from superw.excitation import SystemLayout
from superw.experiments import (
    ExperimentConfig,
    _closed_run,
    run_fit_pulses,
    run_n_scaling,
    run_time_comparison,
)
from superw.hamiltonians import (
    build_static,
    drive_pattern,
    effective_frame_scales,
    effective_frame_vectors,
    effective_matrix,
)
from superw.pulses import StirapParams, stirap_pulses
from superw.superadiabatic import (
    cd_first_order,
    cd_second_order,
    compute_angles,
    first_picture_hamiltonian,
    second_picture_hamiltonian,
    transform_a1,
    transform_a2,
)

def report(number: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    print(line)
    assert ok, line


def test_criterion_1_peak_closed_fidelity(full_run):
    """Full network, corrected pulses, canonical parameters: F(T) = 0.9994 +- 0.0005, < 1 s."""
    trajectory, elapsed = full_run
    f = trajectory.final_fidelity
    ok = abs(f - 0.9994) <= 0.0005 and elapsed < 1.0
    report("1", ok, f"full-model F(T) = {f:.6f} (target 0.9994 +- 0.0005), runtime {elapsed:.2f} s")


def test_criterion_2_open_system_floor(full_run, lossy_run):
    """Reference rates kappa = gamma = 0.005 * coupling: F(T) >= 0.975, point < 10 s."""
    trajectory, elapsed = lossy_run
    f = trajectory.final_fidelity
    # extrapolated 41 x 41 map on 8 workers must fit the 10-minute budget
    map_minutes = elapsed * 41 * 41 / 8.0 / 60.0
    ok = f >= 0.975 and elapsed < 10.0 and map_minutes < 10.0
    report(
        "2",
        ok,
        f"lossy F(T) = {f:.6f} (floor 0.975), point {elapsed:.2f} s, "
        f"projected 41x41 map on 8 workers {map_minutes:.1f} min",
    )


def test_criterion_3_angle_boundaries():
    """theta1(0) = 0 and theta1(T) = -pi/3 within 1e-3 for amplitudes 1..20; samples rescale-invariant."""
    worst = 0.0
    for omega0 in (1.0, 5.0, 8.0, 20.0):
        sched = compute_angles(stirap_pulses(StirapParams(omega0=omega0)))
        worst = max(worst, abs(sched.theta1[0]), abs(sched.theta1[-1] + np.pi / 3.0))
    base = compute_angles(stirap_pulses(StirapParams(omega0=8.0)))
    doubled = compute_angles(stirap_pulses(StirapParams(omega0=16.0)))
    invariant = np.array_equal(base.theta1, doubled.theta1)
    ok = worst < 1e-3 and invariant
    report(
        "3",
        ok,
        f"worst boundary offset {worst:.2e} rad (bound 1e-3), "
        f"theta1 samples bit-identical under amplitude rescale: {invariant}",
    )


def test_criterion_4_schedule_ordering(canonical_config, tmp_path):
    """Superadiabatic beats plain adiabatic at T = 8/omega0; stretching to 35/omega0 restores it."""
    result = run_time_comparison(
        replace(canonical_config, samples=101, figure=False, output=str(tmp_path / "time.csv"))
    )
    f_super = float(result.data["fidelity_superadiabatic"][-1])
    f_fast = float(result.data["fidelity_adiabatic"][-1])
    f_slow = float(result.data["fidelity_adiabatic_slow"][-1])
    ok = (f_super > f_fast) and (f_slow > f_fast) and (f_super >= 0.99) and (f_fast <= 0.95)
    report(
        "4",
        ok,
        f"F_super = {f_super:.6f} (>= 0.99), F_adiab(8/omega0) = {f_fast:.6f} (<= 0.95), "
        f"F_adiab(35/omega0) = {f_slow:.6f} (> fast)",
    )


def test_criterion_5_oracle_equivalences(dense_schedule):
    """Closed forms vs finite differences, projection vs reduced matrix, exact tracking."""
    sched = dense_schedule
    grid, theta1 = sched.grid, sched.theta1
    signed = sched.theta2_signed()
    dt = grid[1] - grid[0]
    fd_worst = 0.0
    for i in (1_370, 25_000, 50_000, 77_770, 95_000):
        h_eff = effective_matrix(
            sched.omega_prime[i] * np.sin(theta1[i]), sched.omega_prime[i] * np.cos(theta1[i])
        )
        a1 = transform_a1(theta1[i])
        da1 = (transform_a1(theta1[i + 1]) - transform_a1(theta1[i - 1])) / (2 * dt)
        h1 = first_picture_hamiltonian(sched.omega_prime[i], sched.theta1_dot[i])
        fd_worst = max(fd_worst, np.max(np.abs(a1.conj().T @ h_eff @ a1 + 1j * (da1.conj().T @ a1) - h1)))
        a2 = transform_a2(signed[i])
        da2 = (transform_a2(signed[i + 1]) - transform_a2(signed[i - 1])) / (2 * dt)
        h2 = second_picture_hamiltonian(sched.omega_dprime[i], sched.theta2_dot[i])
        fd_worst = max(fd_worst, np.max(np.abs(a2.conj().T @ h1 @ a2 + 1j * (da2.conj().T @ a2) - h2)))
        fd_worst = max(fd_worst, np.max(np.abs(1j * da1 @ a1.conj().T - cd_first_order(sched.theta1_dot[i]))))
        fd_worst = max(
            fd_worst,
            np.max(np.abs(1j * a1 @ da2 @ a2.conj().T @ a1.conj().T - cd_second_order(theta1[i], sched.theta2_dot[i]))),
        )

    proj_worst = 0.0
    for n in range(2, 7):
        layout = SystemLayout(n, 80.0, 80.0)
        psi1, phi, bright = effective_frame_vectors(layout)
        s1, s2 = effective_frame_scales(layout)
        for i in (25_000, 75_000):
            om1 = 8.0 * np.sin(theta1[i])
            om2 = 8.0 * np.cos(theta1[i])
            h = np.asarray(build_static(layout)).astype(complex) + om1 * drive_pattern(layout, 1)
            for k in range(2, n + 1):
                h += om2 * drive_pattern(layout, k)
            frame = np.column_stack([psi1, phi, bright])
            proj_worst = max(
                proj_worst, np.max(np.abs(frame.conj().T @ h @ frame - effective_matrix(om1 * s1, om2 * s2)))
            )

    pulses = stirap_pulses(StirapParams())
    track_sched = compute_angles(pulses, n_points=40_000)
    rate = lambda t: np.interp(t, track_sched.grid, track_sched.theta1_dot)
    source = effective_source(pulses, first_order_rate=rate)
    psi0 = np.array([1.0, 0.0, 0.0], dtype=complex)
    final_dark = np.array([np.cos(track_sched.theta1[-1]), 0.0, -np.sin(track_sched.theta1[-1])], dtype=complex)
    tracking = evolve_schrodinger(source, psi0, 1.0, 5_000, target=final_dark).final_fidelity

    ok = fd_worst < 1e-6 and proj_worst < 1e-10 and tracking >= 1.0 - 1e-6
    report(
        "5",
        ok,
        f"finite-difference worst {fd_worst:.1e} (< 1e-6), projection worst {proj_worst:.1e} (< 1e-10), "
        f"first-order tracking infidelity {1.0 - tracking:.1e} (< 1e-6)",
    )


def test_criterion_6_gaussian_fit_loop(canonical_config, tmp_path):
    """Two-term refit RMS <= 2% of peak; built-in fitted preset reaches F >= 0.99."""
    result = run_fit_pulses(
        replace(canonical_config, samples=401, figure=False, output=str(tmp_path / "fit.csv"))
    )
    data = result.data
    ratios = [r.rms_residual / p for r, p in zip(data["reports"], data["peaks"])]
    f_preset = data["fidelity_paper_fit"]
    f_flipped = data["fidelity_paper_fit_flipped"]
    sign_resolved = f_preset > f_flipped
    ok = max(ratios) <= 0.02 and f_preset >= 0.99 and sign_resolved
    report(
        "6",
        ok,
        f"refit rms/peak = {ratios[0]:.4f}, {ratios[1]:.4f} (bound 0.02); "
        f"preset F = {f_preset:.6f} (>= 0.99), sign flip drops it to {f_flipped:.4f}",
    )


def test_criterion_7_conservation(full_run, lossy_run, canonical_config):
    """Norm drift <= 1e-7, trace drift <= 1e-8, min eigenvalue >= -1e-6, step halving <= 1e-6."""
    closed, _ = full_run
    lossy, _ = lossy_run
    norm_drift = closed.diagnostics["norm_drift"]
    trace_drift = lossy.diagnostics["trace_drift"]
    min_eig = lossy.diagnostics["min_eigenvalue"]
    doubled = _closed_run(replace(canonical_config, steps=2 * 3_580))
    delta = abs(doubled.final_fidelity - closed.final_fidelity)
    ok = norm_drift <= 1e-7 and trace_drift <= 1e-8 and min_eig >= -1e-6 and delta <= 1e-6
    report(
        "7",
        ok,
        f"norm drift {norm_drift:.1e} (<= 1e-7), trace drift {trace_drift:.1e} (<= 1e-8), "
        f"min eigenvalue {min_eig:.1e} (>= -1e-6), step-halving dF {delta:.1e} (<= 1e-6)",
    )


def test_criterion_8_n_scaling(canonical_config, tmp_path):
    """N = 2..6: effective-model fidelity >= 0.99, numeric s2 = 1/sqrt(N+1), mismatch flagged."""
    result = run_n_scaling(
        replace(canonical_config, n_min=2, n_max=6, samples=11, figure=False, output=str(tmp_path / "n.csv"))
    )
    data = result.data
    f_min = float(np.min(data["fidelity"]))
    s2_err = float(np.max(np.abs(data["s2_numeric"] - 1.0 / np.sqrt(data["n"] + 1.0))))
    angles_ok = np.allclose(data["vartheta"], -np.arctan(np.sqrt(data["n"] - 1.0)), atol=1e-12)
    flags_ok = list(data["mismatch"]) == [0, 1, 1, 1, 1]  # forms coincide only at N = 2
    ok = f_min >= 0.99 and s2_err <= 1e-10 and angles_ok and flags_ok
    report(
        "8",
        ok,
        f"min effective F = {f_min:.6f} (>= 0.99), |s2 - 1/sqrt(N+1)| worst {s2_err:.1e} (<= 1e-10), "
        f"printed-form mismatch flagged for N >= 3: {flags_ok}",
    )
