"""Two-step superadiabatic iteration: mixing angles, frame transforms, corrections.

The reduced three-level Hamiltonian is diagonalized by a first rotation; the
residual nonadiabatic coupling in that frame defines a second mixing angle
and a second rotation.  Cancelling the second-frame coupling yields a
counterdiabatic correction that only reshapes the two physical pulses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonians import effective_frame_scales
from .pulses import PulseSet, sampled_pulses

__all__ = [
    "AngleSchedule",
    "compute_angles",
    "transform_a1",
    "transform_a2",
    "cd_first_order",
    "cd_second_order",
    "first_picture_hamiltonian",
    "second_picture_hamiltonian",
    "corrected_pulses",
    "physical_drive_schedules",
]

DEGENERACY_SCALE = 1e-12

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class AngleSchedule:
    """Mixing angles and rates sampled on a time grid.

    theta1 tracks the pulse-ratio rotation, theta2 the residual coupling in
    the rotated frame (theta2 >= 0 by definition; theta1_dot carries the
    sign).  omega_prime is the pulse quadrature sum, omega_dprime the
    second-frame |eigenvalue|.  `degenerate` marks grid points where both
    omega_prime and theta1_dot vanished and theta2 was clamped to zero.
    """

    grid: np.ndarray
    theta1: np.ndarray
    theta1_dot: np.ndarray
    theta2: np.ndarray
    theta2_dot: np.ndarray
    omega_prime: np.ndarray
    omega_dprime: np.ndarray
    degenerate: np.ndarray

    def theta2_signed(self) -> np.ndarray:
        """Second angle carrying the sign of theta1_dot (arctan of the raw ratio)."""
        return np.copysign(self.theta2, self.theta1_dot)


def compute_angles(pulses: PulseSet, grid: np.ndarray | None = None, n_points: int = 10_000) -> AngleSchedule:
    """Evaluate both mixing angles and their rates on a grid.

    theta1 comes from the four-quadrant arctangent of (omega1, omega2) with
    continuity unwrapping; its rate is analytic from the pulse derivatives.
    theta2's rate is a grid derivative (central interior, one-sided ends)
    because theta2 contains |theta1_dot|, which kinks wherever theta1_dot
    changes sign.
    """
    if grid is None:
        grid = np.linspace(0.0, pulses.total_time, n_points)
    grid = np.asarray(grid, dtype=float)
    w1 = np.asarray(pulses.omega1(grid), dtype=float)
    w2 = np.asarray(pulses.omega2(grid), dtype=float)
    dw1 = np.asarray(pulses.domega1(grid), dtype=float)
    dw2 = np.asarray(pulses.domega2(grid), dtype=float)

    omega_prime = np.hypot(w1, w2)
    eps = DEGENERACY_SCALE * max(np.max(omega_prime), 1e-300)
    live = omega_prime >= eps

    raw = np.arctan2(w1, w2)
    if not live.all() and live.any():
        # hold the angle flat across dead tails so unwrap sees no junk jumps
        idx = np.arange(len(grid))
        raw = np.interp(idx, idx[live], raw[live])
    theta1 = np.unwrap(raw)

    theta1_dot = np.zeros_like(theta1)
    np.divide(dw1 * w2 - w1 * dw2, omega_prime**2, out=theta1_dot, where=live)

    degenerate = ~live & (np.abs(theta1_dot) < eps)
    theta2 = np.arctan2(np.abs(theta1_dot), omega_prime)
    theta2[degenerate] = 0.0
    theta2_dot = np.gradient(theta2, grid)
    omega_dprime = np.hypot(omega_prime, theta1_dot)

    return AngleSchedule(
        grid=grid,
        theta1=theta1,
        theta1_dot=theta1_dot,
        theta2=theta2,
        theta2_dot=theta2_dot,
        omega_prime=omega_prime,
        omega_dprime=omega_dprime,
        degenerate=degenerate,
    )


def transform_a1(theta1: float | np.ndarray) -> np.ndarray:
    """First-frame rotation; columns are the instantaneous eigenvectors.

    Vectorized: array input of shape (...) returns matrices of shape
    (..., 3, 3).
    """
    theta1 = np.asarray(theta1, dtype=float)
    c, s = np.cos(theta1), np.sin(theta1)
    zero, one = np.zeros_like(c), np.ones_like(c)
    rows = [
        [c, s / _SQRT2, s / _SQRT2],
        [zero, one / _SQRT2, -one / _SQRT2],
        [-s, c / _SQRT2, c / _SQRT2],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def transform_a2(theta2_signed: float | np.ndarray) -> np.ndarray:
    """Second-frame rotation diagonalizing the first-picture Hamiltonian.

    Takes the SIGNED second angle arctan(theta1_dot / omega_prime); columns
    are the zero, upper and lower eigenvectors.  For this scheme's pulse
    family theta1_dot <= 0, so the signed angle is minus
    AngleSchedule.theta2.
    """
    gamma = np.asarray(theta2_signed, dtype=float)
    c, s = np.cos(gamma), np.sin(gamma)
    zero = np.zeros_like(c)
    j = 1.0j
    rows = [
        [-j * c, -j * s / _SQRT2, j * s / _SQRT2],
        [-s / _SQRT2, (1.0 + c) / 2.0 + zero, (1.0 - c) / 2.0 + zero],
        [s / _SQRT2, (1.0 - c) / 2.0 + zero, (1.0 + c) / 2.0 + zero],
    ]
    return np.stack([np.stack([np.asarray(x, dtype=complex) for x in r], axis=-1) for r in rows], axis=-2)


def cd_first_order(theta1_dot: float | np.ndarray) -> np.ndarray:
    """Counterdiabatic term cancelling all first-frame coupling.

    Couples the frame ends directly, which is why it is kept for analysis
    only and never enters the full-model pipeline.
    """
    d = np.asarray(theta1_dot, dtype=complex)
    zero = np.zeros_like(d)
    rows = [[zero, zero, 1j * d], [zero, zero, zero], [-1j * d, zero, zero]]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def cd_second_order(theta1: float | np.ndarray, theta2_dot: float | np.ndarray) -> np.ndarray:
    """Second-order counterdiabatic term; same sparsity as the bare coupling matrix."""
    theta1, theta2_dot = np.broadcast_arrays(
        np.asarray(theta1, dtype=float), np.asarray(theta2_dot, dtype=float)
    )
    c, s = np.cos(theta1), np.sin(theta1)
    zero = np.zeros_like(c)
    rows = [
        [zero, -theta2_dot * c, zero],
        [-theta2_dot * c, zero, theta2_dot * s],
        [zero, theta2_dot * s, zero],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def first_picture_hamiltonian(omega_prime: float | np.ndarray, theta1_dot: float | np.ndarray) -> np.ndarray:
    """Closed form of the rotated Hamiltonian: split diagonal plus rate coupling."""
    omega_prime, theta1_dot = np.broadcast_arrays(
        np.asarray(omega_prime, dtype=float), np.asarray(theta1_dot, dtype=float)
    )
    zero = np.zeros_like(omega_prime)
    k = theta1_dot / _SQRT2
    rows = [
        [zero + 0j, -1j * k, -1j * k],
        [1j * k, omega_prime + 0j, zero + 0j],
        [1j * k, zero + 0j, -omega_prime + 0j],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def second_picture_hamiltonian(omega_dprime: float | np.ndarray, theta2_dot: float | np.ndarray) -> np.ndarray:
    """Closed form of the twice-rotated Hamiltonian for this pulse family."""
    omega_dprime, theta2_dot = np.broadcast_arrays(
        np.asarray(omega_dprime, dtype=float), np.asarray(theta2_dot, dtype=float)
    )
    zero = np.zeros_like(omega_dprime)
    k = theta2_dot / _SQRT2
    rows = [
        [zero + 0j, 1j * k, -1j * k],
        [-1j * k, omega_dprime + 0j, zero + 0j],
        [1j * k, zero + 0j, -omega_dprime + 0j],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def corrected_pulses(
    pulses: PulseSet, grid: np.ndarray | None = None, n_points: int = 10_000
) -> PulseSet:
    """Reshape a pulse pair so the second-frame coupling cancels exactly.

    Returns the corrected effective pair sampled on the angle grid and
    linearly interpolated in between; the attached schedule carries the
    angles (and any degenerate-point flags) that produced it.
    """
    schedule = compute_angles(pulses, grid=grid, n_points=n_points)
    c1, s1 = np.cos(schedule.theta1), np.sin(schedule.theta1)
    w1 = schedule.omega_prime * s1 - schedule.theta2_dot * c1
    w2 = schedule.omega_prime * c1 + schedule.theta2_dot * s1
    return sampled_pulses(schedule.grid, w1, w2, provenance="corrected", schedule=schedule)


def physical_drive_schedules(pulses: PulseSet, layout) -> list:
    """Per-atom Rabi schedules realizing an effective pair in the full model.

    Atom 1 gets omega1 scaled down by the initial-to-dark projection factor;
    atoms 2..N share omega2 scaled by the dark-to-bright factor.
    """
    s1, s2 = effective_frame_scales(layout)
    first = lambda t: pulses.omega1(t) / s1
    shared = lambda t: pulses.omega2(t) / s2
    return [first] + [shared] * (layout.n_atoms - 1)
