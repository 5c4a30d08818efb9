"""Hamiltonian builders for the full network and its three-level reduction.

The full single-excitation Hamiltonian splits into a static part (atom-cavity
and cavity-fiber hopping) and a drive part (per-atom two-photon Rabi
couplings between Rydberg and intermediate levels).  When the drive is weak
against the static couplings the dynamics is pinned to the zero-energy
subspace and reduces to a three-level problem spanned by the initial state,
the static dark state, and the bright Rydberg combination.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .excitation import (
    StateKind,
    SystemLayout,
    bright_state,
    build_basis,
    dark_state_phi,
    initial_state,
    kind_indices,
    static_coupling_matrix,
)

__all__ = [
    "Operator",
    "build_static",
    "build_drive",
    "drive_pattern",
    "zeno_projector",
    "effective_frame_vectors",
    "effective_frame_scales",
    "effective_matrix",
    "effective_hamiltonian",
    "effective_eigensystem",
]

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class Operator:
    """Dense complex matrix with dimension metadata and a hermiticity flag."""

    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        if self.hermitian:
            defect = np.max(np.abs(m - m.conj().T))
            if defect > HERMITIAN_TOL:
                raise ValueError(f"matrix flagged hermitian has defect {defect:.3e}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None) -> np.ndarray:
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def build_static(layout: SystemLayout, include_vacuum: bool = False) -> Operator:
    """Static couplings: lambda on atom-cavity pairs, v on fiber-cavity pairs.

    Every fiber couples both to its outer cavity and to the hub cavity 1;
    all terms are resonant so the diagonal vanishes.
    """
    return Operator(static_coupling_matrix(layout, include_vacuum), hermitian=True)


def drive_pattern(layout: SystemLayout, atom: int, include_vacuum: bool = False) -> np.ndarray:
    """Unit-amplitude Rydberg-intermediate coupling matrix for one atom."""
    basis = build_basis(layout, include_vacuum)
    dim = len(basis)
    pattern = np.zeros((dim, dim))
    ryd = {s.site: i for i, s in enumerate(basis) if s.kind is StateKind.RYDBERG}
    mid = {s.site: i for i, s in enumerate(basis) if s.kind is StateKind.INTERMEDIATE}
    pattern[ryd[atom], mid[atom]] = pattern[mid[atom], ryd[atom]] = 1.0
    return pattern


def build_drive(
    layout: SystemLayout,
    schedules: Sequence[Callable[[float], float] | float],
    t: float = 0.0,
    include_vacuum: bool = False,
) -> Operator:
    """Drive Hamiltonian at time t from per-atom Rabi schedules.

    Each schedule may be a callable of t or a constant amplitude; entry k
    drives atom k+1.
    """
    if len(schedules) != layout.n_atoms:
        raise ValueError(f"expected {layout.n_atoms} schedules, got {len(schedules)}")
    dim = layout.dim + (1 if include_vacuum else 0)
    h = np.zeros((dim, dim))
    for k, sched in enumerate(schedules, start=1):
        amp = float(sched(t)) if callable(sched) else float(sched)
        if amp != 0.0:
            h += amp * drive_pattern(layout, k, include_vacuum)
    return Operator(h, hermitian=True)


def zeno_projector(layout: SystemLayout) -> Operator:
    """Orthogonal projector onto the decoupled subspace: N Rydberg states plus the dark state."""
    basis = build_basis(layout)
    p = np.zeros((layout.dim, layout.dim), dtype=complex)
    for i in kind_indices(basis, StateKind.RYDBERG):
        p[i, i] = 1.0
    phi = dark_state_phi(layout)
    p += np.outer(phi, phi.conj())
    return Operator(p, hermitian=True)


def effective_frame_vectors(layout: SystemLayout) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full-space coordinates of the reduced frame (initial, dark, bright)."""
    return initial_state(layout), dark_state_phi(layout), bright_state(layout)


def effective_frame_scales(layout: SystemLayout) -> tuple[float, float]:
    """Projection factors mapping physical Rabi amplitudes onto the reduced frame.

    Computed numerically: s1 scales the atom-1 drive into the
    initial-to-dark coupling, s2 scales the shared drive on atoms 2..N into
    the dark-to-bright coupling.  Closed forms are (N-1)/sqrt(N^2-1) and
    1/sqrt(N+1); the numeric route keeps the builder honest for every N.
    """
    psi1, phi, bright = effective_frame_vectors(layout)
    drive_first = drive_pattern(layout, 1)
    drive_rest = sum(drive_pattern(layout, k) for k in range(2, layout.n_atoms + 1))
    s1 = float(np.real(phi.conj() @ (drive_first @ psi1)))
    s2 = float(np.real(phi.conj() @ (drive_rest @ bright)))
    return s1, s2


def effective_matrix(omega1_eff: float, omega2_eff: float) -> np.ndarray:
    """Reduced 3x3 matrix in the (initial, dark, bright) frame."""
    return np.array(
        [
            [0.0, omega1_eff, 0.0],
            [omega1_eff, 0.0, omega2_eff],
            [0.0, omega2_eff, 0.0],
        ]
    )


def effective_hamiltonian(pulses, t: float) -> Operator:
    """Reduced Hamiltonian at time t from an effective pulse pair."""
    return Operator(effective_matrix(float(pulses.omega1(t)), float(pulses.omega2(t))), hermitian=True)


def effective_eigensystem(theta1: float, omega_prime: float) -> tuple[np.ndarray, np.ndarray]:
    """Instantaneous eigenvalues and eigenvectors of the reduced Hamiltonian.

    Returns eigenvalues (0, +omega', -omega') and the matrix whose columns
    are the matching eigenvectors: the zero-energy transfer state
    (cos theta1, 0, -sin theta1) and the split pair
    (sin theta1, +-1, cos theta1)/sqrt(2).
    """
    if omega_prime < 0:
        raise ValueError("omega_prime must be non-negative")
    c, s = np.cos(theta1), np.sin(theta1)
    vectors = np.array(
        [
            [c, s / np.sqrt(2.0), s / np.sqrt(2.0)],
            [0.0, 1.0 / np.sqrt(2.0), -1.0 / np.sqrt(2.0)],
            [-s, c / np.sqrt(2.0), c / np.sqrt(2.0)],
        ]
    )
    values = np.array([0.0, omega_prime, -omega_prime])
    return values, vectors
