"""Single-excitation state space for a star-coupled cavity/fiber superatom network.

One shared excitation lives on N superatoms (Rydberg or intermediate level),
N cavities, and the N-1 fibers that tie every outer cavity back to cavity 1.
An optional vacuum level collects decayed population in open-system runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "StateKind",
    "BasisState",
    "SystemLayout",
    "build_basis",
    "state_index",
    "kind_indices",
    "basis_labels",
    "initial_state",
    "w_target",
    "bright_state",
    "dark_state_phi",
]

NULL_SPACE_TOL = 1e-10


class StateKind(Enum):
    RYDBERG = "rydberg"
    INTERMEDIATE = "intermediate"
    CAVITY = "cavity"
    FIBER = "fiber"
    VACUUM = "vacuum"


@dataclass(frozen=True)
class BasisState:
    """One basis vector: which carrier holds the excitation, and where."""

    kind: StateKind
    site: int  # atom/cavity index 1..N, fiber index 1..N-1, 0 for the vacuum

    def label(self) -> str:
        if self.kind is StateKind.VACUUM:
            return "vacuum"
        return f"{self.kind.value}{self.site}"


@dataclass(frozen=True)
class SystemLayout:
    """Network geometry and couplings.

    Parameters
    ----------
    n_atoms:
        Number of superatoms N (>= 2).  Fiber k connects cavity 1 to
        cavity k+1 for k = 1..N-1 (star topology, fixed).
    cavity_coupling:
        Collective atom-cavity coupling, units of 1/T.
    fiber_coupling:
        Cavity-fiber hopping rate, units of 1/T.
    """

    n_atoms: int
    cavity_coupling: float
    fiber_coupling: float

    def __post_init__(self) -> None:
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 2:
            raise ValueError(f"n_atoms must be an integer >= 2, got {self.n_atoms}")
        if self.cavity_coupling <= 0 or self.fiber_coupling <= 0:
            raise ValueError("coupling strengths must be positive")

    @property
    def dim(self) -> int:
        """Size of the single-excitation space (no vacuum)."""
        return 4 * self.n_atoms - 1

    @property
    def equal_couplings(self) -> bool:
        scale = max(abs(self.cavity_coupling), abs(self.fiber_coupling))
        return abs(self.cavity_coupling - self.fiber_coupling) <= 1e-12 * scale


def build_basis(layout: SystemLayout, include_vacuum: bool = False) -> tuple[BasisState, ...]:
    """Enumerate the canonical ordered basis.

    The order walks the excitation chain: atom 1 (Rydberg, intermediate),
    cavity 1, then for each further atom k the fiber k-1, cavity k,
    intermediate and Rydberg levels.  For N=4 this gives the conventional
    15-state ordering psi1..psi15; the vacuum, when requested, is appended
    last.
    """
    states = [
        BasisState(StateKind.RYDBERG, 1),
        BasisState(StateKind.INTERMEDIATE, 1),
        BasisState(StateKind.CAVITY, 1),
    ]
    for k in range(2, layout.n_atoms + 1):
        states.append(BasisState(StateKind.FIBER, k - 1))
        states.append(BasisState(StateKind.CAVITY, k))
        states.append(BasisState(StateKind.INTERMEDIATE, k))
        states.append(BasisState(StateKind.RYDBERG, k))
    if include_vacuum:
        states.append(BasisState(StateKind.VACUUM, 0))
    return tuple(states)


def state_index(basis: tuple[BasisState, ...], kind: StateKind, site: int = 0) -> int:
    """Position of a state in the canonical ordering."""
    target = BasisState(kind, site)
    for i, state in enumerate(basis):
        if state == target:
            return i
    raise ValueError(f"state {target} not in basis")


def kind_indices(basis: tuple[BasisState, ...], kind: StateKind) -> np.ndarray:
    """Indices of all states of one kind, in basis order."""
    return np.array([i for i, s in enumerate(basis) if s.kind is kind], dtype=int)


def basis_labels(basis: tuple[BasisState, ...]) -> list[str]:
    """Positional column labels for trajectory exports (psi1.., vac)."""
    labels = []
    for i, state in enumerate(basis):
        labels.append("vac" if state.kind is StateKind.VACUUM else f"psi{i + 1}")
    return labels


def _zeros(layout: SystemLayout, include_vacuum: bool) -> np.ndarray:
    return np.zeros(layout.dim + (1 if include_vacuum else 0), dtype=complex)


def initial_state(layout: SystemLayout, include_vacuum: bool = False) -> np.ndarray:
    """Excitation parked on the Rydberg level of atom 1."""
    psi = _zeros(layout, include_vacuum)
    psi[0] = 1.0
    return psi


def w_target(layout: SystemLayout, include_vacuum: bool = False) -> np.ndarray:
    """Uniform superposition of all N Rydberg states, amplitude 1/sqrt(N)."""
    basis = build_basis(layout, include_vacuum)
    psi = _zeros(layout, include_vacuum)
    psi[kind_indices(basis, StateKind.RYDBERG)] = 1.0 / np.sqrt(layout.n_atoms)
    return psi


def bright_state(layout: SystemLayout, include_vacuum: bool = False) -> np.ndarray:
    """Uniform superposition of the Rydberg states of atoms 2..N."""
    basis = build_basis(layout, include_vacuum)
    psi = _zeros(layout, include_vacuum)
    idx = kind_indices(basis, StateKind.RYDBERG)[1:]
    psi[idx] = 1.0 / np.sqrt(layout.n_atoms - 1)
    return psi


def static_coupling_matrix(layout: SystemLayout, include_vacuum: bool = False) -> np.ndarray:
    """Drive-free coupling matrix: atom-cavity and cavity-fiber hopping.

    All couplings are resonant, so every diagonal entry is zero.  Returned
    as a raw real-symmetric array; the hamiltonians module wraps it.
    """
    basis = build_basis(layout, include_vacuum)
    dim = len(basis)
    h = np.zeros((dim, dim))
    lam = layout.cavity_coupling
    v = layout.fiber_coupling
    cav = {s.site: i for i, s in enumerate(basis) if s.kind is StateKind.CAVITY}
    for i, state in enumerate(basis):
        if state.kind is StateKind.INTERMEDIATE:
            j = cav[state.site]
            h[i, j] = h[j, i] = lam
        elif state.kind is StateKind.FIBER:
            # fiber k talks to the hub cavity 1 and to cavity k+1
            for j in (cav[1], cav[state.site + 1]):
                h[i, j] = h[j, i] = v
    return h


def dark_state_phi(layout: SystemLayout) -> np.ndarray:
    """Distinguished zero-energy state of the static couplings.

    Computed as the normalized projection of |intermediate(1)> onto the
    numeric null space of the static coupling matrix, which singles out the
    permutation-symmetric null vector supported on intermediate and fiber
    states.  The sign is fixed so the intermediate(1) coefficient is
    positive.  Requires equal cavity and fiber couplings; without that the
    projection has no zero-energy component and a ValueError is raised.
    """
    if not layout.equal_couplings:
        raise ValueError(
            "dark state requires equal cavity and fiber couplings "
            f"(got {layout.cavity_coupling} and {layout.fiber_coupling})"
        )
    h = static_coupling_matrix(layout)
    scale = np.linalg.norm(h, ord=2)
    eigvals, eigvecs = np.linalg.eigh(h)
    null_vectors = eigvecs[:, np.abs(eigvals) < NULL_SPACE_TOL * scale]

    basis = build_basis(layout)
    seed = np.zeros(layout.dim)
    seed[state_index(basis, StateKind.INTERMEDIATE, 1)] = 1.0
    phi = null_vectors @ (null_vectors.T @ seed)
    norm = np.linalg.norm(phi)
    if norm < 1e-8:
        raise ValueError("static null space has no overlap with intermediate(1)")
    phi = phi / norm
    if phi[state_index(basis, StateKind.INTERMEDIATE, 1)] < 0:
        phi = -phi
    return phi.astype(complex)
