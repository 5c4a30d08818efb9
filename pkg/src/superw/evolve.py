"""Fixed-step propagation of state vectors and density matrices.

Both engines share one classical fourth-order Runge-Kutta core with the
Hamiltonian sampled at the stage times t, t+h/2 and t+h.  The fixed step
keeps runs bit-reproducible across platforms and worker counts, which the
CSV regression layer relies on.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, IntegrationError
from .excitation import StateKind, SystemLayout, build_basis, static_coupling_matrix
from .hamiltonians import Operator, drive_pattern

__all__ = [
    "HamiltonianSource",
    "drive_source",
    "effective_source",
    "DecoherenceRates",
    "LindbladChannel",
    "Trajectory",
    "collapse_channels",
    "evolve_schrodinger",
    "evolve_lindblad",
    "fidelity",
    "default_steps",
    "minimum_steps",
]

MAX_STEP_EIGENVALUE = 0.05  # step size * spectral radius must stay below this
POSITIVITY_FLOOR = -1e-6
TRACE_TOL = 1e-8


@dataclass(frozen=True)
class HamiltonianSource:
    """Time-dependent Hamiltonian H(t) = static + sum_i coeff_i(t) * pattern_i.

    Coefficient callables must accept numpy arrays of times; patterns are
    fixed matrices.  This covers every model in the package (full network,
    reduced frame, counterdiabatic additions) and lets the integrator
    evaluate all pulse samples in one vectorized pass.
    """

    static: np.ndarray
    terms: tuple[tuple[np.ndarray, Callable[[np.ndarray], np.ndarray]], ...] = ()

    @property
    def dim(self) -> int:
        return self.static.shape[0]

    def at(self, t: float) -> np.ndarray:
        h = np.array(self.static, dtype=complex)
        for pattern, coeff in self.terms:
            h += complex(np.asarray(coeff(t)).item()) * pattern
        return h

    def coefficient_table(self, times: np.ndarray) -> np.ndarray:
        if not self.terms:
            return np.zeros((0, len(times)))
        return np.stack([np.asarray(coeff(times), dtype=float) for _, coeff in self.terms])

    def spectral_radius(self, total_time: float, n_probe: int = 17) -> float:
        probes = np.linspace(0.0, total_time, n_probe)
        return max(float(np.max(np.abs(np.linalg.eigvalsh(self.at(t))))) for t in probes)


def drive_source(
    layout: SystemLayout,
    schedules: Sequence[Callable[[np.ndarray], np.ndarray]],
    include_vacuum: bool = False,
) -> HamiltonianSource:
    """Full-network source: static couplings plus per-atom drive schedules.

    Atoms sharing the same schedule object share one summed pattern, so the
    usual one-plus-shared drive costs two coefficient evaluations per step.
    """
    if len(schedules) != layout.n_atoms:
        raise ConfigurationError(f"expected {layout.n_atoms} drive schedules, got {len(schedules)}")
    static = static_coupling_matrix(layout, include_vacuum).astype(complex)
    groups: list[tuple[np.ndarray, Callable]] = []
    for atom, sched in enumerate(schedules, start=1):
        pattern = drive_pattern(layout, atom, include_vacuum)
        for i, (existing, fn) in enumerate(groups):
            if fn is sched:
                groups[i] = (existing + pattern, fn)
                break
        else:
            groups.append((pattern, sched))
    return HamiltonianSource(static, tuple((p.astype(complex), f) for p, f in groups))


_COUPLE_FIRST = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]], dtype=complex)
_COUPLE_SECOND = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]], dtype=complex)
_COUPLE_ENDS = np.array([[0.0, 0.0, 1.0j], [0.0, 0.0, 0.0], [-1.0j, 0.0, 0.0]], dtype=complex)


def effective_source(pulses, first_order_rate: Callable | None = None) -> HamiltonianSource:
    """Reduced three-level source from an effective pulse pair.

    Passing a rate schedule as `first_order_rate` adds the analysis-only
    end-to-end counterdiabatic coupling with that coefficient.
    """
    terms = [(_COUPLE_FIRST, pulses.omega1), (_COUPLE_SECOND, pulses.omega2)]
    if first_order_rate is not None:
        terms.append((_COUPLE_ENDS, first_order_rate))
    return HamiltonianSource(np.zeros((3, 3), dtype=complex), tuple(terms))


@dataclass(frozen=True)
class DecoherenceRates:
    """Base emission and photon-loss rates, units 1/T.

    The Rydberg level decays at rydberg_fraction * gamma unless an explicit
    gamma_rydberg is given (physical presets quote it independently);
    intermediate levels decay at gamma, every cavity and fiber leaks at
    kappa.
    """

    gamma: float = 0.0
    kappa: float = 0.0
    rydberg_fraction: float = 0.01
    gamma_rydberg: float | None = None

    def __post_init__(self) -> None:
        if self.gamma < 0 or self.kappa < 0:
            raise ValueError("rates must be non-negative")
        if self.gamma_rydberg is not None and self.gamma_rydberg < 0:
            raise ValueError("rates must be non-negative")

    @property
    def rydberg_rate(self) -> float:
        return self.gamma_rydberg if self.gamma_rydberg is not None else self.rydberg_fraction * self.gamma


@dataclass(frozen=True)
class LindbladChannel:
    """One collapse operator with its sqrt(rate) prefactor folded in."""

    operator: Operator
    label: str


def collapse_channels(layout: SystemLayout, rates: DecoherenceRates) -> list[LindbladChannel]:
    """All decay channels on the vacuum-extended basis.

    Rydberg levels decay into their own intermediate level; intermediate
    levels, cavities and fibers decay into the vacuum sink.  For N atoms
    that is 4N-1 channels.
    """
    basis = build_basis(layout, include_vacuum=True)
    dim = len(basis)
    vac = dim - 1
    index = {(s.kind, s.site): i for i, s in enumerate(basis)}
    channels: list[LindbladChannel] = []

    def single(weight: float, row: int, col: int) -> Operator:
        op = np.zeros((dim, dim), dtype=complex)
        op[row, col] = weight
        return Operator(op)

    for k in range(1, layout.n_atoms + 1):
        channels.append(
            LindbladChannel(
                single(np.sqrt(rates.rydberg_rate), index[(StateKind.INTERMEDIATE, k)], index[(StateKind.RYDBERG, k)]),
                f"rydberg_decay_{k}",
            )
        )
    for k in range(1, layout.n_atoms + 1):
        channels.append(
            LindbladChannel(
                single(np.sqrt(rates.gamma), vac, index[(StateKind.INTERMEDIATE, k)]),
                f"intermediate_decay_{k}",
            )
        )
    for k in range(1, layout.n_atoms + 1):
        channels.append(
            LindbladChannel(single(np.sqrt(rates.kappa), vac, index[(StateKind.CAVITY, k)]), f"cavity_loss_{k}")
        )
    for k in range(1, layout.n_atoms):
        channels.append(
            LindbladChannel(single(np.sqrt(rates.kappa), vac, index[(StateKind.FIBER, k)]), f"fiber_loss_{k}")
        )
    return channels


@dataclass(frozen=True)
class Trajectory:
    """Sampled run: times, fidelity series, populations, final state."""

    grid: np.ndarray
    fidelity: np.ndarray
    populations: np.ndarray
    final_state: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def final_fidelity(self) -> float:
        return float(self.fidelity[-1])


def fidelity(state: np.ndarray, target: np.ndarray) -> float:
    """Overlap probability with a pure target: |<target|psi>|^2 or <target|rho|target>.

    A target one entry short of the state dimension is zero-padded onto the
    vacuum level.
    """
    state = np.asarray(state)
    target = np.asarray(target, dtype=complex)
    dim = state.shape[0]
    if target.shape[0] == dim - 1:
        target = np.concatenate([target, [0.0]])
    if target.shape[0] != dim:
        raise ValueError(f"target dimension {target.shape[0]} incompatible with state dimension {dim}")
    if state.ndim == 1:
        return float(np.abs(target.conj() @ state) ** 2)
    if state.ndim == 2:
        return float(np.real(target.conj() @ state @ target))
    raise ValueError("state must be a vector or a square matrix")


def default_steps(coupling: float, total_time: float, floor: int = 2000) -> int:
    """Step count scaling linearly with the stiffest coupling: 1e4 for coupling*T = 800."""
    return max(floor, int(round(10_000 * coupling * total_time / 800.0)))


def minimum_steps(source: HamiltonianSource, total_time: float, extra_scale: float = 0.0) -> int:
    """Smallest step count passing the step-size precheck for this source.

    The nominal default_steps rule under-resolves the star network (its
    spectral radius exceeds the bare coupling), so automatic step selection
    takes the max of both.
    """
    radius = source.spectral_radius(total_time) + extra_scale
    return int(np.ceil(total_time * radius / MAX_STEP_EIGENVALUE)) + 1


def _sample_indices(steps: int, max_samples: int = 1000) -> np.ndarray:
    """Evenly spread sample points: exactly min(steps + 1, max_samples) of them.

    Both endpoints are always included, so a trajectory CSV row count equals
    the requested sample count whenever the step count allows it.
    """
    count = min(steps + 1, max(2, max_samples))
    return np.unique(np.round(np.linspace(0, steps, count)).astype(int))


def _check_step(source: HamiltonianSource, total_time: float, steps: int, extra_scale: float = 0.0) -> None:
    h = total_time / steps
    radius = source.spectral_radius(total_time) + extra_scale
    if h * radius > MAX_STEP_EIGENVALUE:
        raise ConfigurationError(
            f"step too large: step*spectral_radius = {h * radius:.3g} "
            f"exceeds {MAX_STEP_EIGENVALUE} (need >= {int(np.ceil(total_time * radius / MAX_STEP_EIGENVALUE))} steps)"
        )


def _stage_matrices(source: HamiltonianSource, total_time: float, steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient table at the 2*steps+1 stage times."""
    times = np.linspace(0.0, total_time, 2 * steps + 1)
    return times, source.coefficient_table(times)


def _hamiltonian_at_stage(source: HamiltonianSource, coeffs: np.ndarray, j: int) -> np.ndarray:
    h = source.static.copy()
    for i, (pattern, _) in enumerate(source.terms):
        h = h + coeffs[i, j] * pattern
    return h


def evolve_schrodinger(
    source: HamiltonianSource,
    psi0: np.ndarray,
    total_time: float,
    steps: int,
    target: np.ndarray | None = None,
    max_samples: int = 1000,
) -> Trajectory:
    """Propagate a normalized state vector; returns a sampled trajectory.

    Raises ConfigurationError before integrating when the step cannot
    resolve the largest instantaneous eigenvalue.
    """
    psi = np.asarray(psi0, dtype=complex).copy()
    if abs(np.linalg.norm(psi) - 1.0) > 1e-9:
        raise ValueError("initial state must be normalized")
    if psi.shape[0] != source.dim:
        raise ValueError("initial state dimension does not match the Hamiltonian")
    _check_step(source, total_time, steps)

    _, coeffs = _stage_matrices(source, total_time, steps)
    h = total_time / steps
    sample_at = set(_sample_indices(steps, max_samples).tolist())

    times, fids, pops = [], [], []

    def record(step_index: int, state: np.ndarray) -> None:
        times.append(step_index * h)
        pops.append(np.abs(state) ** 2)
        fids.append(fidelity(state, target) if target is not None else np.nan)

    record(0, psi)
    for k in range(steps):
        h0 = _hamiltonian_at_stage(source, coeffs, 2 * k)
        h1 = _hamiltonian_at_stage(source, coeffs, 2 * k + 1)
        h2 = _hamiltonian_at_stage(source, coeffs, 2 * k + 2)
        k1 = -1j * (h0 @ psi)
        k2 = -1j * (h1 @ (psi + 0.5 * h * k1))
        k3 = -1j * (h1 @ (psi + 0.5 * h * k2))
        k4 = -1j * (h2 @ (psi + h * k3))
        psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (k + 1) in sample_at:
            record(k + 1, psi)

    norm_drift = abs(np.linalg.norm(psi) - 1.0)
    return Trajectory(
        grid=np.asarray(times),
        fidelity=np.asarray(fids),
        populations=np.asarray(pops),
        final_state=psi,
        diagnostics={"norm_drift": float(norm_drift)},
    )


def evolve_lindblad(
    source: HamiltonianSource,
    channels: Sequence[LindbladChannel],
    rho0: np.ndarray,
    total_time: float,
    steps: int,
    target: np.ndarray | None = None,
    max_samples: int = 1000,
) -> Trajectory:
    """Propagate a density matrix under drift plus collapse channels.

    The generator follows the master equation with the commutator written as
    i[rho, H]; rho is re-symmetrized every step, the trace is monitored, and
    any sampled eigenvalue below the positivity floor aborts with a
    diagnostic instead of being projected away.
    """
    rho = np.asarray(rho0, dtype=complex).copy()
    dim = source.dim
    if rho.shape != (dim, dim):
        raise ValueError("initial density matrix dimension does not match the Hamiltonian")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValueError("initial density matrix must be hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-10:
        raise ValueError("initial density matrix must have unit trace")
    if float(np.min(np.linalg.eigvalsh(rho))) < -1e-10:
        raise ValueError("initial density matrix must be positive semidefinite")

    stacked = np.stack([np.asarray(ch.operator) for ch in channels]) if channels else np.zeros((0, dim, dim))
    if stacked.size and stacked.shape[1:] != (dim, dim):
        raise ValueError("channel dimension does not match the Hamiltonian (vacuum-extended basis required)")
    damping = 0.5 * np.einsum("kij,kil->jl", stacked.conj(), stacked) if channels else np.zeros((dim, dim))
    n_channels = len(channels)
    # Flattened forms turn the channel sum into two matrix products per call.
    stacked_flat = stacked.reshape(-1, dim)
    collapse_conj = stacked.conj().transpose(0, 2, 1).reshape(-1, dim)
    rate_scale = float(np.max(np.abs(damping))) if channels else 0.0
    _check_step(source, total_time, steps, extra_scale=rate_scale)

    _, coeffs = _stage_matrices(source, total_time, steps)
    h = total_time / steps
    sample_at = set(_sample_indices(steps, max_samples).tolist())

    def rhs(hmat: np.ndarray, r: np.ndarray) -> np.ndarray:
        drift = 1j * (r @ hmat - hmat @ r) - (damping @ r + r @ damping)
        if n_channels:
            moved = (stacked_flat @ r).reshape(n_channels, dim, dim).transpose(1, 0, 2).reshape(dim, -1)
            drift = drift + moved @ collapse_conj
        return drift

    times, fids, pops = [], [], []
    min_eig = np.inf
    trace_drift = 0.0

    def record(step_index: int, r: np.ndarray) -> None:
        nonlocal min_eig, trace_drift
        eigs = np.linalg.eigvalsh(r)
        min_eig = min(min_eig, float(eigs[0]))
        trace_drift = max(trace_drift, abs(float(np.trace(r).real) - 1.0))
        if min_eig < POSITIVITY_FLOOR:
            raise IntegrationError(
                f"density matrix eigenvalue {min_eig:.3e} below {POSITIVITY_FLOOR} "
                f"at t = {step_index * h:.6g} (step too large)"
            )
        if trace_drift > TRACE_TOL:
            raise IntegrationError(f"trace drift {trace_drift:.3e} exceeds {TRACE_TOL} (step too large)")
        times.append(step_index * h)
        pops.append(np.real(np.diag(r)))
        fids.append(fidelity(r, target) if target is not None else np.nan)

    record(0, rho)
    for k in range(steps):
        h0 = _hamiltonian_at_stage(source, coeffs, 2 * k)
        h1 = _hamiltonian_at_stage(source, coeffs, 2 * k + 1)
        h2 = _hamiltonian_at_stage(source, coeffs, 2 * k + 2)
        k1 = rhs(h0, rho)
        k2 = rhs(h1, rho + 0.5 * h * k1)
        k3 = rhs(h1, rho + 0.5 * h * k2)
        k4 = rhs(h2, rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        if (k + 1) in sample_at:
            record(k + 1, rho)

    return Trajectory(
        grid=np.asarray(times),
        fidelity=np.asarray(fids),
        populations=np.asarray(pops),
        final_state=rho,
        diagnostics={"trace_drift": float(trace_drift), "min_eigenvalue": float(min_eig)},
    )
