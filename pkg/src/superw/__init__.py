"""Superadiabatic preparation of the shared-excitation W state on a star network.

The package models N three-level atoms, each in its own cavity, all cavities
tied to a hub by fibers, restricted to the single-excitation manifold.  It
builds the drive schedules that steer the system from one excited atom to
the even superposition across all atoms, derives the shortcut corrections
that make the transfer fast, and propagates either the pure state or the
lossy density matrix to score the result.

Layers, bottom-up:

- excitation:     basis bookkeeping, static couplings, the decoupled state
- hamiltonians:   operators, drive patterns, the reduced three-level frame
- pulses:         drive envelopes (counterintuitive pair, Gaussian fits)
- superadiabatic: mixing angles, frame rotations, shortcut corrections
- evolve:         fixed-step integrators and decay channels
- experiments:    named runs producing CSV tables and figures
- cli:            `superw` command exposing each experiment
"""

from .errors import ConfigurationError, IntegrationError
from .excitation import (
    BasisState,
    StateKind,
    SystemLayout,
    basis_labels,
    bright_state,
    build_basis,
    dark_state_phi,
    initial_state,
    kind_indices,
    state_index,
    static_coupling_matrix,
    w_target,
)
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    load_config,
    run_amplitude_scan,
    run_angles,
    run_decoherence_map,
    run_fit_pulses,
    run_n_scaling,
    run_robustness,
    run_single_evolution,
    run_time_comparison,
)
from .evolve import (
    DecoherenceRates,
    HamiltonianSource,
    LindbladChannel,
    Trajectory,
    collapse_channels,
    default_steps,
    drive_source,
    effective_source,
    evolve_lindblad,
    evolve_schrodinger,
    fidelity,
    minimum_steps,
)
from .hamiltonians import (
    Operator,
    build_drive,
    build_static,
    drive_pattern,
    effective_eigensystem,
    effective_frame_scales,
    effective_frame_vectors,
    effective_hamiltonian,
    effective_matrix,
    zeno_projector,
)
from .pulses import (
    FitReport,
    GaussianSumParams,
    PulseSet,
    StirapParams,
    fit_gaussian_sum,
    gaussian_sum_pulses,
    load_pulse_file,
    paper_fit_params,
    paper_fit_pulses,
    sampled_pulses,
    save_pulse_file,
    stirap_pulses,
)
from .superadiabatic import (
    AngleSchedule,
    cd_first_order,
    cd_second_order,
    compute_angles,
    corrected_pulses,
    first_picture_hamiltonian,
    physical_drive_schedules,
    second_picture_hamiltonian,
    transform_a1,
    transform_a2,
)

__version__ = "0.1.0"

__all__ = [
    "AngleSchedule",
    "BasisState",
    "ConfigurationError",
    "DecoherenceRates",
    "ExperimentConfig",
    "ExperimentResult",
    "FitReport",
    "GaussianSumParams",
    "HamiltonianSource",
    "IntegrationError",
    "LindbladChannel",
    "Operator",
    "PulseSet",
    "StateKind",
    "StirapParams",
    "SystemLayout",
    "Trajectory",
    "basis_labels",
    "bright_state",
    "build_basis",
    "build_drive",
    "build_static",
    "cd_first_order",
    "cd_second_order",
    "collapse_channels",
    "compute_angles",
    "corrected_pulses",
    "dark_state_phi",
    "default_steps",
    "drive_pattern",
    "drive_source",
    "effective_eigensystem",
    "effective_frame_scales",
    "effective_frame_vectors",
    "effective_hamiltonian",
    "effective_matrix",
    "effective_source",
    "evolve_lindblad",
    "evolve_schrodinger",
    "fidelity",
    "first_picture_hamiltonian",
    "fit_gaussian_sum",
    "gaussian_sum_pulses",
    "initial_state",
    "kind_indices",
    "load_config",
    "load_pulse_file",
    "minimum_steps",
    "paper_fit_params",
    "paper_fit_pulses",
    "physical_drive_schedules",
    "run_amplitude_scan",
    "run_angles",
    "run_decoherence_map",
    "run_fit_pulses",
    "run_n_scaling",
    "run_robustness",
    "run_single_evolution",
    "run_time_comparison",
    "sampled_pulses",
    "save_pulse_file",
    "second_picture_hamiltonian",
    "state_index",
    "static_coupling_matrix",
    "stirap_pulses",
    "transform_a1",
    "transform_a2",
    "w_target",
    "zeno_projector",
]
