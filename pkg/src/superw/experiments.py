"""Named experiment runs, each writing a delimited dataset plus a figure.

Every run resolves one `ExperimentConfig`, produces deterministic CSV bytes
(identical config -> identical file, whatever the worker count), and renders
a PNG next to the CSV unless figures are disabled.  Scan cells run in a
process pool; a failed cell is recorded as a `nan` row followed by a
`#`-prefixed diagnostic comment instead of aborting the scan.
"""

from __future__ import annotations

import configparser
import math
import os
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .evolve import (
    DecoherenceRates,
    Trajectory,
    collapse_channels,
    default_steps,
    drive_source,
    effective_source,
    evolve_lindblad,
    evolve_schrodinger,
    minimum_steps,
)
from .excitation import SystemLayout, basis_labels, build_basis, initial_state, w_target
from .hamiltonians import effective_frame_scales
from .pulses import (
    PulseSet,
    StirapParams,
    fit_gaussian_sum,
    gaussian_sum_pulses,
    load_pulse_file,
    paper_fit_pulses,
    save_pulse_file,
    stirap_pulses,
)
from .superadiabatic import compute_angles, corrected_pulses, physical_drive_schedules

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "WORKER_ENV",
    "load_config",
    "resolve_pulses",
    "resolve_workers",
    "run_angles",
    "run_amplitude_scan",
    "run_time_comparison",
    "run_single_evolution",
    "run_decoherence_map",
    "run_robustness",
    "run_fit_pulses",
    "run_n_scaling",
    "write_csv",
]

WORKER_ENV = "SUPERW_WORKERS"

PULSE_VARIANTS = ("stirap", "paper_fit", "corrected")
MODELS = ("full", "effective")


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved parameters for one experiment invocation.

    Frequencies and rates are in units of 1/T for the configured total time;
    steps = 0 selects the count automatically from the stiffest coupling and
    the integrator's step bound.
    """

    n_atoms: int = 4
    cavity_coupling: float = 80.0
    fiber_coupling: float = 80.0
    omega0: float = 8.0
    vartheta: float = -math.pi / 3.0
    t0: float = 0.14
    tc: float = 0.19
    total_time: float = 1.0
    pulses: str = "corrected"
    model: str = "full"
    steps: int = 0
    samples: int = 1001
    gamma: float = 0.0
    kappa: float = 0.0
    gamma_rydberg: float | None = None
    fit_terms: int = 2
    angle_amplitudes: tuple[float, ...] = (2.0, 4.0, 8.0, 16.0)
    amplitude_min: float = 1.0
    amplitude_max: float = 17.0
    amplitude_count: int = 160
    rate_ratio_max: float = 0.005
    rate_grid: int = 41
    delta_max: float = 0.1
    delta_grid: int = 41
    n_min: int = 2
    n_max: int = 6
    slow_drive_area: float = 35.0
    workers: int = 0
    output: str | None = None
    figure: bool = True

    def __post_init__(self) -> None:
        def require(cond: bool, message: str) -> None:
            if not cond:
                raise ConfigurationError(message)

        require(isinstance(self.n_atoms, int) and self.n_atoms >= 2, "n_atoms must be an integer >= 2")
        require(self.cavity_coupling > 0 and self.fiber_coupling > 0, "couplings must be positive")
        require(self.omega0 > 0, "omega0 must be positive")
        require(self.total_time > 0, "total_time must be positive")
        require(0 < self.t0 < 0.5, "t0 must sit strictly inside (0, T/2)")
        require(self.tc > 0, "tc must be positive")
        require(self.model in MODELS, f"model must be one of {MODELS}")
        require(
            self.pulses in PULSE_VARIANTS or self.pulses.startswith("file:"),
            f"pulses must be one of {PULSE_VARIANTS} or file:<path>",
        )
        require(self.steps >= 0, "steps must be non-negative (0 = automatic)")
        require(self.samples >= 2, "samples must be at least 2")
        require(self.gamma >= 0 and self.kappa >= 0, "rates must be non-negative")
        require(self.gamma_rydberg is None or self.gamma_rydberg >= 0, "rates must be non-negative")
        require(self.fit_terms >= 1, "fit_terms must be at least 1")
        require(
            len(self.angle_amplitudes) > 0 and all(a > 0 for a in self.angle_amplitudes),
            "angle_amplitudes must be a non-empty list of positive values",
        )
        require(0 < self.amplitude_min < self.amplitude_max, "amplitude range must satisfy 0 < min < max")
        require(self.amplitude_count >= 2, "amplitude_count must be at least 2")
        require(self.rate_ratio_max > 0, "rate_ratio_max must be positive")
        require(self.rate_grid >= 2, "rate_grid must be at least 2")
        require(self.delta_max > 0, "delta_max must be positive")
        require(self.delta_grid >= 2, "delta_grid must be at least 2")
        require(isinstance(self.n_min, int) and self.n_min >= 2, "n_min must be an integer >= 2")
        require(isinstance(self.n_max, int) and self.n_max >= self.n_min, "n_max must be >= n_min")
        require(self.slow_drive_area > 0, "slow_drive_area must be positive")
        require(self.workers >= 0, "workers must be non-negative (0 = environment or serial)")


@dataclass(frozen=True)
class ExperimentResult:
    """What a run produced: output paths plus the in-memory arrays."""

    csv_path: Path | None
    figure_path: Path | None
    data: dict


# ---------------------------------------------------------------------------
# configuration files


_CONFIG_SCHEMA: dict[tuple[str, str], tuple[str, str]] = {
    ("system", "n_atoms"): ("n_atoms", "int"),
    ("system", "cavity_coupling"): ("cavity_coupling", "float"),
    ("system", "fiber_coupling"): ("fiber_coupling", "float"),
    ("pulses", "variant"): ("pulses", "str"),
    ("pulses", "omega0"): ("omega0", "float"),
    ("pulses", "vartheta"): ("vartheta", "float"),
    ("pulses", "t0"): ("t0", "float"),
    ("pulses", "tc"): ("tc", "float"),
    ("run", "model"): ("model", "str"),
    ("run", "total_time"): ("total_time", "float"),
    ("run", "steps"): ("steps", "int"),
    ("run", "samples"): ("samples", "int"),
    ("run", "fit_terms"): ("fit_terms", "int"),
    ("run", "slow_drive_area"): ("slow_drive_area", "float"),
    ("run", "workers"): ("workers", "int"),
    ("run", "output"): ("output", "str"),
    ("run", "figure"): ("figure", "bool"),
    ("rates", "gamma"): ("gamma", "float"),
    ("rates", "kappa"): ("kappa", "float"),
    ("rates", "gamma_rydberg"): ("gamma_rydberg", "float"),
    ("scan", "angle_amplitudes"): ("angle_amplitudes", "floats"),
    ("scan", "amplitude_min"): ("amplitude_min", "float"),
    ("scan", "amplitude_max"): ("amplitude_max", "float"),
    ("scan", "amplitude_count"): ("amplitude_count", "int"),
    ("scan", "rate_ratio_max"): ("rate_ratio_max", "float"),
    ("scan", "rate_grid"): ("rate_grid", "int"),
    ("scan", "delta_max"): ("delta_max", "float"),
    ("scan", "delta_grid"): ("delta_grid", "int"),
    ("scan", "n_min"): ("n_min", "int"),
    ("scan", "n_max"): ("n_max", "int"),
}

_PHYSICAL_KEYS = (
    "preset",
    "drive_mhz",
    "coupling_mhz",
    "fiber_mhz",
    "intermediate_decay_mhz",
    "photon_loss_mhz",
    "rydberg_decay_khz",
    "drive_area",
)

# Quoted rubidium-87 superatom numbers; the collective coupling has no
# published value and must be supplied explicitly.
_RB87_PRESET = {
    "drive_mhz": 10.0,
    "intermediate_decay_mhz": 3.0,
    "photon_loss_mhz": 0.66,
    "rydberg_decay_khz": 1.0,
}


def _convert(raw: str, kind: str, where: str):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "floats":
            return tuple(float(part) for part in raw.replace(";", ",").split(",") if part.strip())
        if kind == "bool":
            lowered = raw.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {where}: {raw!r}") from exc
    return raw.strip()


def _apply_physical(section, kwargs: dict) -> None:
    clash = {"cavity_coupling", "fiber_coupling", "gamma", "kappa", "gamma_rydberg", "omega0", "total_time"}
    overlap = clash & set(kwargs)
    if overlap:
        raise ConfigurationError(
            f"[physical] replaces {sorted(overlap)}; remove those keys or drop the physical section"
        )
    values: dict[str, float] = {}
    preset = section.get("preset", "").strip()
    if preset:
        if preset != "rb87":
            raise ConfigurationError(f"unknown physical preset {preset!r}")
        values.update(_RB87_PRESET)
    for key in _PHYSICAL_KEYS:
        if key in ("preset",):
            continue
        if key in section:
            values[key] = _convert(section[key], "float", f"[physical] {key}")
    for key in ("drive_mhz", "intermediate_decay_mhz", "photon_loss_mhz", "rydberg_decay_khz"):
        if key not in values:
            raise ConfigurationError(f"[physical] needs {key} (or preset = rb87)")
    if "coupling_mhz" not in values:
        raise ConfigurationError(
            "[physical] requires an explicit coupling_mhz: the collective cavity coupling "
            "is not part of any preset"
        )
    drive_area = values.get("drive_area", 8.0)
    scale = drive_area / values["drive_mhz"]  # MHz -> 1/T with T = drive_area / drive rate
    kwargs["omega0"] = drive_area
    kwargs["total_time"] = 1.0
    kwargs["cavity_coupling"] = values["coupling_mhz"] * scale
    kwargs["fiber_coupling"] = values.get("fiber_mhz", values["coupling_mhz"]) * scale
    kwargs["gamma"] = values["intermediate_decay_mhz"] * scale
    kwargs["kappa"] = values["photon_loss_mhz"] * scale
    kwargs["gamma_rydberg"] = values["rydberg_decay_khz"] / 1000.0 * scale


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse a key = value config file into an ExperimentConfig."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot parse config file {path}: {exc}") from exc

    kwargs: dict = {}
    physical = None
    for section in parser.sections():
        if section == "physical":
            physical = parser[section]
            continue
        for key, raw in parser[section].items():
            spec = _CONFIG_SCHEMA.get((section, key))
            if spec is None:
                raise ConfigurationError(f"unknown config key [{section}] {key}")
            name, kind = spec
            kwargs[name] = _convert(raw, kind, f"[{section}] {key}")
    if physical is not None:
        for key in physical:
            if key not in _PHYSICAL_KEYS:
                raise ConfigurationError(f"unknown config key [physical] {key}")
        _apply_physical(physical, kwargs)
    return ExperimentConfig(**kwargs)


def resolve_workers(config: ExperimentConfig) -> int:
    """Worker count: explicit config wins, then the environment, then serial."""
    if config.workers > 0:
        return config.workers
    raw = os.environ.get(WORKER_ENV, "").strip()
    if raw:
        try:
            count = int(raw)
        except ValueError as exc:
            raise ConfigurationError(f"{WORKER_ENV} must be an integer, got {raw!r}") from exc
        if count < 1:
            raise ConfigurationError(f"{WORKER_ENV} must be at least 1, got {count}")
        return count
    return 1


# ---------------------------------------------------------------------------
# shared run plumbing


def resolve_pulses(config: ExperimentConfig, omega0: float | None = None, vartheta: float | None = None) -> PulseSet:
    """Build the configured pulse pair, optionally overriding amplitude/angle."""
    variant = config.pulses
    if variant.startswith("file:"):
        pulses, _ = load_pulse_file(variant[len("file:") :], total_time=config.total_time)
        return pulses
    params = StirapParams(
        omega0=config.omega0 if omega0 is None else omega0,
        vartheta=config.vartheta if vartheta is None else vartheta,
        t0=config.t0,
        tc=config.tc,
        total_time=config.total_time,
    )
    if variant == "stirap":
        return stirap_pulses(params)
    if variant == "corrected":
        return corrected_pulses(stirap_pulses(params))
    if variant == "paper_fit":
        return paper_fit_pulses(config.total_time)
    raise ConfigurationError(f"unknown pulse variant {variant!r}")


def _scaled_pulse_pair(pulses: PulseSet, first_factor: float, second_factor: float) -> PulseSet:
    """Multiplicative amplitude errors applied to an effective pulse pair."""
    return PulseSet(
        omega1=lambda t: first_factor * pulses.omega1(t),
        omega2=lambda t: second_factor * pulses.omega2(t),
        domega1=lambda t: first_factor * pulses.domega1(t),
        domega2=lambda t: second_factor * pulses.domega2(t),
        total_time=pulses.total_time,
        provenance="custom",
    )


def _effective_target(n_atoms: int) -> np.ndarray:
    """The shared-excitation target written in the reduced frame."""
    return np.array([1.0 / math.sqrt(n_atoms), 0.0, math.sqrt((n_atoms - 1) / n_atoms)], dtype=complex)


def _auto_steps(config: ExperimentConfig, source, scale: float, extra: float = 0.0) -> int:
    if config.steps > 0:
        return config.steps
    nominal = default_steps(scale, config.total_time)
    return max(nominal, minimum_steps(source, config.total_time, extra_scale=extra))


def _closed_run(
    config: ExperimentConfig,
    pulses: PulseSet | None = None,
    omega0: float | None = None,
    coupling_factors: tuple[float, float] = (1.0, 1.0),
    max_samples: int = 1000,
) -> Trajectory:
    """One closed-system run returning the sampled trajectory.

    Pulse amplitudes and frame scales always come from the nominal layout;
    coupling_factors perturb only the static network the drive acts on.
    """
    if pulses is None:
        pulses = resolve_pulses(config, omega0=omega0)
    if config.model == "effective":
        source = effective_source(pulses)
        psi0 = np.array([1.0, 0.0, 0.0], dtype=complex)
        target = _effective_target(config.n_atoms)
        steps = _auto_steps(config, source, config.omega0 if omega0 is None else omega0)
        return evolve_schrodinger(source, psi0, config.total_time, steps, target=target, max_samples=max_samples)
    nominal = SystemLayout(config.n_atoms, config.cavity_coupling, config.fiber_coupling)
    perturbed = SystemLayout(
        config.n_atoms,
        config.cavity_coupling * coupling_factors[0],
        config.fiber_coupling * coupling_factors[1],
    )
    schedules = physical_drive_schedules(pulses, nominal)
    source = drive_source(perturbed, schedules)
    psi0 = initial_state(perturbed)
    target = w_target(perturbed)
    steps = _auto_steps(config, source, max(perturbed.cavity_coupling, perturbed.fiber_coupling))
    return evolve_schrodinger(source, psi0, config.total_time, steps, target=target, max_samples=max_samples)


def _open_run(config: ExperimentConfig, max_samples: int = 1000) -> Trajectory:
    """One lossy run on the vacuum-extended basis returning the trajectory."""
    layout = SystemLayout(config.n_atoms, config.cavity_coupling, config.fiber_coupling)
    pulses = resolve_pulses(config)
    schedules = physical_drive_schedules(pulses, layout)
    source = drive_source(layout, schedules, include_vacuum=True)
    rates = DecoherenceRates(gamma=config.gamma, kappa=config.kappa, gamma_rydberg=config.gamma_rydberg)
    channels = collapse_channels(layout, rates)
    psi0 = initial_state(layout, include_vacuum=True)
    rho0 = np.outer(psi0, psi0.conj())
    target = w_target(layout, include_vacuum=True)
    steps = _auto_steps(
        config,
        source,
        max(layout.cavity_coupling, layout.fiber_coupling),
        extra=max(config.gamma, config.kappa),
    )
    return evolve_lindblad(source, channels, rho0, config.total_time, steps, target=target, max_samples=max_samples)


# ---------------------------------------------------------------------------
# scan cells (module level so process pools can pickle them)


def _amplitude_cell(payload) -> tuple[int, float, str]:
    index, config, amplitude = payload
    try:
        return index, _closed_run(config, omega0=amplitude, max_samples=1).final_fidelity, ""
    except Exception as exc:  # cell failures must not kill the scan
        return index, float("nan"), f"{type(exc).__name__}: {exc}"


def _rate_cell(payload) -> tuple[int, float, str]:
    index, config, kappa_ratio, gamma_ratio = payload
    try:
        coupling = config.cavity_coupling
        cfg = replace(config, kappa=kappa_ratio * coupling, gamma=gamma_ratio * coupling)
        return index, _open_run(cfg, max_samples=1).final_fidelity, ""
    except Exception as exc:
        return index, float("nan"), f"{type(exc).__name__}: {exc}"


def _robustness_cell(payload) -> tuple[int, float, str]:
    index, config, surface, delta_first, delta_second = payload
    try:
        if surface == "pulse_amplitudes":
            pulses = _scaled_pulse_pair(resolve_pulses(config), 1.0 + delta_first, 1.0 + delta_second)
            traj = _closed_run(config, pulses=pulses, max_samples=1)
        else:
            traj = _closed_run(
                config, coupling_factors=(1.0 + delta_first, 1.0 + delta_second), max_samples=1
            )
        return index, traj.final_fidelity, ""
    except Exception as exc:
        return index, float("nan"), f"{type(exc).__name__}: {exc}"


def _parallel_cells(worker, payloads: list, n_workers: int) -> list[tuple[int, float, str]]:
    """Run scan cells, serially or in a process pool; order follows payloads."""
    if n_workers <= 1 or len(payloads) <= 1:
        results = [worker(p) for p in payloads]
    else:
        chunk = max(1, len(payloads) // (4 * n_workers))
        with ProcessPoolExecutor(max_workers=min(n_workers, len(payloads))) as pool:
            results = list(pool.map(worker, payloads, chunksize=chunk))
    ordered: list = [None] * len(payloads)
    for index, value, note in results:
        ordered[index] = (index, value, note)
    if any(entry is None for entry in ordered):
        raise RuntimeError("scan produced a gap in the cell index range")
    return ordered


# ---------------------------------------------------------------------------
# CSV output


_ECHO_EXCLUDE = {"workers", "output", "figure"}


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return format(value, ".12g")


def _echo_lines(config: ExperimentConfig, experiment: str, extras: dict | None = None) -> list[str]:
    entries: dict[str, object] = {
        f.name: getattr(config, f.name) for f in fields(config) if f.name not in _ECHO_EXCLUDE
    }
    if extras:
        entries.update(extras)
    lines = [f"# superw {experiment}"]
    for key in sorted(entries):
        value = entries[key]
        if value is None:
            text = "none"
        elif isinstance(value, tuple):
            text = ",".join(_fmt(v) for v in value)
        else:
            text = _fmt(value)
        lines.append(f"# {key} = {text}")
    return lines


def write_csv(
    path: str | Path,
    echo: Sequence[str],
    columns: Sequence[str],
    rows: Iterable[Sequence],
    row_comments: dict[int, str] | None = None,
) -> Path:
    """Write a deterministic CSV: comment header, column row, data rows.

    row_comments maps a data-row index to a diagnostic emitted as a comment
    line directly underneath that row.
    """
    path = Path(path)
    if path.parent != Path("."):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in echo:
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for i, row in enumerate(rows):
            fh.write(",".join(_fmt(cell) for cell in row) + "\n")
            if row_comments and i in row_comments:
                fh.write(f"# {row_comments[i]}\n")
    return path


def _output_paths(config: ExperimentConfig, default_name: str) -> tuple[Path, Path | None]:
    csv_path = Path(config.output) if config.output else Path(default_name)
    figure_path = csv_path.with_suffix(".png") if config.figure else None
    return csv_path, figure_path


def _maybe_plot(figure_path: Path | None, plot, data: dict) -> Path | None:
    if figure_path is None:
        return None
    plot(data, figure_path)
    return figure_path


# ---------------------------------------------------------------------------
# experiments


def run_angles(config: ExperimentConfig) -> ExperimentResult:
    """Mixing-angle schedules for each requested drive amplitude.

    The first angle is amplitude-independent, so a single column covers it;
    the second angle gets one column per amplitude.
    """
    grid = np.linspace(0.0, config.total_time, config.samples)
    theta2_by_amp: dict[float, np.ndarray] = {}
    theta1 = None
    for amp in config.angle_amplitudes:
        params = StirapParams(
            omega0=amp, vartheta=config.vartheta, t0=config.t0, tc=config.tc, total_time=config.total_time
        )
        schedule = compute_angles(stirap_pulses(params), grid=grid)
        theta2_by_amp[amp] = schedule.theta2
        if theta1 is None:
            theta1 = schedule.theta1
    data = {"grid": grid, "theta1": theta1, "theta2": theta2_by_amp}

    csv_path, figure_path = _output_paths(config, "angles.csv")
    columns = ["t", "theta1"] + [f"theta2_omega0_{_fmt(a)}" for a in config.angle_amplitudes]
    rows = [
        [grid[i], theta1[i]] + [theta2_by_amp[a][i] for a in config.angle_amplitudes]
        for i in range(len(grid))
    ]
    write_csv(csv_path, _echo_lines(config, "angles"), columns, rows)
    from . import plotting

    figure_path = _maybe_plot(figure_path, plotting.plot_angles, data)
    return ExperimentResult(csv_path, figure_path, data)


def run_amplitude_scan(config: ExperimentConfig) -> ExperimentResult:
    """Final fidelity versus drive amplitude for the configured pulse family."""
    amplitudes = np.linspace(config.amplitude_min, config.amplitude_max, config.amplitude_count)
    payloads = [(i, config, float(a)) for i, a in enumerate(amplitudes)]
    cells = _parallel_cells(_amplitude_cell, payloads, resolve_workers(config))
    fidelities = np.array([value for _, value, _ in cells])
    comments = {i: f"cell omega0={_fmt(amplitudes[i])} failed: {note}" for i, _, note in cells if note}
    data = {"omega0": amplitudes, "fidelity": fidelities, "failures": comments}

    csv_path, figure_path = _output_paths(config, "amplitude_scan.csv")
    rows = [[amplitudes[i], fidelities[i]] for i in range(len(amplitudes))]
    write_csv(csv_path, _echo_lines(config, "amplitude-scan"), ["omega0", "fidelity"], rows, comments)
    from . import plotting

    figure_path = _maybe_plot(figure_path, plotting.plot_amplitude_scan, data)
    return ExperimentResult(csv_path, figure_path, data)


def run_time_comparison(config: ExperimentConfig) -> ExperimentResult:
    """Shortcut against plain-adiabatic transfer, fast and slow, on one clock.

    All three runs use the full network; the slow reference rescales drive
    and couplings so the same physical setup simply runs longer.
    """
    fast_corrected = replace(config, pulses="corrected", model="full")
    fast_plain = replace(config, pulses="stirap", model="full")
    stretch = config.slow_drive_area / (config.omega0 * config.total_time)
    slow_plain = replace(
        config,
        pulses="stirap",
        model="full",
        omega0=config.omega0 * stretch,
        cavity_coupling=config.cavity_coupling * stretch,
        fiber_coupling=config.fiber_coupling * stretch,
    )

    fraction = np.linspace(0.0, 1.0, config.samples)

    def resample(cfg: ExperimentConfig) -> np.ndarray:
        traj = _closed_run(cfg, max_samples=min(4000, config.samples * 4))
        return np.interp(fraction, traj.grid / cfg.total_time, traj.fidelity)

    f_super = resample(fast_corrected)
    f_plain = resample(fast_plain)
    f_slow = resample(slow_plain)
    data = {
        "fraction": fraction,
        "fidelity_superadiabatic": f_super,
        "fidelity_adiabatic": f_plain,
        "fidelity_adiabatic_slow": f_slow,
        "stretch": stretch,
    }

    csv_path, figure_path = _output_paths(config, "time_comparison.csv")
    columns = ["time_fraction", "fidelity_superadiabatic", "fidelity_adiabatic", "fidelity_adiabatic_slow"]
    rows = [[fraction[i], f_super[i], f_plain[i], f_slow[i]] for i in range(len(fraction))]
    extras = {"slow_stretch_factor": stretch}
    write_csv(csv_path, _echo_lines(config, "evolve", extras), columns, rows)
    from . import plotting

    figure_path = _maybe_plot(figure_path, plotting.plot_time_comparison, data)
    return ExperimentResult(csv_path, figure_path, data)


def run_single_evolution(config: ExperimentConfig) -> ExperimentResult:
    """One trajectory with per-state populations; lossy when any rate is set."""
    open_system = config.gamma > 0 or config.kappa > 0 or (config.gamma_rydberg or 0) > 0
    if config.model == "effective":
        traj = _closed_run(config, max_samples=config.samples)
        labels = ["start", "dark", "bright"]
    elif open_system:
        traj = _open_run(config, max_samples=config.samples)
        layout = SystemLayout(config.n_atoms, config.cavity_coupling, config.fiber_coupling)
        labels = basis_labels(build_basis(layout, include_vacuum=True))
    else:
        traj = _closed_run(config, max_samples=config.samples)
        layout = SystemLayout(config.n_atoms, config.cavity_coupling, config.fiber_coupling)
        labels = basis_labels(build_basis(layout))
    data = {"trajectory": traj, "labels": labels}

    csv_path, figure_path = _output_paths(config, "trajectory.csv")
    columns = ["t", "fidelity"] + labels
    rows = [
        [traj.grid[i], traj.fidelity[i]] + list(traj.populations[i]) for i in range(len(traj.grid))
    ]
    extras = {"diagnostic_" + k: v for k, v in sorted(traj.diagnostics.items())}
    write_csv(csv_path, _echo_lines(config, "evolve --single", extras), columns, rows)
    from . import plotting

    figure_path = _maybe_plot(figure_path, plotting.plot_trajectory, data)
    return ExperimentResult(csv_path, figure_path, data)


def run_decoherence_map(config: ExperimentConfig) -> ExperimentResult:
    """Final fidelity over a grid of photon-loss and emission rate ratios."""
    ratios = np.linspace(0.0, config.rate_ratio_max, config.rate_grid)
    payloads = []
    for i, kappa_ratio in enumerate(ratios):
        for j, gamma_ratio in enumerate(ratios):
            payloads.append((i * len(ratios) + j, config, float(kappa_ratio), float(gamma_ratio)))
    cells = _parallel_cells(_rate_cell, payloads, resolve_workers(config))
    grid = np.array([value for _, value, _ in cells]).reshape(len(ratios), len(ratios))
    comments = {}
    for index, _, note in cells:
        if note:
            i, j = divmod(index, len(ratios))
            comments[index] = f"cell kappa_ratio={_fmt(ratios[i])} gamma_ratio={_fmt(ratios[j])} failed: {note}"
    data = {"ratios": ratios, "fidelity": grid, "failures": comments}

    csv_path, figure_path = _output_paths(config, "decoherence_map.csv")
    rows = []
    for i in range(len(ratios)):
        for j in range(len(ratios)):
            rows.append([ratios[i], ratios[j], grid[i, j]])
    write_csv(
        csv_path,
        _echo_lines(config, "decoherence-map"),
        ["kappa_ratio", "gamma_ratio", "fidelity"],
        rows,
        comments,
    )
    from . import plotting

    figure_path = _maybe_plot(figure_path, plotting.plot_decoherence_map, data)
    return ExperimentResult(csv_path, figure_path, data)


def run_robustness(config: ExperimentConfig) -> ExperimentResult:
    """Fidelity surfaces under multiplicative pulse and coupling errors."""
    deltas = np.linspace(-config.delta_max, config.delta_max, config.delta_grid)
    surfaces = ("pulse_amplitudes", "network_couplings")
    payloads = []
    for s, surface in enumerate(surfaces):
        for i, da in enumerate(deltas):
            for j, db in enumerate(deltas):
                index = (s * len(deltas) + i) * len(deltas) + j
                payloads.append((index, config, surface, float(da), float(db)))
    cells = _parallel_cells(_robustness_cell, payloads, resolve_workers(config))
    values = np.array([value for _, value, _ in cells]).reshape(len(surfaces), len(deltas), len(deltas))
    comments = {}
    for index, _, note in cells:
        if note:
            s, rest = divmod(index, len(deltas) ** 2)
            i, j = divmod(rest, len(deltas))
            comments[index] = (
                f"cell surface={surfaces[s]} delta_first={_fmt(deltas[i])} "
                f"delta_second={_fmt(deltas[j])} failed: {note}"
            )
    data = {"deltas": deltas, "surfaces": surfaces, "fidelity": values, "failures": comments}

    csv_path, figure_path = _output_paths(config, "robustness.csv")
    rows = []
    for s, surface in enumerate(surfaces):
        for i in range(len(deltas)):
            for j in range(len(deltas)):
                rows.append([surface, deltas[i], deltas[j], values[s, i, j]])
    write_csv(
        csv_path,
        _echo_lines(config, "robustness"),
        ["surface", "delta_first", "delta_second", "fidelity"],
        rows,
        comments,
    )
    from . import plotting

    figure_path = _maybe_plot(figure_path, plotting.plot_robustness, data)
    return ExperimentResult(csv_path, figure_path, data)


def run_fit_pulses(config: ExperimentConfig, save_pulses: str | Path | None = None) -> ExperimentResult:
    """Refit the corrected pulses as Gaussian sums and score every variant.

    Reports the fit quality, the end-to-end fidelity of the refit pulses,
    and the built-in fitted preset under both signs of its second pulse
    (the sign convention is settled empirically, not assumed).
    """
    base = resolve_pulses(replace(config, pulses="corrected"))
    grid = np.linspace(0.0, config.total_time, max(config.samples, 3 * config.fit_terms))
    samples1 = base.omega1(grid)
    samples2 = base.omega2(grid)
    fit1, report1 = fit_gaussian_sum(grid, samples1, n_terms=config.fit_terms)
    fit2, report2 = fit_gaussian_sum(grid, samples2, n_terms=config.fit_terms)
    refit = gaussian_sum_pulses(fit1, fit2, total_time=config.total_time)

    full = replace(config, model="full")
    fid_refit = _closed_run(full, pulses=refit, max_samples=1).final_fidelity
    fid_preset = _closed_run(full, pulses=paper_fit_pulses(config.total_time), max_samples=1).final_fidelity
    fid_flipped = _closed_run(
        full, pulses=paper_fit_pulses(config.total_time, flip_second_sign=True), max_samples=1
    ).final_fidelity

    if save_pulses is not None:
        save_pulse_file(save_pulses, (fit1, fit2), corrected=True)

    peaks = (float(np.max(np.abs(samples1))), float(np.max(np.abs(samples2))))
    data = {
        "grid": grid,
        "samples": (samples1, samples2),
        "fits": (fit1, fit2),
        "reports": (report1, report2),
        "peaks": peaks,
        "fidelity_refit": fid_refit,
        "fidelity_paper_fit": fid_preset,
        "fidelity_paper_fit_flipped": fid_flipped,
    }

    rows: list[list] = []
    for label, fit, report, peak in (
        ("pulse1", fit1, report1, peaks[0]),
        ("pulse2", fit2, report2, peaks[1]),
    ):
        for t, (c, m, n) in enumerate(fit.terms, start=1):
            rows.append(["fit_amplitude", label, str(t), c])
            rows.append(["fit_center", label, str(t), m])
            rows.append(["fit_width", label, str(t), n])
        rows.append(["rms_residual", label, "", report.rms_residual])
        rows.append(["max_residual", label, "", report.max_residual])
        rows.append(["peak_amplitude", label, "", peak])
        rows.append(["rms_over_peak", label, "", report.rms_residual / peak])
        rows.append(["converged", label, "", int(report.converged)])
    rows.append(["fidelity", "refit", "", fid_refit])
    rows.append(["fidelity", "paper_fit", "", fid_preset])
    rows.append(["fidelity", "paper_fit_flipped", "", fid_flipped])

    csv_path, figure_path = _output_paths(config, "fit_pulses.csv")
    write_csv(csv_path, _echo_lines(config, "fit-pulses"), ["quantity", "pulse", "term", "value"], rows)
    from . import plotting

    figure_path = _maybe_plot(figure_path, plotting.plot_fit, data)
    return ExperimentResult(csv_path, figure_path, data)


def run_n_scaling(config: ExperimentConfig) -> ExperimentResult:
    """Frame scales and reduced-model fidelity across atom counts.

    The second frame scale is reported twice: the numeric projection and the
    printed closed form it disagrees with, plus an explicit mismatch flag.
    """
    counts = list(range(config.n_min, config.n_max + 1))
    rows = []
    table: dict[str, list] = {k: [] for k in ("n", "s1", "s2_numeric", "s2_printed", "mismatch", "vartheta", "fidelity")}
    for n in counts:
        layout = SystemLayout(n, config.cavity_coupling, config.fiber_coupling)
        s1, s2 = effective_frame_scales(layout)
        s2_printed = 1.0 / math.sqrt(n**2 - 1)
        mismatch = int(abs(s2 - s2_printed) > 1e-10)
        vartheta_n = -math.atan(math.sqrt(n - 1))
        cfg = replace(config, n_atoms=n, model="effective", pulses="corrected", vartheta=vartheta_n)
        fid = _closed_run(cfg, max_samples=1).final_fidelity
        rows.append([n, s1, s2, s2_printed, mismatch, vartheta_n, fid])
        for key, value in zip(table, [n, s1, s2, s2_printed, mismatch, vartheta_n, fid]):
            table[key].append(value)
    data = {key: np.array(value) for key, value in table.items()}

    csv_path, figure_path = _output_paths(config, "n_scaling.csv")
    columns = ["n_atoms", "s1", "s2_numeric", "s2_printed", "s2_mismatch", "vartheta", "fidelity_effective"]
    write_csv(csv_path, _echo_lines(config, "n-scaling"), columns, rows)
    from . import plotting

    figure_path = _maybe_plot(figure_path, plotting.plot_n_scaling, data)
    return ExperimentResult(csv_path, figure_path, data)
