"""The `superw` command: one subcommand per experiment dataset.

Every subcommand takes --config plus overriding flags; exit code 0 means
success, 2 a configuration problem, 3 a numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigurationError, IntegrationError
from .experiments import (
    ExperimentConfig,
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

__all__ = ["main", "build_parser"]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="config file (key = value sections)")
    parser.add_argument("--output", metavar="PATH", help="CSV output path (figure lands next to it)")
    parser.add_argument("--workers", type=int, help="parallel scan workers (overrides SUPERW_WORKERS)")
    parser.add_argument("--no-figure", action="store_true", help="skip the PNG")
    parser.add_argument("--n-atoms", type=int, dest="n_atoms", help="atom count")
    parser.add_argument("--coupling", type=float, help="set cavity and fiber couplings together (1/T)")
    parser.add_argument("--cavity-coupling", type=float, dest="cavity_coupling", help="cavity coupling (1/T)")
    parser.add_argument("--fiber-coupling", type=float, dest="fiber_coupling", help="fiber coupling (1/T)")
    parser.add_argument("--omega0", type=float, help="drive amplitude (1/T)")
    parser.add_argument("--vartheta", type=float, help="final mixing angle (rad)")
    parser.add_argument("--t0", type=float, help="pulse offset (fraction of T)")
    parser.add_argument("--tc", type=float, help="pulse width (fraction of T)")
    parser.add_argument("--total-time", type=float, dest="total_time", help="run length T")
    parser.add_argument(
        "--pulses", help="pulse variant: stirap | paper_fit | corrected | file:<path>"
    )
    parser.add_argument("--model", choices=("full", "effective"), help="state space")
    parser.add_argument("--steps", type=int, help="integrator steps (0 = automatic)")
    parser.add_argument("--samples", type=int, help="rows in time-series output")
    parser.add_argument("--gamma", type=float, help="emission rate (1/T)")
    parser.add_argument("--kappa", type=float, help="photon loss rate (1/T)")
    parser.add_argument("--gamma-rydberg", type=float, dest="gamma_rydberg", help="explicit top-level decay (1/T)")


_OVERRIDE_FIELDS = (
    "output",
    "workers",
    "n_atoms",
    "cavity_coupling",
    "fiber_coupling",
    "omega0",
    "vartheta",
    "t0",
    "tc",
    "total_time",
    "pulses",
    "model",
    "steps",
    "samples",
    "gamma",
    "kappa",
    "gamma_rydberg",
    # subcommand extras share config field names directly
    "amplitude_min",
    "amplitude_max",
    "amplitude_count",
    "rate_ratio_max",
    "rate_grid",
    "delta_max",
    "delta_grid",
    "fit_terms",
    "n_min",
    "n_max",
    "slow_drive_area",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="superw",
        description="Superadiabatic preparation of the shared-excitation W state on a star network.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("angles", help="mixing-angle schedules per drive amplitude")
    _add_common(p)
    p.add_argument("--amplitudes", help="comma-separated drive amplitudes (1/T)")

    p = sub.add_parser("amplitude-scan", help="final fidelity versus drive amplitude")
    _add_common(p)
    p.add_argument("--amplitude-min", type=float, dest="amplitude_min", help="scan start (1/T)")
    p.add_argument("--amplitude-max", type=float, dest="amplitude_max", help="scan end (1/T)")
    p.add_argument("--amplitude-count", type=int, dest="amplitude_count", help="scan points")

    p = sub.add_parser("evolve", help="speed comparison, or one trajectory with --single")
    _add_common(p)
    p.add_argument("--single", action="store_true", help="one trajectory with per-state populations")
    p.add_argument(
        "--slow-drive-area", type=float, dest="slow_drive_area", help="drive area of the slow reference run"
    )

    p = sub.add_parser("decoherence-map", help="fidelity over photon-loss and emission rate ratios")
    _add_common(p)
    p.add_argument("--rate-ratio-max", type=float, dest="rate_ratio_max", help="largest rate / coupling ratio")
    p.add_argument("--rate-grid", type=int, dest="rate_grid", help="grid points per axis")

    p = sub.add_parser("robustness", help="fidelity under pulse and coupling errors")
    _add_common(p)
    p.add_argument("--delta-max", type=float, dest="delta_max", help="largest relative error")
    p.add_argument("--delta-grid", type=int, dest="delta_grid", help="grid points per axis")

    p = sub.add_parser("fit-pulses", help="Gaussian refit of the corrected pulses")
    _add_common(p)
    p.add_argument("--fit-terms", type=int, dest="fit_terms", help="Gaussian terms per pulse")
    p.add_argument("--save-pulses", metavar="PATH", help="also save the fitted pair as a pulse file")

    p = sub.add_parser("n-scaling", help="frame scales and reduced-model fidelity per atom count")
    _add_common(p)
    p.add_argument("--n-min", type=int, dest="n_min", help="smallest atom count")
    p.add_argument("--n-max", type=int, dest="n_max", help="largest atom count")

    return parser


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    import dataclasses

    config = load_config(args.config) if args.config else ExperimentConfig()
    overrides: dict = {}
    if getattr(args, "coupling", None) is not None:
        overrides["cavity_coupling"] = args.coupling
        overrides["fiber_coupling"] = args.coupling
    for name in _OVERRIDE_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "amplitudes", None) is not None:
        try:
            overrides["angle_amplitudes"] = tuple(
                float(part) for part in args.amplitudes.split(",") if part.strip()
            )
        except ValueError as exc:
            raise ConfigurationError(f"bad --amplitudes value: {args.amplitudes!r}") from exc
    if args.no_figure:
        overrides["figure"] = False
    return dataclasses.replace(config, **overrides)


def _dispatch(args: argparse.Namespace, config: ExperimentConfig):
    command = args.command
    if command == "angles":
        return run_angles(config)
    if command == "amplitude-scan":
        return run_amplitude_scan(config)
    if command == "evolve":
        return run_single_evolution(config) if args.single else run_time_comparison(config)
    if command == "decoherence-map":
        return run_decoherence_map(config)
    if command == "robustness":
        return run_robustness(config)
    if command == "fit-pulses":
        return run_fit_pulses(config, save_pulses=args.save_pulses)
    if command == "n-scaling":
        return run_n_scaling(config)
    raise ConfigurationError(f"unknown command {command!r}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _resolve_config(args)
        result = _dispatch(args, config)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    if result.csv_path is not None:
        print(f"wrote {result.csv_path}")
    if result.figure_path is not None:
        print(f"wrote {result.figure_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
