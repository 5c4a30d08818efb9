"""Figure rendering: every experiment saves a PNG next to its CSV."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "plot_angles",
    "plot_amplitude_scan",
    "plot_time_comparison",
    "plot_trajectory",
    "plot_decoherence_map",
    "plot_robustness",
    "plot_fit",
    "plot_n_scaling",
]

_DPI = 150


def _save(fig, path: Path) -> None:
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)


def plot_angles(data: dict, path: Path) -> None:
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6.4, 6.4), sharex=True)
    grid = data["grid"]
    top.plot(grid, data["theta1"], color="tab:blue")
    top.set_ylabel("first mixing angle (rad)")
    top.grid(alpha=0.3)
    for amp, theta2 in data["theta2"].items():
        bottom.plot(grid, theta2, label=f"amplitude {amp:g}/T")
    bottom.set_xlabel("t / T")
    bottom.set_ylabel("second mixing angle (rad)")
    bottom.grid(alpha=0.3)
    bottom.legend(fontsize=8)
    _save(fig, path)


def plot_amplitude_scan(data: dict, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(data["omega0"], data["fidelity"], color="tab:blue")
    finite = np.isfinite(data["fidelity"])
    if finite.any():
        best = int(np.nanargmax(np.where(finite, data["fidelity"], -np.inf)))
        ax.plot(
            data["omega0"][best],
            data["fidelity"][best],
            "o",
            color="tab:red",
            label=f"best {data['fidelity'][best]:.4f} at {data['omega0'][best]:.3g}/T",
        )
        ax.legend(fontsize=8)
    ax.set_xlabel("drive amplitude (1/T)")
    ax.set_ylabel("final fidelity")
    ax.grid(alpha=0.3)
    _save(fig, path)


def plot_time_comparison(data: dict, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(data["fraction"], data["fidelity_superadiabatic"], label="shortcut, fast clock")
    ax.plot(data["fraction"], data["fidelity_adiabatic"], label="plain, fast clock", linestyle="--")
    ax.plot(
        data["fraction"],
        data["fidelity_adiabatic_slow"],
        label=f"plain, {data['stretch']:.3g}x slower clock",
        linestyle=":",
    )
    ax.set_xlabel("t / T")
    ax.set_ylabel("fidelity")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_trajectory(data: dict, path: Path) -> None:
    traj = data["trajectory"]
    labels = data["labels"]
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6.4, 6.4), sharex=True)
    top.plot(traj.grid, traj.fidelity, color="tab:blue")
    top.set_ylabel("fidelity")
    top.grid(alpha=0.3)
    for column, label in enumerate(labels):
        bottom.plot(traj.grid, traj.populations[:, column], label=label, linewidth=0.9)
    bottom.set_xlabel("t")
    bottom.set_ylabel("population")
    bottom.grid(alpha=0.3)
    bottom.legend(fontsize=6, ncol=4)
    _save(fig, path)


def plot_decoherence_map(data: dict, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5.6, 4.4))
    ratios = data["ratios"]
    mesh = ax.pcolormesh(ratios, ratios, data["fidelity"], shading="nearest", cmap="viridis")
    ax.set_xlabel("emission / coupling")
    ax.set_ylabel("photon loss / coupling")
    fig.colorbar(mesh, ax=ax, label="final fidelity")
    _save(fig, path)


def plot_robustness(data: dict, path: Path) -> None:
    deltas = data["deltas"]
    fig, axes = plt.subplots(1, 2, figsize=(9.6, 4.0))
    titles = {
        "pulse_amplitudes": "pulse amplitude errors",
        "network_couplings": "coupling errors",
    }
    for ax, surface, values in zip(axes, data["surfaces"], data["fidelity"]):
        mesh = ax.pcolormesh(deltas, deltas, values, shading="nearest", cmap="viridis")
        ax.set_title(titles.get(surface, surface), fontsize=9)
        ax.set_xlabel("second relative error")
        ax.set_ylabel("first relative error")
        fig.colorbar(mesh, ax=ax)
    _save(fig, path)


def plot_fit(data: dict, path: Path) -> None:
    grid = data["grid"]
    fig, axes = plt.subplots(1, 2, figsize=(9.6, 4.0), sharex=True)
    for ax, samples, fit, report, name in zip(
        axes, data["samples"], data["fits"], data["reports"], ("first pulse", "second pulse")
    ):
        ax.plot(grid, samples, label="corrected", color="tab:blue")
        ax.plot(grid, fit.value(grid), label="fit", color="tab:orange", linestyle="--")
        ax.set_title(f"{name} (rms {report.rms_residual:.3g})", fontsize=9)
        ax.set_xlabel("t / T")
        ax.set_ylabel("amplitude (1/T)")
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
    _save(fig, path)


def plot_n_scaling(data: dict, path: Path) -> None:
    fig, (left, right) = plt.subplots(1, 2, figsize=(9.6, 4.0))
    left.plot(data["n"], data["fidelity"], "o-", color="tab:blue")
    left.set_xlabel("atom count")
    left.set_ylabel("reduced-model fidelity")
    left.grid(alpha=0.3)
    right.plot(data["n"], data["s2_numeric"], "o-", label="numeric scale")
    right.plot(data["n"], data["s2_printed"], "s--", label="printed closed form")
    right.set_xlabel("atom count")
    right.set_ylabel("second frame scale")
    right.grid(alpha=0.3)
    right.legend(fontsize=8)
    _save(fig, path)
