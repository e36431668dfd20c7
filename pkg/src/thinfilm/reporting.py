"""Delimited output and figure rendering for the command-line reports.

Every command writes CSV/JSON first (full double precision, so downstream
tolerance checks are never masked by formatting); figure files are rendered
next to them from the same data.  Matplotlib is imported lazily with the Agg
backend so library users never touch a display.
"""

from __future__ import annotations

import csv
import json
import math

import numpy as np

from .analysis import RateReport
from .evolution import Trajectory
from .grid import PeriodicGridFunction, write_grid_csv

__all__ = [
    "fmt",
    "write_json",
    "write_series_csv",
    "write_snapshots",
    "write_rates_csv",
    "write_mass_tau_csv",
    "render_profile",
    "render_series",
    "render_snapshots",
    "render_rates",
    "render_mass_tau",
]


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj)!r}")


def write_series_csv(path, traj: Trajectory) -> None:
    """Per-step diagnostics: t,energy,entropy,mass,dt (dt = 0 for the initial row)."""
    dts = {t: dt for (t, dt, _) in traj.step_log}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "energy", "entropy", "mass", "dt"])
        for i, t in enumerate(traj.times):
            writer.writerow(
                [
                    fmt(t),
                    fmt(traj.energies[i]),
                    fmt(traj.entropies[i]),
                    fmt(traj.masses[i]),
                    fmt(dts.get(t, 0.0)),
                ]
            )


def write_snapshots(out_dir, traj: Trajectory, times) -> list:
    """Write snapshot_<k>.csv at the requested times; returns the written paths."""
    paths = []
    for k, t in enumerate(times):
        path = out_dir / f"snapshot_{k}.csv"
        write_grid_csv(path, traj.sample(float(t)))
        paths.append(path)
    return paths


def write_rates_csv(path, report: RateReport) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "distance_l2", "distance_h1", "bound"])
        for i, t in enumerate(report.times):
            writer.writerow(
                [
                    fmt(t),
                    fmt(report.distances_l2[i]),
                    fmt(report.distances_h1[i]),
                    fmt(report.bound_curve[i]),
                ]
            )


def write_mass_tau_csv(path, curve) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau", "mass"])
        for tau, mass in curve:
            writer.writerow([fmt(tau), fmt(mass)])


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_profile(path, f: PeriodicGridFunction, title: str = "") -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(f.grid.nodes, f.values, lw=1.5)
    ax.set_xlabel(r"$\theta$")
    ax.set_ylabel("u")
    ax.axhline(0.0, color="0.7", lw=0.5)
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_series(path, traj: Trajectory) -> None:
    plt = _plt()
    fig, axes = plt.subplots(3, 1, figsize=(6, 8), sharex=True)
    t = np.asarray(traj.times)
    finite_s = np.asarray([s if math.isfinite(s) else np.nan for s in traj.entropies])
    axes[0].plot(t, traj.energies)
    axes[0].set_ylabel("energy")
    axes[1].plot(t, finite_s)
    axes[1].set_ylabel("entropy")
    axes[2].plot(t, traj.masses)
    axes[2].set_ylabel("mass")
    axes[2].set_xlabel("t")
    if t[-1] > 0 and t[-1] / max(t[1] if len(t) > 1 else 1.0, 1e-12) > 1e3:
        for ax in axes:
            ax.set_xscale("symlog", linthresh=max(t[1] if len(t) > 1 else 1e-6, 1e-12))
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_snapshots(path, traj: Trajectory, times) -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    for t in times:
        f = traj.sample(float(t))
        ax.plot(f.grid.nodes, f.values, label=f"t={t:g}")
    ax.set_xlabel(r"$\theta$")
    ax.set_ylabel("u")
    ax.legend(fontsize=8)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_rates(path, report: RateReport) -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    mask = report.times > 0
    ax.loglog(report.times[mask], report.distances_l2[mask], label=r"$\|u-u^*\|_2$")
    ax.loglog(report.times[mask], report.distances_h1[mask], label=r"$\|u-u^*\|_{H^1}$")
    ax.loglog(
        report.times[mask],
        report.bound_curve[mask],
        "--",
        label=f"bound ({report.bound_kind.value})",
    )
    ax.set_xlabel("t")
    ax.set_ylabel("distance")
    ax.legend(fontsize=8)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_mass_tau(path, curves: dict) -> None:
    """curves: alpha -> list of (tau, mass) pairs."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    for alpha, curve in curves.items():
        arr = np.asarray(curve)
        ax.plot(arr[:, 0], arr[:, 1], label=rf"$\alpha$={alpha:g}")
    ax.set_xlabel(r"$\tau$")
    ax.set_ylabel("mass")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
