"""Command-line interface: steady, evolve, verify, sweep, and mass-tau.

Every command writes CSV/JSON datasets into the output directory (default
from THINFILM_OUTPUT_DIR, falling back to ./out) and, unless --no-figures is
given, renders matplotlib figures next to them.  A flat key=value config
file can stand in for any flag; explicit flags win.  Output is deterministic
for a fixed (config, seed).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import reporting
from .analysis import mass_tau_curve, rate_report
from .errors import ThinFilmError
from .evolution import EvolutionConfig, evolve
from .functionals import energy
from .grid import PeriodicGrid, grid_function, quadrature, read_grid_csv, write_grid_csv
from .steady_state import (
    ModelParams,
    Regime,
    contact_angle,
    euler_lagrange_residual,
    evaluate_on_grid,
    minimizer,
    steady_profile,
    steady_state_to_json,
)
from .verify import run_all_groups

DEFAULT_SNAPSHOT_DECADES = 5


def _output_dir(args) -> Path:
    out = args.out or os.environ.get("THINFILM_OUTPUT_DIR") or "out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_config_file(path: str) -> dict:
    """Flat key=value file; keys mirror the long flag names without dashes."""
    values = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SystemExit(f"config line {line!r} is not key=value")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _expand_config_argv(argv: list) -> list:
    """Splice config-file entries into argv right after the subcommand.

    Explicit command-line flags appear later and therefore win (argparse
    keeps the last occurrence).
    """
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    if path is None or not argv:
        return argv
    injected = []
    for key, value in _load_config_file(path).items():
        flag = "--" + key.replace("_", "-")
        if key == "figures":
            injected.append("--figures" if value.lower() in ("1", "true", "yes", "on")
                            else "--no-figures")
        else:
            injected.extend([flag, value])
    return [argv[0], *injected, *argv[1:]]


def _parse_float_list(text: str) -> list:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _model(args) -> ModelParams:
    return ModelParams(alpha=args.alpha, n=args.n, omega=args.omega, mass=args.mass)


def _initial_profile(spec: str, grid: PeriodicGrid, params: ModelParams):
    """Decode the --u0 specifier into a grid function.

    const:<c>, steady, steady+perturb:<amplitude>, or file:<path>.
    """
    if spec.startswith("const:"):
        return grid_function(grid, float(spec.split(":", 1)[1]))
    if spec == "steady" or spec.startswith("steady+perturb"):
        state = minimizer(params)
        vals = np.asarray(steady_profile(state, grid.nodes), dtype=float)
        if spec.startswith("steady+perturb"):
            amplitude = float(spec.split(":", 1)[1])
            vals = vals + amplitude * np.cos(grid.nodes)
            vals = np.maximum(vals, 0.0)
            f = grid_function(grid, vals)
            vals = vals * (params.mass / quadrature(f))
        return grid_function(grid, np.maximum(vals, 0.0))
    if spec.startswith("file:"):
        return read_grid_csv(spec.split(":", 1)[1])
    raise SystemExit(f"unknown u0 specifier {spec!r}")


def _steady_payload(state, grid: PeriodicGrid, params: ModelParams) -> dict:
    residual = euler_lagrange_residual(state, grid)
    sampled = evaluate_on_grid(state, grid)
    return {
        "regime": state.regime.value,
        "tau": state.tau,
        "lagrange": state.lagrange,
        "euler_lagrange_residual": residual,
        "contact_angle": contact_angle(state),
        "mass_error_relative": abs(quadrature(sampled) - params.mass) / params.mass,
        "grid_points": grid.n_points,
    }


def cmd_steady(args) -> int:
    out = _output_dir(args)
    params = _model(args)
    state = minimizer(params)
    grid = PeriodicGrid(args.grid)
    sampled = evaluate_on_grid(state, grid)
    write_grid_csv(out / "profile.csv", sampled)
    (out / "steady_state.json").write_text(steady_state_to_json(state) + "\n")
    reporting.write_json(out / "steady_certificate.json", _steady_payload(state, grid, params))
    if args.figures:
        reporting.render_profile(
            out / "profile.png",
            sampled,
            title=f"{state.regime.value}: alpha={params.alpha:g}, M={params.mass:g}",
        )
    print(f"steady: {state.regime.value} tau={state.tau:.12g} -> {out}")
    return 0


def _default_snapshot_times(t_final: float) -> list:
    times = [0.0]
    if t_final > 0:
        times += [t_final * 10.0**-k for k in range(DEFAULT_SNAPSHOT_DECADES, -1, -1)]
    return times


def _evolution_config(args, params: ModelParams) -> EvolutionConfig:
    return EvolutionConfig(
        params=params,
        t_final=args.tfinal,
        eps=args.eps,
        dt_initial=args.dt_initial,
        dt_min=args.dt_min,
        dt_max=args.dt_max,
        newton_tol=args.newton_tol,
        max_newton_iters=args.max_newton_iters,
    )


def cmd_evolve(args) -> int:
    out = _output_dir(args)
    if args.u0.startswith("steady") and args.mass is None:
        raise SystemExit("--mass is required when u0 starts from the steady state")
    grid = PeriodicGrid(args.grid)
    if args.mass is None:
        # Mass follows from the initial profile (e.g. const specifiers).
        if args.u0.startswith("const:"):
            args.mass = 2 * np.pi * float(args.u0.split(":", 1)[1])
        elif args.u0.startswith("file:"):
            args.mass = quadrature(read_grid_csv(args.u0.split(":", 1)[1]))
        else:
            raise SystemExit("--mass is required for this u0 specifier")
    params = _model(args)
    cfg = _evolution_config(args, params)
    u0 = _initial_profile(args.u0, grid, params)
    traj = evolve(u0, cfg)

    snapshot_times = (
        _parse_float_list(args.snapshots)
        if args.snapshots
        else _default_snapshot_times(min(args.tfinal, traj.times[-1]))
    )
    snapshot_times = sorted(t for t in set(snapshot_times) if t <= traj.times[-1])
    reporting.write_series_csv(out / "series.csv", traj)
    reporting.write_snapshots(out, traj, snapshot_times)
    run_payload = {
        "config": {
            "alpha": params.alpha,
            "n": params.n,
            "omega": params.omega,
            "mass": params.mass,
            "grid_points": args.grid,
            "eps": cfg.eps,
            "t_final": cfg.t_final,
            "dt_initial": cfg.dt_initial,
            "dt_min": cfg.dt_min,
            "dt_max": cfg.dt_max,
            "u0": args.u0,
            "snapshot_times": snapshot_times,
        },
        "failed": traj.failed,
        "failure_reason": traj.failure_reason,
        "steps": len(traj.times) - 1,
        "final_time": traj.times[-1],
    }

    report = None
    if len(traj.times) >= 16 and params.omega == 0.0:
        try:
            state = minimizer(params)
            report = rate_report(traj, state, params)
            reporting.write_rates_csv(out / "rates.csv", report)
            reporting.write_json(out / "rate_report.json", report.to_dict())
            run_payload["fitted_exponent"] = report.fitted_exponent
            run_payload["fitted_rate"] = report.fitted_rate
        except ThinFilmError as exc:
            run_payload["rate_report_skipped"] = str(exc)
    reporting.write_json(out / "run.json", run_payload)

    if args.figures:
        reporting.render_series(out / "series.png", traj)
        reporting.render_snapshots(out / "snapshots.png", traj, snapshot_times)
        if report is not None:
            reporting.render_rates(out / "rates.png", report)
    status = 1 if traj.failed else 0
    print(f"evolve: {len(traj.times) - 1} steps to t={traj.times[-1]:g} -> {out}"
          + (" [FAILED]" if traj.failed else ""))
    return status


def cmd_verify(args) -> int:
    out = _output_dir(args)
    report = run_all_groups(args.seed, inject_perturbation=args.inject_perturbation)
    reporting.write_json(out / "verify_report.json", report)
    for group in report["groups"]:
        print(f"[{'PASS' if group['passed'] else 'FAIL'}] {group['name']}")
        if not group["passed"]:
            for check in group["checks"]:
                if not check["passed"]:
                    print(
                        f"    {check['name']}: value={check['value']:.6g} "
                        f"threshold={check['threshold']:.6g}"
                    )
    return 0 if report["passed"] else 1


def _sweep_cell(cell) -> dict:
    alpha, mass, grid_points, tfinal, out_dir = cell
    result = {"alpha": alpha, "mass": mass, "ok": True, "error": ""}
    try:
        params = ModelParams(alpha=alpha, mass=mass)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            state = minimizer(params)
        grid = PeriodicGrid(grid_points)
        cell_dir = Path(out_dir) / f"alpha_{alpha:g}_mass_{mass:g}"
        cell_dir.mkdir(parents=True, exist_ok=True)
        write_grid_csv(cell_dir / "profile.csv", evaluate_on_grid(state, grid))
        (cell_dir / "steady_state.json").write_text(steady_state_to_json(state) + "\n")
        result["regime"] = state.regime.value
        result["tau"] = state.tau
        if tfinal > 0:
            cfg = EvolutionConfig(params=params, t_final=tfinal, dt_max=0.1)
            traj = evolve(grid_function(grid, params.mass / (2 * np.pi)), cfg)
            reporting.write_series_csv(cell_dir / "series.csv", traj)
            result["evolution_failed"] = traj.failed
    except Exception as exc:  # noqa: BLE001 - cell failures must not kill the sweep
        result["ok"] = False
        result["error"] = str(exc)
    return result


def cmd_sweep(args) -> int:
    out = _output_dir(args)
    alphas = _parse_float_list(args.alpha)
    masses = _parse_float_list(args.mass)
    if not alphas or not masses:
        print("sweep: empty parameter list, nothing to do", file=sys.stderr)
        return 0
    cells = [(a, m, args.grid, args.tfinal, str(out)) for a in alphas for m in masses]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_cell, cells))
    else:
        results = [_sweep_cell(cell) for cell in cells]
    results.sort(key=lambda r: (r["alpha"], r["mass"]))
    reporting.write_json(out / "sweep_summary.json", {"cells": results})
    failures = [r for r in results if not r["ok"]]
    for r in failures:
        print(f"sweep cell alpha={r['alpha']:g} mass={r['mass']:g} failed: {r['error']}")
    print(f"sweep: {len(results) - len(failures)}/{len(results)} cells ok -> {out}")
    return 1 if failures else 0


def cmd_mass_tau(args) -> int:
    out = _output_dir(args)
    alphas = _parse_float_list(args.alpha)
    if not alphas:
        print("mass-tau: empty alpha list, nothing to do", file=sys.stderr)
        return 0
    curves = {}
    for alpha in alphas:
        curve = mass_tau_curve(alpha, args.samples)
        curves[alpha] = curve
        reporting.write_mass_tau_csv(out / f"mass_tau_alpha_{alpha:g}.csv", curve)
    if args.figures:
        reporting.render_mass_tau(out / "mass_tau.png", curves)
    print(f"mass-tau: {len(alphas)} curves with {args.samples} samples -> {out}")
    return 0


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out", default=None, help="output directory (default: $THINFILM_OUTPUT_DIR or ./out)")
    sub.add_argument("--config", default=None, help="flat key=value config file mirroring the flags")
    sub.add_argument("--figures", dest="figures", action="store_true", default=True,
                     help="render PNG figures next to the CSV output (default)")
    sub.add_argument("--no-figures", dest="figures", action="store_false")


def _add_model(sub: argparse.ArgumentParser, mass_required: bool) -> None:
    sub.add_argument("--alpha", type=float, required=True, help="geometric constant alpha > 0")
    sub.add_argument("--n", type=float, default=3.0, help="mobility exponent (default 3)")
    sub.add_argument("--omega", type=float, default=0.0, help="rotation speed (default 0)")
    if mass_required:
        sub.add_argument("--mass", type=float, required=True, help="film mass M > 0")
    else:
        sub.add_argument("--mass", type=float, default=None,
                         help="film mass (derived from u0 for const:/file: specifiers)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thinfilm",
        description="Steady states and evolution of a thin film on a periodic domain",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    steady = subs.add_parser("steady", help="construct the energy minimizer and its certificate")
    _add_model(steady, mass_required=True)
    steady.add_argument("--grid", type=int, default=1024, help="grid points (even, >= 16)")
    _add_common(steady)
    steady.set_defaults(fn=cmd_steady)

    ev = subs.add_parser("evolve", help="run the regularized evolution")
    _add_model(ev, mass_required=False)
    ev.add_argument("--grid", type=int, default=256)
    ev.add_argument("--u0", default="const:1",
                    help="const:<c> | steady | steady+perturb:<amp> | file:<path>")
    ev.add_argument("--tfinal", type=float, required=True)
    ev.add_argument("--eps", type=float, default=1e-8, help="mobility regularization")
    ev.add_argument("--dt-initial", type=float, default=1e-6)
    ev.add_argument("--dt-min", type=float, default=1e-12)
    ev.add_argument("--dt-max", type=float, default=1.0)
    ev.add_argument("--snapshots", default=None, help="comma-separated snapshot times")
    ev.add_argument("--newton-tol", type=float, default=1e-10)
    ev.add_argument("--max-newton-iters", type=int, default=30)
    _add_common(ev)
    ev.set_defaults(fn=cmd_evolve)

    ver = subs.add_parser("verify", help="run the invariant suites and report margins")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--inject-perturbation", type=float, default=0.0,
                     help="perturb the steady-state group (negative control)")
    _add_common(ver)
    ver.set_defaults(fn=cmd_verify)

    sweep = subs.add_parser("sweep", help="minimizers (and optional runs) over a parameter grid")
    sweep.add_argument("--alpha", required=True, help="comma-separated alpha values")
    sweep.add_argument("--mass", required=True, help="comma-separated masses")
    sweep.add_argument("--grid", type=int, default=512)
    sweep.add_argument("--tfinal", type=float, default=0.0,
                       help="if > 0, also evolve a uniform film in each cell")
    sweep.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    _add_common(sweep)
    sweep.set_defaults(fn=cmd_sweep)

    mt = subs.add_parser("mass-tau", help="mass versus support half-length curves")
    mt.add_argument("--alpha", required=True, help="comma-separated alpha values")
    mt.add_argument("--samples", type=int, default=200)
    _add_common(mt)
    mt.set_defaults(fn=cmd_mass_tau)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(_expand_config_argv(argv))
    try:
        return args.fn(args)
    except ThinFilmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
