"""Implicit conservative time stepping of the regularized film equation.

The PDE u_t + [f(u)(u_ttt + alpha^2 u_t - sin(theta)) + omega u]_theta = 0 is
discretized in flux form on the periodic grid.  Node-centered quantities
(the second difference w = D2 u, the profile itself, and cos(theta)) are
differenced across cell faces, the mobility is averaged onto faces, and the
time derivative is the face difference of the face fluxes.  Summing the
divergence telescopes to zero, so mass is conserved to round-off, and with
the forcing written as a difference of node cosines the semi-discrete system
is exactly the gradient flow of the discrete energy.

Time integration is backward Euler with the mobility lagged at the previous
iterate inside a fixed-point loop; each pass solves one cyclic pentadiagonal
system (a banded LAPACK solve plus a rank-4 correction for the periodic
corners).  An adaptive controller halves dt on solver failure or on an
energy increase (omega = 0), and grows it again after a run of successes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import ParameterError, StepFailure
from .functionals import EntropyParams, energy, entropy
from .grid import PeriodicGrid, PeriodicGridFunction, quadrature
from .steady_state import ModelParams

__all__ = [
    "EvolutionConfig",
    "Trajectory",
    "mobility",
    "flux",
    "face_flux",
    "dissipation_rate",
    "step",
    "evolve",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvolutionConfig:
    """Run parameters: model, regularization, and time-step controller knobs."""

    params: ModelParams
    t_final: float
    eps: float = 1e-8
    dt_initial: float = 1e-6
    dt_min: float = 1e-12
    dt_max: float = 1.0
    snapshot_times: tuple = ()
    newton_tol: float = 1e-10
    max_newton_iters: int = 30
    # dt controller: growth factor applied after `growth_after` consecutive
    # accepted steps; energy increases beyond energy_tol*(1+|E|) reject a step.
    growth_factor: float = 1.2
    growth_after: int = 5
    energy_tol: float = 1e-9
    # Clipping negatives: warn above the first fraction, reject the step above
    # the second (positivity should only be violated at round-off scale).
    clip_warn_fraction: float = 1e-10
    clip_reject_fraction: float = 1e-8

    def __post_init__(self) -> None:
        if self.eps < 0.0:
            raise ParameterError(f"eps must be >= 0, got {self.eps}")
        if self.t_final < 0.0:
            raise ParameterError(f"t_final must be >= 0, got {self.t_final}")
        if not (0.0 < self.dt_min <= self.dt_initial <= self.dt_max):
            raise ParameterError(
                f"need 0 < dt_min <= dt_initial <= dt_max, got "
                f"{self.dt_min}, {self.dt_initial}, {self.dt_max}"
            )
        for t in self.snapshot_times:
            if not 0.0 <= t <= self.t_final:
                raise ParameterError(f"snapshot time {t} outside [0, {self.t_final}]")


@dataclass
class Trajectory:
    """Recorded evolution: one entry per accepted step (index 0 is the initial state)."""

    times: list = field(default_factory=list)
    profiles: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    entropies: list = field(default_factory=list)
    masses: list = field(default_factory=list)
    step_log: list = field(default_factory=list)  # (t, dt, fixed-point iters)
    failed: bool = False
    failure_reason: str = ""

    def sample(self, t: float) -> PeriodicGridFunction:
        """Profile at time t by linear interpolation between recorded steps."""
        times = np.asarray(self.times)
        if not times[0] <= t <= times[-1]:
            raise ParameterError(
                f"time {t} outside recorded range [{times[0]}, {times[-1]}]"
            )
        k = int(np.searchsorted(times, t, side="right") - 1)
        if k >= len(times) - 1:
            return self.profiles[-1]
        t0, t1 = times[k], times[k + 1]
        w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
        vals = (1 - w) * self.profiles[k].values + w * self.profiles[k + 1].values
        return PeriodicGridFunction(self.profiles[k].grid, vals)

    def snapshots(self, times) -> list:
        return [self.sample(float(t)) for t in times]


def mobility(z, n: float, eps: float):
    """Regularized mobility f_eps(z) = |z|^(n+1) / (|z| + eps); |z|^n at eps = 0.

    Always <= |z|^n, degenerate at z = 0, and insensitive to the sign of
    round-off negatives.
    """
    if eps < 0.0:
        raise ParameterError(f"eps must be >= 0, got {eps}")
    z = np.asarray(z, dtype=float)
    az = np.abs(z)
    if eps == 0.0:
        out = az**n
    else:
        out = az ** (n + 1) / (az + eps)
    return out if out.ndim else float(out)


def _solve_cyclic_pentadiagonal(d2m, d1m, d0, d1p, d2p, rhs):
    """Solve M x = rhs where M[j, (j+k) % N] = d{k}[j] for offsets k in -2..2.

    Banded LAPACK solve for the non-periodic band, then a Woodbury rank-4
    correction restores the six wrap-around corner entries.
    """
    n = len(d0)
    ab = np.zeros((5, n))
    ab[0, 2:] = d2p[:-2]
    ab[1, 1:] = d1p[:-1]
    ab[2, :] = d0
    ab[3, :-1] = d1m[1:]
    ab[4, :-2] = d2m[2:]

    idx = (0, 1, n - 2, n - 1)
    corners = np.zeros((4, 4))
    corners[0, 2] = d2m[0]  # M[0, n-2]
    corners[0, 3] = d1m[0]  # M[0, n-1]
    corners[1, 3] = d2m[1]  # M[1, n-1]
    corners[2, 0] = d2p[n - 2]  # M[n-2, 0]
    corners[3, 0] = d1p[n - 1]  # M[n-1, 0]
    corners[3, 1] = d2p[n - 1]  # M[n-1, 1]
    u_hat = np.zeros((n, 4))
    u_hat[idx, :] = corners

    sol = solve_banded((2, 2), ab, np.column_stack([rhs, u_hat]), check_finite=False)
    y, z = sol[:, 0], sol[:, 1:]
    cap = np.eye(4) + z[idx, :]
    return y - z @ np.linalg.solve(cap, y[list(idx)])


class _FluxOperator:
    """Face-flux discretization for one grid and one configuration."""

    def __init__(self, grid: PeriodicGrid, cfg: EvolutionConfig):
        self.cfg = cfg
        self.h = grid.spacing
        self.alpha = cfg.params.alpha
        cos = np.cos(grid.nodes)
        self.gcos = (np.roll(cos, -1) - cos) / self.h

    def face_mobility(self, u_vals: np.ndarray) -> np.ndarray:
        f = mobility(u_vals, self.cfg.params.n, self.cfg.eps)
        return 0.5 * (f + np.roll(f, -1))

    def _pressure(self, u_vals: np.ndarray) -> np.ndarray:
        h2 = self.h**2
        lap = (np.roll(u_vals, -1) - 2 * u_vals + np.roll(u_vals, 1)) / h2
        return lap + self.alpha**2 * u_vals

    def face_flux(self, u_vals: np.ndarray) -> np.ndarray:
        p = self._pressure(u_vals)
        grad_p = (np.roll(p, -1) - p) / self.h
        j = self.face_mobility(u_vals) * (grad_p + self.gcos)
        omega = self.cfg.params.omega
        if omega != 0.0:
            j = j + omega * 0.5 * (u_vals + np.roll(u_vals, -1))
        return j

    def time_derivative(self, u_vals: np.ndarray) -> np.ndarray:
        j = self.face_flux(u_vals)
        return -(j - np.roll(j, 1)) / self.h

    def solve_implicit(self, u_vals: np.ndarray, m: np.ndarray, dt: float) -> np.ndarray:
        """Backward-Euler solve (I + dt*A[m]) u_new = u - dt*c[m], mobility frozen."""
        h = self.h
        h2 = h * h
        b = 1.0 / h2
        a = self.alpha**2 - 2.0 / h2
        m_prev = np.roll(m, 1)  # face j-1/2 seen from node j

        d2m = dt * (b * m_prev) / h2
        d1m = dt * (-b * m - (b - a) * m_prev) / h2
        d0 = 1.0 + dt * ((b - a) * (m + m_prev)) / h2
        d1p = dt * ((a - b) * m - b * m_prev) / h2
        d2p = dt * (b * m) / h2
        omega = self.cfg.params.omega
        if omega != 0.0:
            d1p = d1p + dt * omega / (2 * h)
            d1m = d1m - dt * omega / (2 * h)

        forcing = (m * self.gcos - m_prev * np.roll(self.gcos, 1)) / h
        return _solve_cyclic_pentadiagonal(d2m, d1m, d0, d1p, d2p, u_vals - dt * forcing)


def flux(u: PeriodicGridFunction, cfg: EvolutionConfig) -> PeriodicGridFunction:
    """Conservative time derivative u_t = -d(flux)/d(theta) at the given state.

    The divergence telescopes over the period, so quadrature of the result
    is zero to round-off for any input.
    """
    op = _FluxOperator(u.grid, cfg)
    return PeriodicGridFunction(u.grid, op.time_derivative(u.values))


def face_flux(u: PeriodicGridFunction, cfg: EvolutionConfig) -> np.ndarray:
    """Face-centered flux J_{j+1/2}; entry j sits between nodes j and j+1."""
    op = _FluxOperator(u.grid, cfg)
    return op.face_flux(u.values)


def dissipation_rate(u: PeriodicGridFunction, cfg: EvolutionConfig) -> float:
    """Discrete energy dissipation -int f_eps(u) ((dE/du)_theta)^2 (omega = 0 form)."""
    op = _FluxOperator(u.grid, cfg)
    m = op.face_mobility(u.values)
    p = op._pressure(u.values)
    g_face = (np.roll(p, -1) - p) / op.h + op.gcos
    return float(-u.grid.spacing * np.sum(m * g_face**2))


def _step_impl(op: _FluxOperator, u_vals: np.ndarray, dt: float):
    """One backward-Euler step; returns (new values, iterations, clipped fraction)."""
    cfg = op.cfg
    target_sum = float(np.sum(u_vals))
    iterate = u_vals
    new = u_vals
    converged = False
    iters = 0
    for iters in range(1, cfg.max_newton_iters + 1):
        m = op.face_mobility(iterate)
        new = op.solve_implicit(u_vals, m, dt)
        if not np.all(np.isfinite(new)):
            raise StepFailure("implicit solve produced non-finite values")
        delta = float(np.max(np.abs(new - iterate)))
        iterate = new
        if delta <= cfg.newton_tol * max(1.0, float(np.max(np.abs(new)))):
            converged = True
            break
    if not converged:
        raise StepFailure(f"mobility fixed point stalled after {iters} iterations")

    clipped = np.maximum(new, 0.0)
    removed = float(np.sum(clipped - new))
    clip_fraction = removed / max(target_sum, 1e-300)
    # The rescale restores the mass removed by clipping and also scrubs the
    # round-off the linear solve leaves on the conserved sum.
    positive_sum = float(np.sum(clipped))
    if positive_sum <= 0.0:
        raise StepFailure("step clipped the entire profile to zero")
    clipped = clipped * (target_sum / positive_sum)
    return clipped, iters, clip_fraction


def step(u: PeriodicGridFunction, dt: float, cfg: EvolutionConfig) -> PeriodicGridFunction:
    """Advance one implicit step of size dt (no dt adaptivity at this level).

    Raises StepFailure if the mobility fixed point does not converge; the
    adaptive driver reacts by halving dt.
    """
    if not dt > 0.0:
        raise ParameterError(f"dt must be > 0, got {dt}")
    op = _FluxOperator(u.grid, cfg)
    new_vals, _, clip_fraction = _step_impl(op, u.values, dt)
    if clip_fraction > cfg.clip_warn_fraction:
        logger.warning(
            "positivity clip removed %.3e of the mass in one step", clip_fraction
        )
    return PeriodicGridFunction(u.grid, new_vals)


def _record(traj: Trajectory, t, u: PeriodicGridFunction, alpha, entropy_params):
    traj.times.append(float(t))
    traj.profiles.append(u)
    traj.energies.append(energy(u, alpha).total)
    if entropy_params is None:
        traj.entropies.append(math.nan)
    else:
        traj.entropies.append(entropy(u, entropy_params))
    traj.masses.append(quadrature(u))


def evolve(u0: PeriodicGridFunction, cfg: EvolutionConfig) -> Trajectory:
    """Run the adaptive implicit evolution from u0 up to t_final.

    Energy, entropy (with the +inf sentinel at touchdown), and mass are
    recorded at every accepted step.  On dt underflow the partial trajectory
    is returned with the failed flag set.
    """
    if np.any(u0.values < 0.0):
        raise ParameterError("initial profile must be nonnegative")
    if quadrature(u0) <= 0.0:
        raise ParameterError("initial profile must have positive mass")

    alpha = cfg.params.alpha
    entropy_params = EntropyParams(cfg.params.n) if cfg.params.n > 1.5 else None
    traj = Trajectory()
    _record(traj, 0.0, u0, alpha, entropy_params)
    if cfg.t_final == 0.0:
        return traj

    op = _FluxOperator(u0.grid, cfg)
    u = u0
    t = 0.0
    dt = cfg.dt_initial
    successes = 0
    check_energy = cfg.params.omega == 0.0
    while t < cfg.t_final * (1.0 - 1e-15):
        dt_try = min(dt, cfg.t_final - t)
        rejected = None
        new_vals = None
        iters = 0
        try:
            new_vals, iters, clip_fraction = _step_impl(op, u.values, dt_try)
        except StepFailure as exc:
            rejected = str(exc)
        else:
            if clip_fraction > cfg.clip_reject_fraction:
                rejected = f"clip removed mass fraction {clip_fraction:.3e}"
            elif clip_fraction > cfg.clip_warn_fraction:
                logger.warning(
                    "t=%.6g: positivity clip removed %.3e of the mass",
                    t,
                    clip_fraction,
                )
        if rejected is None and check_energy:
            e_old = traj.energies[-1]
            e_new = energy(PeriodicGridFunction(u.grid, new_vals), alpha).total
            if e_new > e_old + cfg.energy_tol * (1.0 + abs(e_old)):
                rejected = f"energy increased by {e_new - e_old:.3e}"

        if rejected is not None:
            successes = 0
            dt = dt_try / 2.0
            if dt < cfg.dt_min:
                traj.failed = True
                traj.failure_reason = f"dt underflow at t={t:.6g}: {rejected}"
                logger.error("evolve aborted: %s", traj.failure_reason)
                return traj
            continue

        t += dt_try
        u = PeriodicGridFunction(u.grid, new_vals)
        _record(traj, t, u, alpha, entropy_params)
        traj.step_log.append((t, dt_try, iters))
        successes += 1
        if successes >= cfg.growth_after:
            successes = 0
            dt = min(dt * cfg.growth_factor, cfg.dt_max)
    return traj
