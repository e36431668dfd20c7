"""Convergence-rate diagnostics: distance series, fitted rates, and bounds.

Three bound families apply, keyed to the steady-state regime:

* strictly positive minimizer: local exponential attraction at rate
  mu = (1-alpha^2)(min u*)^n for data with energy gap below
  eps0 = (1-alpha^2) pi/2 (min u*)^2 (upper bound, prefactor fitted);
* minimizer with a dry interval of length L, n > 3/2: the L2 distance
  cannot decay faster than L^(1+beta/2) (S0 + K0 t)^(-1/beta);
* minimizer with a quadratic touchdown point, n > 5/2: a power-law lower
  bound with asymptotic exponent -3/(2(beta-1)), obtained by optimizing a
  family of shrinking intervals around the touchdown point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import AnalysisError, ParameterError, RegimeError
from .functionals import EntropyParams, entropy_growth_constant
from .grid import PeriodicGridFunction, h1_norm, l2_norm
from .steady_state import (
    ModelParams,
    Regime,
    SteadyState,
    evaluate_on_grid,
    mass_of_tau,
    min_value,
    steady_second_derivative,
)

__all__ = [
    "BoundKind",
    "RateReport",
    "exponential_rate",
    "power_law_lower_bound",
    "touchdown_lower_bound",
    "rate_report",
    "mass_tau_curve",
]

# Conjectured decay exponent for the n=3, alpha=1 configuration; reported for
# comparison only, never asserted.
CONJECTURED_DRY_EXPONENT = -1.0 / 3.0


class BoundKind(str, Enum):
    EXPONENTIAL_UPPER = "ExponentialUpper"
    POWER_LAW_LOWER = "PowerLawLower"
    TOUCHDOWN_POWER_LOWER = "TouchdownPowerLower"


@dataclass
class RateReport:
    """Distance series with fitted decay constants and the applicable bound."""

    times: np.ndarray
    distances_l2: np.ndarray
    distances_h1: np.ndarray
    fitted_exponent: float
    fitted_rate: float
    bound_curve: np.ndarray
    bound_kind: BoundKind
    fit_window: tuple
    mu: float | None = None
    eps0: float | None = None
    prefactor: float | None = None
    s0: float | None = None
    k0: float | None = None
    dry_length: float | None = None
    quad_coeff: float | None = None

    def to_dict(self) -> dict:
        out = {
            "bound_kind": self.bound_kind.value,
            "times": list(map(float, self.times)),
            "distances_l2": list(map(float, self.distances_l2)),
            "distances_h1": list(map(float, self.distances_h1)),
            "fitted_exponent": self.fitted_exponent,
            "fitted_rate": self.fitted_rate,
            "bound_curve": list(map(float, self.bound_curve)),
            "fit_window": list(self.fit_window),
        }
        for name in ("mu", "eps0", "prefactor", "s0", "k0", "dry_length", "quad_coeff"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        if self.bound_kind is BoundKind.POWER_LAW_LOWER:
            out["conjectured_exponent"] = CONJECTURED_DRY_EXPONENT
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def exponential_rate(state: SteadyState, n: float) -> tuple:
    """(mu, eps0) for the positive regime: rate and energy-gap threshold."""
    if state.regime is not Regime.POSITIVE:
        raise RegimeError(
            f"exponential rate requires the Positive regime, got {state.regime.value}"
        )
    umin = min_value(state)
    mu = (1 - state.alpha**2) * umin**n
    eps0 = (1 - state.alpha**2) * np.pi / 2 * umin**2
    return float(mu), float(eps0)


def power_law_lower_bound(length_l: float, s0: float, k0: float, beta: float, times):
    """L^(1+beta/2) (s0 + k0 t)^(-1/beta) evaluated at the given times."""
    if not length_l > 0.0:
        raise ParameterError(f"dry-interval length must be > 0, got {length_l}")
    if not beta > 0.0:
        raise ParameterError(f"beta must be > 0, got {beta}")
    if not s0 > 0.0:
        raise ParameterError(f"initial entropy must be > 0, got {s0}")
    if k0 < 0.0:
        raise ParameterError(f"entropy growth constant must be >= 0, got {k0}")
    times = np.asarray(times, dtype=float)
    return length_l ** (1 + beta / 2) * (s0 + k0 * times) ** (-1.0 / beta)


def _golden_max(fn, lo: float, hi: float, rel_tol: float = 1e-6) -> float:
    """Golden-section maximizer for a unimodal function on [lo, hi]."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while (b - a) > rel_tol * max(abs(a), abs(b), 1e-300):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def touchdown_lower_bound(s0: float, k0: float, beta: float, quad_coeff: float, times):
    """Lower bound near a quadratic touchdown, optimized over interval widths.

    For each time, maximize over eps the expression

        L^(1/beta + 1/2) (s0 + k0 t)^(-1/beta) - c L^(3/2),
        L = eps (s0 + k0 t)^(-1/(beta-1)),

    where the correction coefficient c = quad_coeff / sqrt(320) bounds the
    mass of the touchdown profile on any interval of length L <= 1.  The
    optimized curve decays like t^(-3/(2(beta-1))).
    """
    if not beta > 1.0:
        raise ParameterError(f"touchdown bound requires beta > 1 (n > 5/2), got {beta}")
    if not s0 > 0.0:
        raise ParameterError(f"initial entropy must be > 0, got {s0}")
    if k0 < 0.0:
        raise ParameterError(f"entropy growth constant must be >= 0, got {k0}")
    if not quad_coeff > 0.0:
        raise ParameterError(f"touchdown curvature must be > 0, got {quad_coeff}")
    times = np.asarray(times, dtype=float)
    c = quad_coeff / np.sqrt(320.0)
    a_exp = 1.0 / beta + 0.5  # < 3/2 since beta > 1

    out = np.empty_like(times)
    for i, t in enumerate(times):
        sigma = s0 + k0 * t
        scale = sigma ** (-1.0 / (beta - 1.0))

        def value(eps_width, sigma=sigma, scale=scale):
            width = eps_width * scale
            return width**a_exp * sigma ** (-1.0 / beta) - c * width**1.5

        # The objective is unimodal in eps with a zero at eps_zero; keep the
        # interval width at most 1 so the correction coefficient stays valid.
        eps_zero = (sigma ** (-1.0 / beta) / c) ** (1.0 / (1.5 - a_exp)) / scale
        eps_hi = min(eps_zero * (1 - 1e-12), 1.0 / scale)
        best = _golden_max(value, 1e-12 * eps_hi, eps_hi)
        out[i] = max(value(best), 0.0)
    return out


def _fit_slope(x: np.ndarray, y: np.ndarray) -> float:
    coeffs = np.polyfit(x, y, 1)
    return float(coeffs[0])


def rate_report(
    traj,
    state: SteadyState,
    params: ModelParams,
    fit_window: tuple | None = None,
) -> RateReport:
    """Compare a trajectory's distance from the minimizer against the bounds.

    The decay constants are least-squares slopes over the fit window
    (default: the last half of the time range) in log-log coordinates for
    the exponent and semilog coordinates for the rate.
    """
    traj_mass = traj.masses[0]
    if abs(traj_mass - state.mass) > 1e-6 * max(1.0, abs(state.mass)):
        raise AnalysisError(
            f"trajectory mass {traj_mass} and steady-state mass {state.mass} disagree"
        )
    grid = traj.profiles[0].grid
    target = evaluate_on_grid(state, grid)
    times = np.asarray(traj.times, dtype=float)
    d_l2 = np.empty_like(times)
    d_h1 = np.empty_like(times)
    for i, prof in enumerate(traj.profiles):
        diff = PeriodicGridFunction(grid, prof.values - target.values)
        d_l2[i] = l2_norm(diff)
        d_h1[i] = h1_norm(diff)

    if fit_window is None:
        # Last half of the recorded samples; early transients stay outside.
        fit_window = (float(times[len(times) // 2]), float(times[-1]))
    lo, hi = float(fit_window[0]), float(fit_window[1])
    window = (times >= lo) & (times <= hi)
    if int(np.count_nonzero(window)) < 8:
        raise AnalysisError(
            f"fit window [{lo:.6g}, {hi:.6g}] contains fewer than 8 samples"
        )

    n = params.n
    report_kwargs: dict = {}
    if state.regime is Regime.POSITIVE:
        kind = BoundKind.EXPONENTIAL_UPPER
        mu, eps0 = exponential_rate(state, n)
        fit_series = d_h1
        # Smallest prefactor making K1*exp(-mu t) an upper envelope on the window.
        with np.errstate(over="ignore"):
            prefactor = float(np.max(fit_series[window] * np.exp(mu * times[window])))
        bound = prefactor * np.exp(-mu * times)
        report_kwargs.update(mu=mu, eps0=eps0, prefactor=prefactor)
    elif state.regime is Regime.COMPACT_SUPPORT and n > 1.5:
        kind = BoundKind.POWER_LAW_LOWER
        beta = EntropyParams(n).beta
        length = 2.0 * (np.pi - state.tau)
        s0 = traj.entropies[0]
        k0 = entropy_growth_constant(
            state.mass, state.alpha, EntropyParams(n), traj.energies[0]
        )
        fit_series = d_l2
        bound = power_law_lower_bound(length, s0, k0, beta, times)
        report_kwargs.update(s0=s0, k0=k0, dry_length=length)
    elif state.regime is Regime.CRITICAL and n > 2.5:
        kind = BoundKind.TOUCHDOWN_POWER_LOWER
        beta = EntropyParams(n).beta
        quad_coeff = float(steady_second_derivative(state, np.pi))
        s0 = traj.entropies[0]
        k0 = entropy_growth_constant(
            state.mass, state.alpha, EntropyParams(n), traj.energies[0]
        )
        fit_series = d_l2
        bound = touchdown_lower_bound(s0, k0, beta, quad_coeff, times)
        report_kwargs.update(s0=s0, k0=k0, quad_coeff=quad_coeff)
    else:
        raise AnalysisError(
            f"no convergence bound applies to regime {state.regime.value} with n={n}"
        )

    fit_mask = window & (fit_series > 1e-15) & (times > 0.0)
    if int(np.count_nonzero(fit_mask)) >= 8:
        fitted_exponent = _fit_slope(
            np.log(times[fit_mask]), np.log(fit_series[fit_mask])
        )
        fitted_rate = _fit_slope(times[fit_mask], np.log(fit_series[fit_mask]))
    else:
        # Degenerate series (e.g. a trajectory pinned at the minimizer).
        fitted_exponent = float("nan")
        fitted_rate = float("nan")

    return RateReport(
        times=times,
        distances_l2=d_l2,
        distances_h1=d_h1,
        fitted_exponent=fitted_exponent,
        fitted_rate=fitted_rate,
        bound_curve=np.asarray(bound),
        bound_kind=kind,
        fit_window=(lo, hi),
        **report_kwargs,
    )


def mass_tau_curve(alpha: float, tau_samples: int):
    """Sample (tau, mass) on a uniform tau grid over (0, pi/max(alpha,1)).

    The endpoints are nudged inward by the root-finder margin so the curve
    approaches the regime boundary without evaluating on it.
    """
    if tau_samples < 2:
        raise ParameterError(f"tau_samples must be >= 2, got {tau_samples}")
    if not alpha > 0.0:
        raise ParameterError(f"alpha must be > 0, got {alpha}")
    upper = np.pi / max(alpha, 1.0)
    taus = np.linspace(1e-8, upper - 1e-8, tau_samples)
    return [(float(tau), mass_of_tau(float(tau), alpha)) for tau in taus]
