"""Closed-form energy-minimizing steady states and the mass <-> support inversion.

For each mass M and geometric constant alpha > 0 there is a unique
nonnegative minimizer of the film energy.  Three regimes occur:

* ``Positive``      M*(1-alpha^2) > 2*pi (requires alpha < 1): the minimizer
  is strictly positive, u = M/(2*pi) + cos(theta)/(1-alpha^2).
* ``Critical``      M*(1-alpha^2) = 2*pi: u = (1+cos(theta))/(1-alpha^2)
  touches zero quadratically at theta = +-pi.
* ``CompactSupport`` otherwise: u is supported on [-tau, tau] with
  max(alpha,1)*tau < pi, meets the dry region at zero contact angle, and on
  its support equals

      u(theta) = A(tau)*(cos(alpha*theta) - cos(alpha*tau))
                 + u0(theta) - u0(tau),

  where u0 is a particular solution of the Euler-Lagrange equation
  u'' + alpha^2 u + cos(theta) = lambda and A(tau) is fixed by the
  zero-contact-angle (Neumann) condition.

The support half-length tau is recovered from the mass by monotone
root-finding: M(tau) is strictly increasing, with M -> 0 as tau -> 0 and
M -> 2*pi/(1-alpha^2) (alpha < 1) resp. infinity (alpha >= 1) at the upper
end of the tau range.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import quad

from .errors import (
    DomainError,
    NumericalError,
    ParameterError,
    RegimeError,
    SupportBoundWarning,
)
from .grid import PeriodicGrid, PeriodicGridFunction

__all__ = [
    "ModelParams",
    "Regime",
    "SteadyState",
    "particular_solution",
    "particular_solution_deriv",
    "coefficient_a",
    "profile",
    "mass_of_tau",
    "mass_of_tau_derivative",
    "tau_of_mass",
    "minimizer",
    "evaluate_on_grid",
    "steady_profile",
    "steady_derivative",
    "steady_second_derivative",
    "steady_third_derivative",
    "contact_angle",
    "min_value",
    "euler_lagrange_residual",
    "steady_state_to_json",
    "steady_state_from_json",
]

# Below this distance from alpha = 1 the generic branch of the particular
# solution loses ~|1-alpha^2|^-1 digits to cancellation, so the alpha = 1
# limit branch is used instead; the two agree to O(ALPHA_SWITCH).
ALPHA_SWITCH = 1e-4

# Root bracketing keeps tau this far away from the open endpoints of its range.
TAU_MARGIN = 1e-8

# Relative tolerance on M*(1-alpha^2) - 2*pi for regime classification.
REGIME_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters: geometry alpha, mobility exponent n, rotation omega, mass."""

    alpha: float
    n: float = 3.0
    omega: float = 0.0
    mass: float = 1.0

    def __post_init__(self) -> None:
        if not self.alpha > 0.0:
            raise ParameterError(
                f"alpha must be > 0 (alpha = 0 is unsupported), got {self.alpha}"
            )
        if not self.n > 0.0:
            raise ParameterError(f"mobility exponent n must be > 0, got {self.n}")
        if not self.mass > 0.0:
            raise ParameterError(f"mass must be > 0, got {self.mass}")


class Regime(str, Enum):
    POSITIVE = "Positive"
    CRITICAL = "Critical"
    COMPACT_SUPPORT = "CompactSupport"


@dataclass(frozen=True)
class SteadyState:
    """Closed-form description of the minimizer: regime tag plus coefficients.

    tau is the support half-length (pi in the Positive/Critical regimes),
    coeff_a the cosine coefficient of the general Euler-Lagrange solution,
    and lagrange the multiplier enforcing the mass constraint.
    """

    regime: Regime
    alpha: float
    mass: float
    tau: float
    coeff_a: float
    lagrange: float


def _near_one(alpha: float) -> bool:
    return abs(alpha - 1.0) < ALPHA_SWITCH


def particular_solution(theta, alpha: float):
    """Particular solution u0 of u'' + alpha^2 u = -cos(theta).

    Two analytic branches: -theta*sin(theta)/2 at alpha = 1, and
    (cos(theta) - (1+alpha^2)/(2 alpha) cos(alpha theta)) / (1-alpha^2)
    otherwise, switched over a small window around alpha = 1 where the
    generic branch cancels catastrophically.
    """
    if not alpha > 0.0:
        raise ParameterError(f"alpha must be > 0, got {alpha}")
    theta = np.asarray(theta, dtype=float)
    if _near_one(alpha):
        out = -0.5 * theta * np.sin(theta)
    else:
        out = (np.cos(theta) - (1 + alpha**2) / (2 * alpha) * np.cos(alpha * theta)) / (
            1 - alpha**2
        )
    return out if out.ndim else float(out)


def particular_solution_deriv(theta, alpha: float):
    """Analytic theta-derivative of particular_solution, branch-consistent."""
    if not alpha > 0.0:
        raise ParameterError(f"alpha must be > 0, got {alpha}")
    theta = np.asarray(theta, dtype=float)
    if _near_one(alpha):
        out = -0.5 * (np.sin(theta) + theta * np.cos(theta))
    else:
        out = (-np.sin(theta) + (1 + alpha**2) / 2 * np.sin(alpha * theta)) / (
            1 - alpha**2
        )
    return out if out.ndim else float(out)


def _particular_solution_deriv2(theta, alpha: float):
    theta = np.asarray(theta, dtype=float)
    if _near_one(alpha):
        out = -np.cos(theta) + 0.5 * theta * np.sin(theta)
    else:
        out = (
            -np.cos(theta) + (1 + alpha**2) * alpha / 2 * np.cos(alpha * theta)
        ) / (1 - alpha**2)
    return out if out.ndim else float(out)


def _particular_solution_deriv3(theta, alpha: float):
    theta = np.asarray(theta, dtype=float)
    if _near_one(alpha):
        out = 1.5 * np.sin(theta) + 0.5 * theta * np.cos(theta)
    else:
        out = (
            np.sin(theta) - (1 + alpha**2) * alpha**2 / 2 * np.sin(alpha * theta)
        ) / (1 - alpha**2)
    return out if out.ndim else float(out)


def _tau_upper(alpha: float) -> float:
    return np.pi / max(alpha, 1.0)


def _check_tau(tau: float, alpha: float) -> None:
    if not alpha > 0.0:
        raise ParameterError(f"alpha must be > 0, got {alpha}")
    if not 0.0 < tau < _tau_upper(alpha):
        raise DomainError(
            f"tau must lie in (0, pi/max(alpha,1)) = (0, {_tau_upper(alpha):.6g}), "
            f"got {tau}"
        )


def coefficient_a(tau: float, alpha: float) -> float:
    """Cosine coefficient A(tau) = u0'(tau) / (alpha sin(alpha tau)).

    Fixed by the zero contact angle: with this A the profile's one-sided
    derivative at tau vanishes identically.
    """
    _check_tau(tau, alpha)
    denom = alpha * np.sin(alpha * tau)
    if denom <= 0.0:
        raise DomainError(f"sin(alpha*tau) must be positive, got tau={tau}, alpha={alpha}")
    return float(particular_solution_deriv(tau, alpha)) / denom


def _compact_profile(theta, tau: float, alpha: float, a_coeff: float):
    theta = np.asarray(theta, dtype=float)
    t = np.abs(theta)
    inside = t <= tau
    vals = np.where(
        inside,
        a_coeff * (np.cos(alpha * t) - np.cos(alpha * tau))
        + particular_solution(t, alpha)
        - particular_solution(tau, alpha),
        0.0,
    )
    return vals if vals.ndim else float(vals)


def profile(theta, tau: float, alpha: float):
    """Compact-support profile: the closed form for |theta| <= tau, 0 outside.

    Evaluated through |theta| so that symmetry about theta = 0 is exact in
    floating point.
    """
    return _compact_profile(theta, tau, alpha, coefficient_a(tau, alpha))


def _profile_deriv(theta, tau: float, alpha: float, a_coeff: float, order: int):
    """Analytic derivatives of the compact-support profile (0 outside support)."""
    theta = np.asarray(theta, dtype=float)
    t = np.abs(theta)
    sign = np.sign(theta)
    if order == 1:
        even = -a_coeff * alpha * np.sin(alpha * t) + particular_solution_deriv(t, alpha)
        vals = sign * even
    elif order == 2:
        vals = -a_coeff * alpha**2 * np.cos(alpha * t) + _particular_solution_deriv2(
            t, alpha
        )
    elif order == 3:
        even = a_coeff * alpha**3 * np.sin(alpha * t) + _particular_solution_deriv3(
            t, alpha
        )
        vals = sign * even
    else:
        raise ParameterError(f"unsupported derivative order {order}")
    vals = np.where(t <= tau, vals, 0.0)
    return vals if vals.ndim else float(vals)


def _mass_integrand_even(theta, tau: float, alpha: float, a_coeff: float):
    return (
        a_coeff * (np.cos(alpha * theta) - np.cos(alpha * tau))
        + particular_solution(theta, alpha)
        - particular_solution(tau, alpha)
    )


def mass_of_tau(tau: float, alpha: float) -> float:
    """Mass of the compact-support profile, by adaptive quadrature (rel. 1e-12).

    Strictly increasing in tau on (0, pi/max(alpha,1)).
    """
    a_coeff = coefficient_a(tau, alpha)
    val, _ = quad(
        _mass_integrand_even,
        0.0,
        tau,
        args=(tau, alpha, a_coeff),
        epsabs=1e-15,
        epsrel=1e-12,
        limit=200,
    )
    return 2.0 * val


def mass_of_tau_derivative(tau: float, alpha: float) -> float:
    """dM/dtau = (dA/dtau) * integral of (cos(alpha theta) - cos(alpha tau)).

    Both factors are closed forms; the derivative is positive on the whole
    tau range, which is what makes the mass inversion well-posed.
    """
    a_coeff = coefficient_a(tau, alpha)
    # dA/dtau * alpha*sin(alpha*tau) = u_thetatheta(tau) = u0''(tau) - A alpha^2 cos(alpha tau)
    upp_tau = float(_particular_solution_deriv2(tau, alpha)) - a_coeff * alpha**2 * np.cos(
        alpha * tau
    )
    da_dtau = upp_tau / (alpha * np.sin(alpha * tau))
    integral = 2.0 * np.sin(alpha * tau) / alpha - 2.0 * tau * np.cos(alpha * tau)
    return da_dtau * integral


def tau_of_mass(mass: float, alpha: float) -> float:
    """Invert mass_of_tau: bracketed bisection plus a Newton polish.

    Raises RegimeError when alpha < 1 and the mass belongs to the
    positive/critical regime, and NumericalError if the iteration stalls.
    """
    if not mass > 0.0:
        raise ParameterError(f"mass must be > 0, got {mass}")
    if not alpha > 0.0:
        raise ParameterError(f"alpha must be > 0, got {alpha}")
    if alpha < 1.0 and mass * (1 - alpha**2) >= 2 * np.pi:
        raise RegimeError(
            f"mass {mass} at alpha {alpha} is not in the compact-support regime"
        )
    tol = 1e-10 * max(1.0, mass)
    lo = TAU_MARGIN
    hi = _tau_upper(alpha) - TAU_MARGIN
    f_lo = mass_of_tau(lo, alpha) - mass
    f_hi = mass_of_tau(hi, alpha) - mass
    if f_lo > 0.0:
        raise NumericalError(f"mass {mass} below the bracketed range at alpha {alpha}")
    if f_hi < 0.0:
        # Mass extremely close to the regime boundary: push the bracket out.
        hi = _tau_upper(alpha) * (1.0 - 1e-13)
        f_hi = mass_of_tau(hi, alpha) - mass
        if f_hi < 0.0:
            raise NumericalError(
                f"mass {mass} above the bracketed range at alpha {alpha}"
            )

    tau = 0.5 * (lo + hi)
    f_tau = mass_of_tau(tau, alpha) - mass
    # Bisection down to a bracket where Newton is safe.
    for _ in range(200):
        if abs(f_tau) <= tol or hi - lo < 1e-6:
            break
        if f_tau > 0.0:
            hi = tau
        else:
            lo = tau
        tau = 0.5 * (lo + hi)
        f_tau = mass_of_tau(tau, alpha) - mass
    # Newton polish with the analytic dM/dtau, safeguarded by the bracket.
    for _ in range(60):
        if abs(f_tau) <= tol:
            break
        if f_tau > 0.0:
            hi = tau
        else:
            lo = tau
        step = f_tau / mass_of_tau_derivative(tau, alpha)
        candidate = tau - step
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)
        tau = candidate
        f_tau = mass_of_tau(tau, alpha) - mass
    else:
        raise NumericalError(
            f"tau_of_mass did not converge for mass={mass}, alpha={alpha}"
        )
    if alpha > 1.0 and alpha * tau >= 1.0:
        warnings.warn(
            f"compact-support solution with alpha*tau = {alpha * tau:.6g} >= 1 "
            f"(alpha={alpha}, tau={tau:.6g}); support bound max(alpha,1)*tau < pi holds",
            SupportBoundWarning,
            stacklevel=2,
        )
    return float(tau)


def minimizer(params: ModelParams) -> SteadyState:
    """Construct the unique nonnegative energy minimizer of the given mass."""
    alpha, mass = params.alpha, params.mass
    excess = mass * (1 - alpha**2) - 2 * np.pi
    if abs(excess) <= REGIME_TOL * 2 * np.pi:
        regime = Regime.CRITICAL
    elif excess > 0.0:
        regime = Regime.POSITIVE
    else:
        regime = Regime.COMPACT_SUPPORT

    if regime is Regime.COMPACT_SUPPORT:
        tau = tau_of_mass(mass, alpha)
        a_coeff = coefficient_a(tau, alpha)
        lagrange = -(alpha**2) * (
            a_coeff * np.cos(alpha * tau) + float(particular_solution(tau, alpha))
        )
        return SteadyState(regime, alpha, mass, tau, a_coeff, float(lagrange))

    # Positive and Critical regimes share tau = pi; the cosine coefficient is
    # the tau -> pi limit of the compact-support formula, where the general
    # solution coincides with M/(2 pi) + cos(theta)/(1-alpha^2).
    a_coeff = (1 + alpha**2) / (2 * alpha * (1 - alpha**2))
    lagrange = alpha**2 * mass / (2 * np.pi)
    return SteadyState(regime, alpha, mass, np.pi, float(a_coeff), float(lagrange))


def steady_profile(state: SteadyState, theta):
    """Evaluate the minimizer profile at arbitrary angles."""
    if state.regime is Regime.POSITIVE:
        theta = np.asarray(theta, dtype=float)
        vals = state.mass / (2 * np.pi) + np.cos(np.abs(theta)) / (1 - state.alpha**2)
        return vals if vals.ndim else float(vals)
    if state.regime is Regime.CRITICAL:
        theta = np.asarray(theta, dtype=float)
        vals = (1 + np.cos(np.abs(theta))) / (1 - state.alpha**2)
        return vals if vals.ndim else float(vals)
    return _compact_profile(theta, state.tau, state.alpha, state.coeff_a)


def steady_derivative(state: SteadyState, theta):
    if state.regime in (Regime.POSITIVE, Regime.CRITICAL):
        theta = np.asarray(theta, dtype=float)
        vals = -np.sin(theta) / (1 - state.alpha**2)
        return vals if vals.ndim else float(vals)
    return _profile_deriv(theta, state.tau, state.alpha, state.coeff_a, 1)


def steady_second_derivative(state: SteadyState, theta):
    if state.regime in (Regime.POSITIVE, Regime.CRITICAL):
        theta = np.asarray(theta, dtype=float)
        vals = -np.cos(theta) / (1 - state.alpha**2)
        return vals if vals.ndim else float(vals)
    return _profile_deriv(theta, state.tau, state.alpha, state.coeff_a, 2)


def steady_third_derivative(state: SteadyState, theta):
    if state.regime in (Regime.POSITIVE, Regime.CRITICAL):
        theta = np.asarray(theta, dtype=float)
        vals = np.sin(theta) / (1 - state.alpha**2)
        return vals if vals.ndim else float(vals)
    return _profile_deriv(theta, state.tau, state.alpha, state.coeff_a, 3)


def contact_angle(state: SteadyState) -> float:
    """One-sided derivative at the support edge; zero for every minimizer.

    For the Positive regime there is no contact point and the value is 0 by
    convention (the certificate it feeds is then vacuous).
    """
    if state.regime is Regime.POSITIVE:
        return 0.0
    if state.regime is Regime.CRITICAL:
        return float(-np.sin(np.pi) / (1 - state.alpha**2))
    return float(
        -state.coeff_a * state.alpha * np.sin(state.alpha * state.tau)
        + particular_solution_deriv(state.tau, state.alpha)
    )


def min_value(state: SteadyState) -> float:
    """Minimum of the profile over the domain (attained at theta = +-pi or the dry set)."""
    if state.regime is Regime.POSITIVE:
        return state.mass / (2 * np.pi) - 1 / (1 - state.alpha**2)
    return 0.0


def evaluate_on_grid(state: SteadyState, grid: PeriodicGrid) -> PeriodicGridFunction:
    """Sample the profile at the grid nodes, clipping negative round-off to 0."""
    vals = np.asarray(steady_profile(state, grid.nodes), dtype=float)
    return PeriodicGridFunction(grid, np.maximum(vals, 0.0))


def euler_lagrange_residual(state: SteadyState, grid: PeriodicGrid) -> float:
    """Max of |u'' + alpha^2 u + cos(theta) - lambda| over the support interior.

    Uses the analytic second derivative of the closed-form profile, so a
    correctly constructed state gives a rounding-level residual.  Nodes
    within 2h of the contact points are excluded; the Positive regime has no
    contact points and is checked at every node.
    """
    theta = grid.nodes
    if state.regime is Regime.POSITIVE:
        mask = np.ones_like(theta, dtype=bool)
    else:
        mask = np.abs(theta) < state.tau - 2 * grid.spacing
    u = np.asarray(steady_profile(state, theta))
    upp = np.asarray(steady_second_derivative(state, theta))
    residual = upp + state.alpha**2 * u + np.cos(theta) - state.lagrange
    return float(np.max(np.abs(residual[mask])))


def steady_state_to_json(state: SteadyState) -> str:
    return json.dumps(
        {
            "regime": state.regime.value,
            "alpha": state.alpha,
            "mass": state.mass,
            "tau": state.tau,
            "coeff_a": state.coeff_a,
            "lagrange": state.lagrange,
        },
        indent=2,
    )


def steady_state_from_json(text: str) -> SteadyState:
    data = json.loads(text)
    return SteadyState(
        regime=Regime(data["regime"]),
        alpha=float(data["alpha"]),
        mass=float(data["mass"]),
        tau=float(data["tau"]),
        coeff_a=float(data["coeff_a"]),
        lagrange=float(data["lagrange"]),
    )
