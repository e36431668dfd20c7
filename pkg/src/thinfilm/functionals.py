"""Energy and entropy functionals of film profiles, with their explicit bounds.

The energy

    E(u) = 1/2 * int(u_theta^2 - alpha^2 u^2) - int(u cos(theta))

drives the evolution as a generalized gradient flow and is bounded below on
each mass class.  The entropy S(u) = int(u^(-beta)), beta = n - 3/2, is not
monotone along solutions but grows at most linearly, with an explicit rate
constant K0 depending only on mass, alpha, and the initial energy.  The
regularized entropy uses the density s_eps(z) = z^(-3/2)(1 + (3/7) eps/z),
matched to the regularized mobility z^4/(|z|+eps) so that
s_eps''(z) * f_eps(z) = (15/4) z^(-1/2) exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .grid import PeriodicGridFunction, derivative, quadrature

__all__ = [
    "EnergyBreakdown",
    "EntropyParams",
    "energy",
    "variational_derivative",
    "energy_lower_bound",
    "entropy",
    "regularized_entropy",
    "entropy_growth_constant",
    "entropy_production",
]


@dataclass(frozen=True)
class EnergyBreakdown:
    """The three additive terms of the energy and their sum."""

    gradient_term: float
    quadratic_term: float
    forcing_term: float
    total: float

    def to_dict(self) -> dict:
        return {
            "gradient_term": self.gradient_term,
            "quadratic_term": self.quadratic_term,
            "forcing_term": self.forcing_term,
            "total": self.total,
        }


@dataclass(frozen=True)
class EntropyParams:
    """Entropy exponent data: beta = n - 3/2, c_n = (n - 3/2)(n - 1/2)."""

    n: float

    def __post_init__(self) -> None:
        if not self.n > 1.5:
            raise ParameterError(f"entropy requires n > 3/2, got n={self.n}")

    @property
    def beta(self) -> float:
        return self.n - 1.5

    @property
    def c_n(self) -> float:
        return (self.n - 1.5) * (self.n - 0.5)


def energy(u: PeriodicGridFunction, alpha: float) -> EnergyBreakdown:
    """Discrete energy: quadrature of the three terms, derivative by differences."""
    du = derivative(u, 1)
    grad = 0.5 * quadrature(PeriodicGridFunction(u.grid, du.values**2))
    quadr = -0.5 * alpha**2 * quadrature(PeriodicGridFunction(u.grid, u.values**2))
    forcing = -quadrature(
        PeriodicGridFunction(u.grid, u.values * np.cos(u.grid.nodes))
    )
    return EnergyBreakdown(grad, quadr, forcing, grad + quadr + forcing)


def variational_derivative(u: PeriodicGridFunction, alpha: float) -> PeriodicGridFunction:
    """L2-gradient of the energy: -u_thetatheta - alpha^2 u - cos(theta)."""
    d2 = derivative(u, 2)
    vals = -d2.values - alpha**2 * u.values - np.cos(u.grid.nodes)
    return PeriodicGridFunction(u.grid, vals)


def energy_lower_bound(mass: float, alpha: float) -> float:
    """Coercivity floor: -M^2 alpha^2 (2 + alpha^2)/(4 pi) - M."""
    if not mass > 0.0:
        raise ParameterError(f"mass must be > 0, got {mass}")
    return -(mass**2) * alpha**2 * (2 + alpha**2) / (4 * np.pi) - mass


def entropy(u: PeriodicGridFunction, params: EntropyParams) -> float:
    """Quadrature of u^(-beta); +inf sentinel if the profile touches zero.

    The sentinel (rather than an error) mirrors the entropy's role as a
    barrier: finite along positive solutions, infinite at dry profiles.
    """
    if np.any(u.values <= 0.0):
        return math.inf
    return quadrature(PeriodicGridFunction(u.grid, u.values ** (-params.beta)))


def regularized_entropy(u: PeriodicGridFunction, eps: float) -> float:
    """Quadrature of s_eps(u) = u^(-3/2) (1 + (3/7) eps/u); n = 3 only."""
    if eps < 0.0:
        raise ParameterError(f"eps must be >= 0, got {eps}")
    if np.any(u.values <= 0.0):
        return math.inf
    v = u.values
    return quadrature(PeriodicGridFunction(u.grid, v**-1.5 * (1 + (3.0 / 7.0) * eps / v)))


def entropy_growth_constant(
    mass: float, alpha: float, params: EntropyParams, e0: float
) -> float:
    """Linear entropy growth rate K0 for a trajectory of initial energy e0.

    K0 = c_n * { (M alpha^2 / 4) * [ (M/2pi)(1+alpha^2)
         + sqrt( 2(E0+M)/pi + (M^2/4pi^2) alpha^2 (2+alpha^2) ) ]^(1/2)
         + 2 sqrt(M pi) }.
    """
    if not mass > 0.0:
        raise ParameterError(f"mass must be > 0, got {mass}")
    if e0 < energy_lower_bound(mass, alpha):
        raise ParameterError(
            f"e0={e0} lies below the energy lower bound "
            f"{energy_lower_bound(mass, alpha)}"
        )
    inner = 2 * (e0 + mass) / np.pi + mass**2 / (4 * np.pi**2) * alpha**2 * (
        2 + alpha**2
    )
    if inner < 0.0:
        raise ParameterError(
            f"inner radicand negative ({inner}); e0={e0} too close to the energy floor"
        )
    bracket = mass / (2 * np.pi) * (1 + alpha**2) + np.sqrt(inner)
    return float(
        params.c_n * (mass * alpha**2 / 4 * np.sqrt(bracket) + 2 * np.sqrt(mass * np.pi))
    )


def entropy_production(
    u: PeriodicGridFunction, alpha: float, params: EntropyParams
) -> float:
    """Instantaneous dS/dt in completed-square form, with discrete derivatives.

    c_n * { -int sqrt(u) (2 (sqrt(u))'' - (alpha^2/2) sqrt(u))^2
            + (alpha^4/4) int u^(3/2) + 2 int sqrt(u) cos(theta) }.

    The first term is nonpositive, which is what makes the growth constant
    K0 an upper bound.
    """
    if np.any(u.values <= 0.0):
        raise DomainError("entropy production requires a strictly positive profile")
    root = PeriodicGridFunction(u.grid, np.sqrt(u.values))
    root_dd = derivative(root, 2)
    square = root.values * (2 * root_dd.values - 0.5 * alpha**2 * root.values) ** 2
    term1 = -quadrature(PeriodicGridFunction(u.grid, square))
    term2 = alpha**4 / 4 * quadrature(
        PeriodicGridFunction(u.grid, u.values**1.5)
    )
    term3 = 2 * quadrature(
        PeriodicGridFunction(u.grid, root.values * np.cos(u.grid.nodes))
    )
    return float(params.c_n * (term1 + term2 + term3))
