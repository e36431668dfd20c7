"""Uniform periodic grid on (-pi, pi) with quadrature, differencing, and norms.

The whole package works on nodal samples of 2*pi-periodic functions.  The
domain is discretized by N equispaced nodes theta_j = -pi + j*h, h = 2*pi/N,
and integrals are approximated by the rectangle/trapezoid rule, which is the
natural (and for smooth periodic data spectrally accurate) quadrature here.
Derivatives use second-order centered stencils with periodic wrap-around;
deliberately not spectral, so that profiles with a curvature jump at a
contact point do not pollute the whole domain.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = [
    "PeriodicGrid",
    "PeriodicGridFunction",
    "grid_function",
    "quadrature",
    "derivative",
    "l2_norm",
    "linf_norm",
    "h1_norm",
    "write_grid_csv",
    "read_grid_csv",
]


@dataclass(frozen=True)
class PeriodicGrid:
    """Equispaced nodes on (-pi, pi) with periodic topology.

    n_points must be even (so theta = 0 and the touchdown point theta = -pi
    are both nodes) and at least 16.
    """

    n_points: int

    def __post_init__(self) -> None:
        if self.n_points < 16 or self.n_points % 2 != 0:
            raise ParameterError(
                f"n_points must be an even integer >= 16, got {self.n_points}"
            )

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.n_points

    @property
    def nodes(self) -> np.ndarray:
        return -np.pi + self.spacing * np.arange(self.n_points)


@dataclass(frozen=True)
class PeriodicGridFunction:
    """Nodal samples of a periodic function; values[j] lives at grid.nodes[j].

    Values are stored as-is: nonnegativity of film profiles is enforced by
    the operations that require it, not by the container.
    """

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_points,):
            raise ParameterError(
                f"values must have shape ({self.grid.n_points},), got {values.shape}"
            )
        object.__setattr__(self, "values", values)


def grid_function(grid: PeriodicGrid, values) -> PeriodicGridFunction:
    """Build a grid function from an array, a scalar, or a callable of theta."""
    if callable(values):
        values = values(grid.nodes)
    values = np.broadcast_to(np.asarray(values, dtype=float), (grid.n_points,)).copy()
    return PeriodicGridFunction(grid, values)


def quadrature(f: PeriodicGridFunction) -> float:
    """Integral over (-pi, pi): the trapezoid rule, h * sum(values)."""
    return f.grid.spacing * float(np.sum(f.values))


_STENCILS = {
    # offset -2, -1, 0, +1, +2 coefficients; divided by h**order
    1: (0.0, -0.5, 0.0, 0.5, 0.0),
    2: (0.0, 1.0, -2.0, 1.0, 0.0),
    3: (-0.5, 1.0, 0.0, -1.0, 0.5),
    4: (1.0, -4.0, 6.0, -4.0, 1.0),
}


def derivative(f: PeriodicGridFunction, order: int) -> PeriodicGridFunction:
    """Centered finite-difference derivative with periodic wrap, O(h^2)."""
    if order not in _STENCILS:
        raise ParameterError(f"derivative order must be in {{1,2,3,4}}, got {order}")
    coeffs = _STENCILS[order]
    h = f.grid.spacing
    v = f.values
    out = np.zeros_like(v)
    for shift, c in zip((-2, -1, 0, 1, 2), coeffs):
        if c != 0.0:
            out += c * np.roll(v, -shift)
    out /= h**order
    return PeriodicGridFunction(f.grid, out)


def l2_norm(f: PeriodicGridFunction) -> float:
    return float(np.sqrt(f.grid.spacing * np.sum(f.values**2)))


def linf_norm(f: PeriodicGridFunction) -> float:
    return float(np.max(np.abs(f.values)))


def h1_norm(f: PeriodicGridFunction) -> float:
    return float(np.sqrt(l2_norm(f) ** 2 + l2_norm(derivative(f, 1)) ** 2))


def write_grid_csv(path, f: PeriodicGridFunction) -> None:
    """Write `theta,value` rows in node order, full double precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta", "value"])
        for theta, value in zip(f.grid.nodes, f.values):
            writer.writerow([format(theta, ".17g"), format(value, ".17g")])


def read_grid_csv(path) -> PeriodicGridFunction:
    """Read a grid function written by write_grid_csv; nodes must be uniform."""
    thetas, values = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [c.strip() for c in header] != ["theta", "value"]:
            raise ParameterError(f"unexpected CSV header {header!r} in {path}")
        for row in reader:
            thetas.append(float(row[0]))
            values.append(float(row[1]))
    grid = PeriodicGrid(len(values))
    if not np.allclose(thetas, grid.nodes, atol=1e-12):
        raise ParameterError(f"nodes in {path} do not form a uniform periodic grid")
    return PeriodicGridFunction(grid, np.asarray(values))
