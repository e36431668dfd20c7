import numpy as np
import pytest

from thinfilm import (
    ParameterError,
    PeriodicGrid,
    PeriodicGridFunction,
    derivative,
    grid_function,
    h1_norm,
    l2_norm,
    linf_norm,
    quadrature,
    read_grid_csv,
    write_grid_csv,
)


def test_grid_nodes_equispaced():
    g = PeriodicGrid(64)
    nodes = g.nodes
    assert nodes[0] == -np.pi
    assert np.allclose(np.diff(nodes), g.spacing)
    assert abs(g.spacing * g.n_points - 2 * np.pi) < 1e-14 * 2 * np.pi
    assert nodes[-1] == pytest.approx(np.pi - g.spacing)


@pytest.mark.parametrize("n_points", [15, 17, 8, 0, -4])
def test_grid_rejects_bad_sizes(n_points):
    with pytest.raises(ParameterError):
        PeriodicGrid(n_points)


def test_grid_function_length_checked():
    g = PeriodicGrid(16)
    with pytest.raises(ParameterError):
        PeriodicGridFunction(g, np.zeros(17))


def test_quadrature_constant():
    g = PeriodicGrid(32)
    assert quadrature(grid_function(g, 1.0)) == pytest.approx(2 * np.pi, rel=1e-15)


def test_quadrature_cos_is_zero():
    g = PeriodicGrid(64)
    assert abs(quadrature(grid_function(g, np.cos))) < 1e-13


def test_quadrature_cos_squared():
    # Exact antiderivative: integral of cos^2 over the period is pi.
    g = PeriodicGrid(64)
    f = grid_function(g, lambda th: np.cos(th) ** 2)
    assert quadrature(f) == pytest.approx(np.pi, abs=1e-12)


def test_quadrature_linear():
    g = PeriodicGrid(48)
    rng = np.random.default_rng(1)
    fv, gv = rng.normal(size=48), rng.normal(size=48)
    a, b = 1.7, -0.3
    lhs = quadrature(PeriodicGridFunction(g, a * fv + b * gv))
    rhs = a * quadrature(PeriodicGridFunction(g, fv)) + b * quadrature(
        PeriodicGridFunction(g, gv)
    )
    assert lhs == pytest.approx(rhs, abs=1e-13)


def test_derivative_sin():
    g = PeriodicGrid(256)
    d = derivative(grid_function(g, np.sin), 1)
    assert np.max(np.abs(d.values - np.cos(g.nodes))) < 1e-3


def test_derivative_annihilates_constants():
    g = PeriodicGrid(32)
    for order in (1, 2, 3, 4):
        d = derivative(grid_function(g, 2.5), order)
        assert np.max(np.abs(d.values)) == 0.0


def test_fourth_derivative_cos2():
    g = PeriodicGrid(512)
    d = derivative(grid_function(g, lambda th: np.cos(2 * th)), 4)
    assert np.max(np.abs(d.values - 16 * np.cos(2 * g.nodes))) < 1e-2


def test_derivative_rejects_bad_order():
    g = PeriodicGrid(16)
    f = grid_function(g, 0.0)
    for order in (0, 5, -1):
        with pytest.raises(ParameterError):
            derivative(f, order)


def test_derivative_integral_vanishes():
    # Discrete integration by parts: no boundary term on a periodic grid.
    g = PeriodicGrid(64)
    rng = np.random.default_rng(2)
    f = PeriodicGridFunction(g, rng.normal(size=64))
    assert abs(quadrature(derivative(f, 1))) < 1e-13


def test_first_derivative_twice_matches_second():
    g = PeriodicGrid(256)
    f = grid_function(g, lambda th: np.sin(th) + 0.3 * np.cos(2 * th))
    d11 = derivative(derivative(f, 1), 1)
    d2 = derivative(f, 2)
    assert np.max(np.abs(d11.values - d2.values)) < 5e-3


def test_derivative_second_order_convergence():
    errors = []
    for n in (64, 128, 256):
        g = PeriodicGrid(n)
        d = derivative(grid_function(g, np.sin), 1)
        errors.append(np.max(np.abs(d.values - np.cos(g.nodes))))
    assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.05)
    assert errors[1] / errors[2] == pytest.approx(4.0, rel=0.05)


def test_norms():
    g = PeriodicGrid(128)
    one = grid_function(g, 1.0)
    assert l2_norm(one) == pytest.approx(np.sqrt(2 * np.pi), rel=1e-14)
    assert linf_norm(one) == 1.0
    assert h1_norm(one) == pytest.approx(np.sqrt(2 * np.pi), rel=1e-14)
    cos = grid_function(g, np.cos)
    assert l2_norm(cos) == pytest.approx(np.sqrt(np.pi), abs=1e-12)
    zero = grid_function(g, 0.0)
    assert l2_norm(zero) == 0.0
    assert linf_norm(zero) == 0.0
    assert h1_norm(zero) == 0.0


def test_csv_roundtrip(tmp_path):
    g = PeriodicGrid(32)
    f = grid_function(g, lambda th: np.sin(th) + 2.0)
    path = tmp_path / "f.csv"
    write_grid_csv(path, f)
    g2 = read_grid_csv(path)
    assert g2.grid.n_points == 32
    np.testing.assert_array_equal(g2.values, f.values)
    header = path.read_text().splitlines()[0]
    assert header == "theta,value"
