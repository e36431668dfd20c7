import math

import numpy as np
import pytest

from thinfilm import (
    EvolutionConfig,
    ModelParams,
    ParameterError,
    PeriodicGrid,
    PeriodicGridFunction,
    StepFailure,
    dissipation_rate,
    evaluate_on_grid,
    evolve,
    face_flux,
    flux,
    grid_function,
    linf_norm,
    minimizer,
    mobility,
    quadrature,
    step,
)


def make_cfg(alpha=1.0, n=3.0, omega=0.0, mass=2 * np.pi, **kw):
    params = ModelParams(alpha=alpha, n=n, omega=omega, mass=mass)
    defaults = dict(t_final=1.0, eps=1e-8, dt_initial=1e-6, dt_max=0.1)
    defaults.update(kw)
    return EvolutionConfig(params=params, **defaults)


class TestMobility:
    def test_unregularized_cubic(self):
        assert mobility(2.0, 3.0, 0.0) == 8.0

    def test_regularized_value(self):
        assert mobility(1.0, 3.0, 1.0) == 0.5

    def test_degenerate_at_zero(self):
        for n in (1.5, 2.0, 3.0):
            for eps in (0.0, 1e-8, 1.0):
                assert mobility(0.0, n, eps) == 0.0

    def test_dominated_by_power(self):
        z = np.linspace(0.01, 5.0, 100)
        for eps in (1e-8, 0.1, 1.0):
            assert np.all(mobility(z, 3.0, eps) <= z**3 + 1e-15)

    def test_negative_eps_rejected(self):
        with pytest.raises(ParameterError):
            mobility(1.0, 3.0, -1e-3)


class TestEvolutionConfig:
    def test_dt_ordering_enforced(self):
        params = ModelParams(alpha=1.0, mass=1.0)
        with pytest.raises(ParameterError):
            EvolutionConfig(params=params, t_final=1.0, dt_initial=1.0, dt_max=0.1)

    def test_snapshot_times_checked(self):
        params = ModelParams(alpha=1.0, mass=1.0)
        with pytest.raises(ParameterError):
            EvolutionConfig(params=params, t_final=1.0, snapshot_times=(2.0,))


class TestFlux:
    def test_conservative_for_any_profile(self):
        # Telescoping sum: zero up to round-off relative to the flux scale
        # (rough random data has u_t ~ 1/h^4, so the comparison is relative).
        g = PeriodicGrid(128)
        rng = np.random.default_rng(0)
        cfg = make_cfg(omega=0.3)
        for _ in range(5):
            u = PeriodicGridFunction(g, rng.uniform(0.1, 2.0, size=128))
            ut = flux(u, cfg)
            scale = g.spacing * np.sum(np.abs(ut.values))
            assert abs(quadrature(ut)) < 1e-14 * scale + 1e-14

    def test_constant_profile(self):
        # J = -f(c) sin(theta) and u_t = f(c) cos(theta) up to the O(h^2)
        # factor from differencing cos across faces.
        g = PeriodicGrid(256)
        c = 1.3
        cfg = make_cfg(eps=0.0)
        u = grid_function(g, c)
        h2_error = c**3 * g.spacing**2 / 4
        faces = face_flux(u, cfg)
        theta_face = g.nodes + g.spacing / 2
        np.testing.assert_allclose(faces, -(c**3) * np.sin(theta_face), atol=h2_error)
        ut = flux(u, cfg)
        np.testing.assert_allclose(ut.values, c**3 * np.cos(g.nodes), atol=h2_error)

    def test_near_zero_at_minimizer(self):
        # Differentiating the Euler-Lagrange equation makes the continuum
        # flux vanish on the support; the discrete residual is O(h^2) from
        # the curvature jump at the contact points.
        state = minimizer(ModelParams(alpha=1.0, mass=2 * np.pi))
        cfg = make_cfg(eps=0.0)
        res = []
        for n_points in (256, 512):
            g = PeriodicGrid(n_points)
            u = evaluate_on_grid(state, g)
            res.append(linf_norm(flux(u, cfg)))
        assert res[0] < 5e-3
        assert res[1] < res[0] / 2  # at least first-order decay in h


class TestStep:
    def test_mass_conserved(self):
        g = PeriodicGrid(128)
        cfg = make_cfg()
        u = grid_function(g, lambda th: 1.0 + 0.5 * np.cos(th))
        u1 = step(u, 1e-4, cfg)
        assert quadrature(u1) == pytest.approx(quadrature(u), rel=1e-12)

    def test_fixed_point_at_minimizer(self):
        # Expected drift per unit time equals the discrete flux residual,
        # which is the independent oracle here.
        state = minimizer(ModelParams(alpha=1.0, mass=2 * np.pi))
        g = PeriodicGrid(512)
        u = evaluate_on_grid(state, g)
        cfg = make_cfg(eps=0.0)
        residual = linf_norm(flux(u, cfg))
        dt = 1e-3
        u1 = step(u, dt, cfg)
        drift = linf_norm(PeriodicGridFunction(g, u1.values - u.values))
        assert drift <= 2.0 * dt * residual

    def test_nonpositive_dt_rejected(self):
        g = PeriodicGrid(64)
        with pytest.raises(ParameterError):
            step(grid_function(g, 1.0), 0.0, make_cfg())

    def test_failure_signal_at_large_dt(self):
        # Degenerate mobility + huge dt stalls the lagged fixed point.
        state = minimizer(ModelParams(alpha=1.0, mass=2 * np.pi))
        g = PeriodicGrid(256)
        u = evaluate_on_grid(state, g)
        with pytest.raises(StepFailure):
            step(u, 10.0, make_cfg(eps=0.0, dt_max=10.0, max_newton_iters=8))


class TestEvolve:
    def test_zero_time_returns_initial(self):
        g = PeriodicGrid(64)
        u0 = grid_function(g, 1.0)
        traj = evolve(u0, make_cfg(t_final=0.0))
        assert len(traj.times) == 1
        assert traj.times[0] == 0.0
        np.testing.assert_array_equal(traj.profiles[0].values, u0.values)

    def test_record_lengths_agree(self):
        g = PeriodicGrid(64)
        traj = evolve(grid_function(g, 1.0), make_cfg(t_final=0.05))
        n = len(traj.times)
        assert len(traj.profiles) == n
        assert len(traj.energies) == n
        assert len(traj.entropies) == n
        assert len(traj.masses) == n
        assert len(traj.step_log) == n - 1

    def test_uniform_film_dissipates(self):
        g = PeriodicGrid(128)
        traj = evolve(grid_function(g, 1.0), make_cfg(t_final=1.0))
        energies = np.asarray(traj.energies)
        masses = np.asarray(traj.masses)
        assert np.all(np.diff(energies) <= 1e-9 * (1 + np.abs(energies[:-1])))
        assert energies[-1] < energies[0] - 0.1
        assert np.max(np.abs(masses - 2 * np.pi)) < 1e-8 * 2 * np.pi

    def test_minimizer_is_near_stationary(self):
        state = minimizer(ModelParams(alpha=1.0, mass=2 * np.pi))
        g = PeriodicGrid(256)
        u0 = evaluate_on_grid(state, g)
        traj = evolve(u0, make_cfg(t_final=5.0, eps=0.0, dt_max=0.5))
        assert not traj.failed
        drift = max(
            linf_norm(PeriodicGridFunction(g, p.values - u0.values))
            for p in traj.profiles
        )
        assert drift < 1e-4

    def test_rejects_bad_initial_data(self):
        g = PeriodicGrid(64)
        with pytest.raises(ParameterError):
            evolve(grid_function(g, -1.0), make_cfg())
        with pytest.raises(ParameterError):
            evolve(grid_function(g, 0.0), make_cfg())

    def test_abort_sets_failure_flag(self):
        # dt cannot shrink below dt_min = dt_initial, so the first rejected
        # step aborts the run with a partial trajectory.
        state = minimizer(ModelParams(alpha=1.0, mass=2 * np.pi))
        g = PeriodicGrid(256)
        u0 = evaluate_on_grid(state, g)
        cfg = make_cfg(
            t_final=10.0,
            eps=0.0,
            dt_initial=5.0,
            dt_min=5.0,
            dt_max=5.0,
            max_newton_iters=8,
        )
        traj = evolve(u0, cfg)
        assert traj.failed
        assert traj.failure_reason
        assert len(traj.times) >= 1

    def test_entropy_sentinel_recorded_for_dry_profiles(self):
        state = minimizer(ModelParams(alpha=1.0, mass=np.pi))
        g = PeriodicGrid(128)
        u0 = evaluate_on_grid(state, g)
        traj = evolve(u0, make_cfg(mass=np.pi, t_final=0.01, eps=0.0, dt_max=1e-3))
        assert all(s == math.inf for s in traj.entropies)

    def test_sample_interpolates(self):
        g = PeriodicGrid(64)
        traj = evolve(grid_function(g, 1.0), make_cfg(t_final=0.01))
        t_mid = 0.5 * (traj.times[3] + traj.times[4])
        mid = traj.sample(t_mid)
        expect = 0.5 * (traj.profiles[3].values + traj.profiles[4].values)
        np.testing.assert_allclose(mid.values, expect, rtol=1e-12)
        with pytest.raises(ParameterError):
            traj.sample(traj.times[-1] + 1.0)

    def test_omega_transport_conserves_mass(self):
        g = PeriodicGrid(128)
        cfg = make_cfg(omega=1.0, t_final=0.1)
        traj = evolve(grid_function(g, lambda th: 1.0 + 0.3 * np.cos(th)), cfg)
        masses = np.asarray(traj.masses)
        assert np.max(np.abs(masses - masses[0])) < 1e-10 * masses[0]
        assert not traj.failed


class TestDissipationIdentity:
    def test_energy_slope_matches_dissipation(self):
        # Smooth positive solution at fixed fine dt: the centered difference
        # of the energy tracks the discrete dissipation functional.
        g = PeriodicGrid(128)
        dt = 1e-4
        cfg = make_cfg(
            alpha=0.5,
            t_final=0.02,
            eps=0.0,
            dt_initial=dt,
            dt_min=dt,
            dt_max=dt,
        )
        traj = evolve(grid_function(g, lambda th: 1.0 + 0.3 * np.cos(th)), cfg)
        energies = np.asarray(traj.energies)
        for k in range(5, len(energies) - 1, 37):
            slope = (energies[k + 1] - energies[k - 1]) / (2 * dt)
            model = dissipation_rate(traj.profiles[k], cfg)
            assert slope == pytest.approx(model, rel=0.10)


class TestRegularizationConsistency:
    def test_eps_refinement_shrinks_difference(self):
        g = PeriodicGrid(64)
        u0 = grid_function(g, lambda th: 1.0 + 0.3 * np.cos(th))
        finals = {}
        for eps in (4e-2, 2e-2, 1e-2):
            cfg = make_cfg(
                t_final=1.0,
                eps=eps,
                dt_initial=1e-3,
                dt_min=1e-3,
                dt_max=1e-3,
                energy_tol=1e-7,
            )
            finals[eps] = evolve(u0, cfg).profiles[-1].values
        d1 = np.max(np.abs(finals[4e-2] - finals[2e-2]))
        d2 = np.max(np.abs(finals[2e-2] - finals[1e-2]))
        assert d2 < d1
