import numpy as np
import pytest

from thinfilm import EvolutionConfig, ModelParams, PeriodicGrid, evolve, grid_function


@pytest.fixture(scope="session")
def dry_film_run():
    """The reference long run: alpha=1, n=3, omega=0, u0=1, N=256, t_final=1000.

    Shared by the conservation/dissipation and power-law acceptance checks;
    the first covers t <= 100, the second the full run.
    """
    params = ModelParams(alpha=1.0, n=3.0, omega=0.0, mass=2 * np.pi)
    cfg = EvolutionConfig(
        params=params,
        t_final=1000.0,
        eps=1e-8,
        dt_initial=1e-6,
        dt_min=1e-12,
        dt_max=1.0,
    )
    grid = PeriodicGrid(256)
    traj = evolve(grid_function(grid, 1.0), cfg)
    assert not traj.failed, traj.failure_reason
    return params, cfg, traj
