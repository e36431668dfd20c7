"""Steady states and evolution of a thin liquid film on a periodic domain."""

from .analysis import (
    BoundKind,
    RateReport,
    exponential_rate,
    mass_tau_curve,
    power_law_lower_bound,
    rate_report,
    touchdown_lower_bound,
)
from .errors import (
    AnalysisError,
    DomainError,
    NumericalError,
    ParameterError,
    RegimeError,
    StepFailure,
    SupportBoundWarning,
    ThinFilmError,
)
from .evolution import (
    EvolutionConfig,
    Trajectory,
    dissipation_rate,
    evolve,
    face_flux,
    flux,
    mobility,
    step,
)
from .functionals import (
    EnergyBreakdown,
    EntropyParams,
    energy,
    energy_lower_bound,
    entropy,
    entropy_growth_constant,
    entropy_production,
    regularized_entropy,
    variational_derivative,
)
from .grid import (
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
from .steady_state import (
    ModelParams,
    Regime,
    SteadyState,
    coefficient_a,
    contact_angle,
    euler_lagrange_residual,
    evaluate_on_grid,
    mass_of_tau,
    min_value,
    minimizer,
    particular_solution,
    particular_solution_deriv,
    profile,
    steady_profile,
    steady_state_from_json,
    steady_state_to_json,
    tau_of_mass,
)

__version__ = "0.1.0"
