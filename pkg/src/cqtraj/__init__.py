"""Complex quantum trajectories for 1D stationary states.

Integrates particle trajectories in the complex position plane, recovers the
Born density on the real line from the velocity field, and constructs the
extended conserved probability density by closed-form boundary matching and
by the trajectory-integral method.
"""

from . import born, dynamics, errors, extended_probability, states
from .dynamics import (
    Crossing,
    CrossingSet,
    IntegratorSettings,
    PathCurve,
    Trajectory,
    Verdict,
    complex_energy,
    find_real_crossings,
    integrate_path,
    integrate_trajectory,
    path_constant,
    velocity,
    velocity_alt,
)
from .born import RealLineGrid, born_direct, born_from_velocity, default_real_grid, expectation
from .extended_probability import (
    ProbabilityField,
    TrajectoryDensity,
    boundary_f,
    closed_form_rho,
    compare_methods,
    divergence_residual,
    evaluate_closed_field,
    h_solution,
    poirier_density,
    rho_via_trajectory,
)
from .states import (
    ConstantPotentialWave,
    HarmonicOscillator,
    InfiniteSquareWell,
    PotentialStep,
    StateSpec,
    UnitSystem,
    WavefunctionSample,
    energy,
    evaluate,
    nodes,
    parse_state,
)

__version__ = "0.1.0"
