"""Restricted (n+1)-body problem on the sphere and the hyperbolic plane.

The massless particle moves under the cotangent potential of n equal
primaries arranged as a rotating regular polygon. The package builds these
relative equilibria, integrates the particle in stereographic rotating
coordinates, and passes it through binary collisions using a local
quadratic chart around one primary or a global rational chart fixing all
of them.
"""

from .dynamics import (
    BodyState,
    ComplexState,
    ProjectedState,
    complex_hamiltonian,
    effective_potential,
    hamiltonian,
    hamiltonian_field,
    momentum_to_velocity,
    nbody_field,
    potential_closed_form,
    pullback_potential,
    restricted_field,
    velocity_to_momentum,
)
from .equilibria import (
    PolygonConfig,
    ProjectedPrimaries,
    equator_omega,
    omega_squared,
    polygon,
    primary_positions,
    primary_trajectory,
    projected_primaries,
    residual_check,
)
from .errors import (
    AmbiguityError,
    AntipodalError,
    CollisionError,
    ConvergenceError,
    CurvedRNBPError,
    DomainError,
    SingularityError,
    StepUnderflow,
)
from .geometry import (
    AmbientPoint,
    PlanePoint,
    SpaceSign,
    conformal_factor,
    cotn,
    dot,
    geodesic_distance,
    project,
    unproject,
)
from .integrate import (
    CollisionReport,
    IntegratorSettings,
    Method,
    Sample,
    Termination,
    Trajectory,
    collision_experiment,
    integrate,
    simulate_primaries,
    simulate_restricted,
)
from .kernels import BACKEND
from .regularization import (
    Chart,
    ChartKind,
    G_polynomial,
    RegularizedState,
    chart_derivative,
    chart_inverse,
    chart_map,
    chart_policy,
    energy_constant,
    momentum_map,
    regularized_field,
    regularized_hamiltonian,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
