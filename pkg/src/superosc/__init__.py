"""superosc: superintegrable oscillators on flat and curved spaces.

A library and CLI for building Hamiltonians out of the sl(2) generator
algebra (q^2, p^2, q.p), cataloguing the classical (an)harmonic
oscillators on Euclidean, spherical, hyperbolic and conformally flat
spaces, and numerically certifying their conserved quantities: bracket
residuals, involution, functional-independence ranks and drift along
symplectically integrated trajectories.
"""

from .catalog import (
    KINDS,
    IntegralFamily,
    SystemSpec,
    extra_integral,
    extra_observables,
    garnier_tag,
    hamiltonian,
    hamiltonian_observable,
    integral_family,
    spec_from_dict,
    spec_to_dict,
)
from .dynamics import (
    Trajectory,
    hamilton_rhs,
    implicit_midpoint_step,
    integrate,
    rk_reference,
    write_csv,
)
from .errors import (
    ChartDomainError,
    EvaluationDomainError,
    ExprError,
    SamplingError,
    StepFailureError,
    SuperoscError,
)
from .expr import eval_jet, expression_observable, parse, unparse
from .geometry import (
    AmbientPoint,
    beltrami_to_ambient,
    chart_lift,
    chart_transfer,
    cotangent_lift,
    darboux_scalar_curvature,
    geodesic_distance_from_origin,
    metric_eval,
    poincare_to_ambient,
)
from .jets import Jet, jet_sqrt
from .phase import (
    PhaseState,
    SL2Point,
    StateBatch,
    angular_momentum,
    casimir_integral,
    poisson_bracket,
    seed,
    sl2_realize,
    universal_integrals,
)
from .verify import (
    VerificationReport,
    chart_equivalence,
    flat_limit,
    independence_rank,
    involution_matrix,
    residual_grid,
    sample_states,
    verify_system,
)

__version__ = "0.1.0"
