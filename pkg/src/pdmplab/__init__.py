"""pdmplab: simulation and regularity diagnostics for randomly switched
ODE systems (piecewise-deterministic Markov processes)."""

__version__ = "0.1.0"

from .exprparse import ExprAst, ExprDomainError, ExprSyntaxError, eval_expr, parse_expr
from .vecfield import (
    Dual,
    DualVector,
    VectorFieldSpec,
    affine_field,
    divergence,
    eval_field,
    expression_field,
    jacobian,
)
from .switching import (
    RateMatrix,
    SwitchingRecord,
    sample_chain,
    scale,
    stationary_law,
    validate_rate_matrix,
)
from .flow import FlowResult, affine_flow, composite_flow, flow, transport_density
from .liealg import (
    BracketField,
    RankReport,
    accessibility_sample,
    bracket_family,
    hormander_rank,
    lie_bracket,
    submersion_rank,
    submersion_search,
)
from .pdmp import (
    Box,
    BoxExitError,
    PdmpConfig,
    Trajectory,
    regeneration_samples,
    simulate,
    simulate_batch,
)
from .density import (
    BlowupReport,
    DensityGrid,
    InsufficientSamplesError,
    blowup_diagnostic,
    estimate_density,
    estimate_density_multi,
    smoothness_probe,
)
from .averaged import AttractorEstimate, attractor_estimate, averaged_field, q0_membership
from .singularity import (
    GammaCandidate,
    SingularityVerdict,
    blowup_exponent,
    check_backward_invariance,
    compute_R,
    full_verdict,
)
