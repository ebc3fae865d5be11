"""q-calculus numerics with error-controlled truncation.

Layers, bottom up:

* :mod:`qek.qcore` -- q-shifted factorials, q-Gamma, q-powers, all under an
  explicit truncation policy with certified tail estimates.
* :mod:`qek.jackson` -- q-derivative and Jackson q-integration.
* :mod:`qek.functions` -- a closed function DSL with certified monotonicity,
  bounds and Lipschitz metadata, plus seeded family generation.
* :mod:`qek.ekoperator` -- the generalized Erdelyi-Kober fractional
  q-integral operator (series and integral forms) and the Kober operator.
* :mod:`qek.inequalities` -- evaluators for six Chebyshev-type operator
  inequalities with margin/verdict reports.
* :mod:`qek.cli` -- the ``qek`` command line front end (eval, verify,
  sweep, reduce-check).
"""

from .errors import (
    DomainError,
    HypothesisViolatedError,
    NotConvergedError,
    NotLipschitzError,
    PoleError,
    QekError,
)
from .qcore import (
    DEFAULT_POLICY,
    DeformationParam,
    SeriesResult,
    TruncationPolicy,
    q_factorial,
    q_gamma,
    q_pochhammer_alpha,
    q_pochhammer_inf,
    q_pochhammer_n,
    q_power,
    q_power_alpha,
)
from .jackson import (
    QGridSample,
    jackson_integral,
    jackson_integral_ab,
    jackson_stieltjes,
    q_derivative,
)
from .functions import (
    Affine,
    BoundsTriple,
    Const,
    FunctionFamily,
    FunctionSpec,
    LipschitzTriple,
    PiecewiseLinear,
    Power,
    Product,
    Scale,
    Sum,
    check_synchronous,
    extract_bounds,
    extract_lipschitz,
    function_spec,
    generate_family,
    generate_weight,
    parse_expr,
    parse_function_spec,
    format_expr,
)
from .ekoperator import (
    OperatorParams,
    OperatorResult,
    ek_integral,
    ek_series,
    ek_weighted,
    kober,
)
from .inequalities import (
    InequalityReport,
    TheoremCase,
    evaluate_case,
    proof_kernel_A,
    theorem1,
    theorem2,
    theorem3,
    theorem4,
    theorem5,
    theorem6,
)

__version__ = "0.1.0"
