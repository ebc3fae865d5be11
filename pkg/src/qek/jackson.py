"""q-differentiation and Jackson q-integration.

Integrands may be plain callables or :class:`~qek.functions.FunctionSpec`
objects (which are callable). Functions are never evaluated at 0: every
node set {b * q^j} stays strictly positive, so integrands only need to be
defined on (0, b]. Convergence of the node series requires the integrand
to behave like t^p near 0 with p > -1; specs carrying a
``c_lambda_exponent`` attribute are checked against that bound.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError
from .qcore import (
    DEFAULT_POLICY,
    DeformationParam,
    SeriesResult,
    TruncationPolicy,
    as_deformation,
    sum_series,
)

__all__ = [
    "QGridSample",
    "q_derivative",
    "jackson_integral",
    "jackson_integral_ab",
    "jackson_stieltjes",
]


@dataclass(frozen=True)
class QGridSample:
    """Geometric sample of a function on the node set {base^j * b}.

    ``values`` holds (node, f(node)) pairs with nodes strictly decreasing
    toward 0; the node count follows the policy that produced the sample.
    """

    base_point: float
    base: DeformationParam
    values: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.base_point > 0.0:
            raise ValueError("base_point must be positive")
        nodes = [node for node, _ in self.values]
        if any(n2 >= n1 for n1, n2 in zip(nodes, nodes[1:])):
            raise ValueError("nodes must be strictly decreasing")
        if nodes and nodes[-1] <= 0.0:
            raise ValueError("nodes must stay strictly positive")

    @classmethod
    def sample(cls, f, base_point: float, base: DeformationParam | float,
               policy: TruncationPolicy = DEFAULT_POLICY) -> "QGridSample":
        """Sample f on {base^j * base_point} until base^j < rel_tol."""
        b = as_deformation(base)
        values = []
        node = float(base_point)
        scale = 1.0
        while scale >= policy.rel_tol and len(values) < policy.max_terms:
            values.append((node, f(node)))
            scale *= b.q
            node = base_point * scale
        return cls(float(base_point), b, tuple(values))


def _check_integrable(f) -> None:
    p = getattr(f, "c_lambda_exponent", None)
    if p is not None and p <= -1.0:
        raise DomainError(
            f"integrand decays like t^{p} near 0; need exponent > -1"
        )


def q_derivative(f, t: float, q: DeformationParam | float) -> float:
    """q-difference quotient (f(qt) - f(t)) / ((q - 1) t)."""
    if t == 0.0:
        raise DomainError("q_derivative undefined at t = 0")
    qv = as_deformation(q).q
    try:
        num = f(qv * t) - f(t)
    except DomainError:
        raise
    except (ValueError, OverflowError) as exc:
        raise DomainError(f"function not evaluable near t={t}: {exc}") from exc
    return num / ((qv - 1.0) * t)


def jackson_integral(f, b: float, q: DeformationParam | float,
                     policy: TruncationPolicy = DEFAULT_POLICY) -> SeriesResult:
    """Jackson integral of f over (0, b]: (1-q) b sum_j q^j f(q^j b)."""
    if not b > 0.0:
        raise ValueError(f"upper limit must be positive, got {b}")
    qv = as_deformation(q).q
    _check_integrable(f)

    def terms():
        qj = 1.0
        while True:
            yield qj * f(b * qj)
            qj *= qv

    inner = sum_series(terms(), policy, qv, what=f"jackson_integral(b={b})")
    scale = (1.0 - qv) * b
    return SeriesResult(inner.value * scale, inner.terms_used,
                        inner.tail_estimate * scale, inner.converged)


def jackson_integral_ab(f, a: float, b: float, q: DeformationParam | float,
                        policy: TruncationPolicy = DEFAULT_POLICY) -> SeriesResult:
    """Definite Jackson integral over [a, b] as the difference of the two
    integrals from 0; tails of both halves add."""
    if not (a > 0.0 and b > 0.0):
        raise ValueError("limits must be positive")
    if a == b:
        return SeriesResult(0.0, 0, 0.0, True)
    # a > b handled by antisymmetry (plumbing convenience).
    sign = 1.0
    if a > b:
        a, b = b, a
        sign = -1.0
    upper = jackson_integral(f, b, q, policy)
    lower = jackson_integral(f, a, q, policy)
    return SeriesResult(
        sign * (upper.value - lower.value),
        upper.terms_used + lower.terms_used,
        upper.tail_estimate + lower.tail_estimate,
        upper.converged and lower.converged,
    )


def jackson_stieltjes(f, g, b: float, q: DeformationParam | float,
                      policy: TruncationPolicy = DEFAULT_POLICY) -> SeriesResult:
    """Stieltjes-form Jackson integral sum_j f(q^j b)(g(q^j b) - g(q^(j+1) b)).

    Reduces to the plain Jackson integral when g is the identity.
    """
    if not b > 0.0:
        raise ValueError(f"upper limit must be positive, got {b}")
    qv = as_deformation(q).q
    _check_integrable(f)

    def terms():
        qj = 1.0
        g_here = g(b)
        while True:
            qj_next = qj * qv
            g_next = g(b * qj_next)
            yield f(b * qj) * (g_here - g_next)
            qj = qj_next
            g_here = g_next

    return sum_series(terms(), policy, qv, what=f"jackson_stieltjes(b={b})")
