"""Evaluators for the six Chebyshev-type operator inequalities.

Each evaluator computes both sides of one inequality, combining operator
values at two independent deformation bases (q1 with parameters p1 and
weight u, q2 with parameters p2 and weight u or v), and returns an
:class:`InequalityReport` with the oriented margin and a verdict.

Margins are oriented so that margin >= 0 means the inequality holds as
printed; a verdict is "inconclusive" whenever |margin| is within
SAFETY_FACTOR times the worst truncation tail of the contributing
operator evaluations, so truncation noise can never manufacture a
violation.

Within one case the eight products per side reuse repeated operator
evaluations through a case-local memo (e.g. the plain weight operator
appears in several products).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .ekoperator import OperatorParams, ek_series
from .errors import HypothesisViolatedError, NotConvergedError
from .functions import (
    BoundsTriple,
    FunctionSpec,
    LipschitzTriple,
    check_synchronous,
    compile_expr,
    nonnegative_on,
)
from .qcore import DEFAULT_POLICY, DeformationParam, TruncationPolicy

__all__ = [
    "TheoremCase",
    "InequalityReport",
    "SAFETY_FACTOR",
    "theorem1",
    "theorem2",
    "theorem3",
    "theorem4",
    "theorem5",
    "theorem6",
    "evaluate_case",
    "proof_kernel_A",
]

# Multiplier on the worst operator tail below which a margin is treated
# as numerically indistinguishable from zero.
SAFETY_FACTOR = 10.0

_THEOREM_IDS = ("T1", "T2", "T3", "T4", "T5", "T6")


@dataclass(frozen=True)
class TheoremCase:
    """One inequality instance: evaluation point, bases, parameters,
    functions and (where required) certificates."""

    theorem_id: str
    t: float
    q1: DeformationParam
    q2: DeformationParam
    p1: OperatorParams
    p2: OperatorParams
    u: FunctionSpec
    f: FunctionSpec
    g: FunctionSpec
    h: FunctionSpec
    v: Optional[FunctionSpec] = None
    bounds: Optional[BoundsTriple] = None
    lipschitz: Optional[LipschitzTriple] = None

    def __post_init__(self):
        if self.theorem_id not in _THEOREM_IDS:
            raise ValueError(f"unknown theorem id {self.theorem_id!r}")
        if not self.t > 0.0:
            raise ValueError("evaluation point t must be positive")
        if self.theorem_id in ("T2", "T4", "T6") and self.v is None:
            raise ValueError(f"{self.theorem_id} needs a second weight v")
        if self.theorem_id in ("T3", "T4") and self.bounds is None:
            raise ValueError(f"{self.theorem_id} needs a BoundsTriple")
        if self.theorem_id in ("T5", "T6") and self.lipschitz is None:
            raise ValueError(f"{self.theorem_id} needs a LipschitzTriple")


@dataclass(frozen=True)
class InequalityReport:
    """LHS/RHS record for one case; margin >= 0 means the inequality
    holds as printed; worst_tail is the largest truncation tail among the
    operator evaluations feeding both sides."""

    case: TheoremCase
    lhs: float
    rhs: float
    margin: float
    verdict: str
    worst_tail: float
    operator_evals: int
    bracket: Optional[float] = None
    bracket_nonnegative: Optional[bool] = None
    notes: tuple[str, ...] = ()


def _verdict(margin: float, worst_tail: float) -> str:
    tol_effective = worst_tail * SAFETY_FACTOR
    if math.isnan(margin) or abs(margin) <= tol_effective:
        return "inconclusive"
    return "holds" if margin > 0.0 else "violated"


def _pointwise_product(factors, moment: int):
    m = moment
    if len(factors) == 1:
        f0, = factors
        if m == 0:
            return f0
        return lambda s: s ** m * f0(s)
    if len(factors) == 2:
        f0, f1 = factors
        if m == 0:
            return lambda s: f0(s) * f1(s)
        return lambda s: s ** m * f0(s) * f1(s)
    if len(factors) == 3:
        f0, f1, f2 = factors
        if m == 0:
            return lambda s: f0(s) * f1(s) * f2(s)
        return lambda s: s ** m * f0(s) * f1(s) * f2(s)
    f0, f1, f2, f3 = factors
    if m == 0:
        return lambda s: f0(s) * f1(s) * f2(s) * f3(s)
    return lambda s: s ** m * f0(s) * f1(s) * f2(s) * f3(s)


class _CaseOps:
    """Case-local memo over operator evaluations.

    Keys are (side, weight name, function subset, moment power); side 1
    evaluates at (q1, p1), side 2 at (q2, p2).
    """

    def __init__(self, case: TheoremCase, policy: TruncationPolicy):
        self.case = case
        self.policy = policy
        self._fns = {
            "f": compile_expr(case.f.expr),
            "g": compile_expr(case.g.expr),
            "h": compile_expr(case.h.expr),
            "u": compile_expr(case.u.expr),
        }
        if case.v is not None:
            self._fns["v"] = compile_expr(case.v.expr)
        self._memo: dict[tuple, float] = {}
        self.worst_tail = 0.0
        self.evals = 0

    def value(self, side: int, subset: str, weight: str = "u",
              moment: int = 0) -> float:
        key = (side, weight, subset, moment)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        factors = tuple(self._fns[name] for name in (weight, *subset))
        fn = _pointwise_product(factors, moment)
        q, p = ((self.case.q1, self.case.p1) if side == 1
                else (self.case.q2, self.case.p2))
        res = ek_series(fn, self.case.t, p, q, self.policy)
        self.evals += 1
        if res.tail_estimate > self.worst_tail:
            self.worst_tail = res.tail_estimate
        self._memo[key] = res.value
        return res.value


# (q2-subset, q1-subset) product pairs of the synchronous inequality:
# the first four products dominate the last four.
_CHEBYSHEV_UPPER = (("fgh", ""), ("fg", "h"), ("h", "fg"), ("", "fgh"))
_CHEBYSHEV_LOWER = (("gh", "f"), ("fh", "g"), ("f", "gh"), ("g", "fh"))

# (q1-subset, q2-subset) terms of the antisymmetric two-point-kernel
# combination shared by the bounded and Lipschitz inequalities; it is the
# double q-integral of weight(tau) weight(rho) times the product of the
# three pairwise differences.
_KERNEL_PLUS = (("fgh", ""), ("h", "fg"), ("g", "fh"), ("f", "gh"))
_KERNEL_MINUS = (("gh", "f"), ("fh", "g"), ("fg", "h"), ("", "fgh"))


def _sample_grid(t: float, n: int = 12) -> list[float]:
    return [t * k / n for k in range(1, n + 1)]


def _require_nonnegative(spec: FunctionSpec, t: float, name: str) -> None:
    if nonnegative_on(spec.expr, max(t, spec.domain_hint)):
        return
    worst = min(spec(x) for x in [0.0] + _sample_grid(t, 64))
    if worst < 0.0:
        raise HypothesisViolatedError(
            f"weight {name} must map [0,inf) into [0,inf); sampled {worst}"
        )


def _require_pairwise_synchronous(case: TheoremCase) -> None:
    grid = _sample_grid(case.t)
    for a, b, na, nb in ((case.f, case.g, "f", "g"),
                         (case.f, case.h, "f", "h"),
                         (case.g, case.h, "g", "h")):
        kind, witness = check_synchronous(a, b, grid)
        if kind != "synchronous":
            raise HypothesisViolatedError(
                f"{na} and {nb} are not synchronous (witness {witness})"
            )


def _require_reversal_hypotheses(case: TheoremCase) -> None:
    kind, witness = check_synchronous(case.f, case.g, _sample_grid(case.t))
    if kind != "asynchronous":
        raise HypothesisViolatedError(
            f"reversal case needs f, g asynchronous; scan says {kind}"
            f" (witness {witness})"
        )
    _require_nonnegative(case.h, case.t, "h")


def _require_bounds_hold(case: TheoremCase) -> None:
    b = case.bounds
    nodes = [0.0] + _sample_grid(case.t, 48)
    # Operator node sets thin out geometrically; spot-check their heads.
    for q, p in ((case.q1.q, case.p1), (case.q2.q, case.p2)):
        r = q ** (1.0 / p.beta)
        node = case.t
        for _ in range(24):
            nodes.append(node)
            node *= r
    eps = 1e-9
    for spec, lo, hi, name in ((case.f, b.psi, b.Psi, "f"),
                               (case.g, b.phi, b.Phi, "g"),
                               (case.h, b.omega, b.Omega, "h")):
        scale = eps * (1.0 + abs(lo) + abs(hi))
        for x in nodes:
            val = spec(x)
            if val < lo - scale or val > hi + scale:
                raise HypothesisViolatedError(
                    f"{name}({x}) = {val} escapes certified bounds [{lo}, {hi}]"
                )


def _require_lipschitz_holds(case: TheoremCase) -> None:
    trip = case.lipschitz
    pts = [0.0] + _sample_grid(case.t, 20)
    eps = 1e-9
    for spec, const, name in ((case.f, trip.L1, "f"),
                              (case.g, trip.L2, "g"),
                              (case.h, trip.L3, "h")):
        vals = [spec(x) for x in pts]
        for i, x in enumerate(pts):
            for j in range(i + 1, len(pts)):
                gap = abs(vals[i] - vals[j])
                allowed = const * abs(x - pts[j]) * (1.0 + eps) + 1e-12
                if gap > allowed:
                    raise HypothesisViolatedError(
                        f"{name} violates its Lipschitz certificate "
                        f"L={const} at ({x}, {pts[j]})"
                    )


def _inconclusive_report(case: TheoremCase, ops: _CaseOps,
                         reason: str) -> InequalityReport:
    nan = float("nan")
    return InequalityReport(case, nan, nan, nan, "inconclusive",
                            ops.worst_tail, ops.evals, notes=(reason,))


def _chebyshev_sides(ops: _CaseOps, weight2: str) -> tuple[float, float]:
    lhs = sum(ops.value(2, s2, weight2) * ops.value(1, s1)
              for s2, s1 in _CHEBYSHEV_UPPER)
    rhs = sum(ops.value(2, s2, weight2) * ops.value(1, s1)
              for s2, s1 in _CHEBYSHEV_LOWER)
    return lhs, rhs


def _eval_chebyshev(case: TheoremCase, policy: TruncationPolicy,
                    weight2: str, expect_reversed: bool) -> InequalityReport:
    _require_nonnegative(case.u, case.t, "u")
    if weight2 == "v":
        _require_nonnegative(case.v, case.t, "v")
    if expect_reversed:
        _require_reversal_hypotheses(case)
    else:
        _require_pairwise_synchronous(case)
    ops = _CaseOps(case, policy)
    try:
        lhs, rhs = _chebyshev_sides(ops, weight2)
    except NotConvergedError as exc:
        return _inconclusive_report(case, ops, f"not converged: {exc}")
    margin = lhs - rhs
    return InequalityReport(case, lhs, rhs, margin,
                            _verdict(margin, ops.worst_tail),
                            ops.worst_tail, ops.evals)


def theorem1(case: TheoremCase, policy: TruncationPolicy = DEFAULT_POLICY,
             expect_reversed: bool = False) -> InequalityReport:
    """Synchronous-triple inequality with one weight u on both sides.

    With ``expect_reversed`` the hypothesis check switches to the sign
    condition under which the inequality flips (f, g asynchronous and
    h >= 0); the margin is computed identically either way.
    """
    return _eval_chebyshev(case, policy, "u", expect_reversed)


def theorem2(case: TheoremCase, policy: TruncationPolicy = DEFAULT_POLICY,
             expect_reversed: bool = False) -> InequalityReport:
    """Two-weight version: v inside every q2 operator. Reduces to
    theorem1 when v = u."""
    return _eval_chebyshev(case, policy, "v", expect_reversed)


def _eval_bounded(case: TheoremCase, policy: TruncationPolicy,
                  weight2: str) -> InequalityReport:
    _require_nonnegative(case.u, case.t, "u")
    if weight2 == "v":
        _require_nonnegative(case.v, case.t, "v")
    _require_bounds_hold(case)
    ops = _CaseOps(case, policy)
    b = case.bounds
    try:
        combo = sum(ops.value(1, s1) * ops.value(2, s2, weight2)
                    for s1, s2 in _KERNEL_PLUS)
        combo -= sum(ops.value(1, s1) * ops.value(2, s2, weight2)
                     for s1, s2 in _KERNEL_MINUS)
        bound = (ops.value(1, "") * ops.value(2, "", weight2)
                 * (b.Psi - b.psi) * (b.Phi - b.phi) * (b.Omega - b.omega))
    except NotConvergedError as exc:
        return _inconclusive_report(case, ops, f"not converged: {exc}")
    lhs = abs(combo)
    margin = bound - lhs
    return InequalityReport(case, lhs, bound, margin,
                            _verdict(margin, ops.worst_tail),
                            ops.worst_tail, ops.evals)


def theorem3(case: TheoremCase,
             policy: TruncationPolicy = DEFAULT_POLICY) -> InequalityReport:
    """Bounded-difference inequality: the absolute eight-term combination
    is dominated by the product of the plain weight operators times the
    three bound gaps."""
    return _eval_bounded(case, policy, "u")


def theorem4(case: TheoremCase,
             policy: TruncationPolicy = DEFAULT_POLICY) -> InequalityReport:
    """Two-weight bounded-difference inequality. Reduces to theorem3 when
    v = u."""
    return _eval_bounded(case, policy, "v")


def _eval_lipschitz(case: TheoremCase, policy: TruncationPolicy,
                    weight2: str) -> InequalityReport:
    _require_nonnegative(case.u, case.t, "u")
    if weight2 == "v":
        _require_nonnegative(case.v, case.t, "v")
    _require_lipschitz_holds(case)
    ops = _CaseOps(case, policy)
    trip = case.lipschitz
    notes: list[str] = []
    try:
        terms = [ops.value(1, s1) * ops.value(2, s2, weight2)
                 for s1, s2 in _KERNEL_PLUS]
        neg_terms = [ops.value(1, s1) * ops.value(2, s2, weight2)
                     for s1, s2 in _KERNEL_MINUS]
        combo = sum(terms) - sum(neg_terms)
        if weight2 == "v":
            # The q2 weight of the (f | gh) product is printed as u in the
            # two-weight display; it is evaluated with v for consistency
            # with its siblings, and flagged when it dominates.
            corrected = abs(ops.value(1, "f") * ops.value(2, "gh", "v"))
            others = max(abs(x) for x in terms + neg_terms)
            if corrected >= others:
                notes.append("corrected q2-weight term dominates combination")
        # Moment bracket: double integral of u(tau) w(rho) (tau - rho)^3,
        # expanded into four moment products. The first product carries
        # weight u on the q2 side even in the two-weight version.
        bracket = (ops.value(1, "", moment=3) * ops.value(2, "", "u")
                   + 3.0 * ops.value(1, "", moment=1)
                   * ops.value(2, "", weight2, moment=2)
                   - 3.0 * ops.value(1, "", moment=2)
                   * ops.value(2, "", weight2, moment=1)
                   - ops.value(1, "") * ops.value(2, "", weight2, moment=3))
    except NotConvergedError as exc:
        return _inconclusive_report(case, ops, f"not converged: {exc}")
    lhs = abs(combo)
    rhs = trip.L1 * trip.L2 * trip.L3 * bracket
    margin = rhs - lhs
    return InequalityReport(case, lhs, rhs, margin,
                            _verdict(margin, ops.worst_tail),
                            ops.worst_tail, ops.evals,
                            bracket=bracket,
                            bracket_nonnegative=bracket >= 0.0,
                            notes=tuple(notes))


def theorem5(case: TheoremCase,
             policy: TruncationPolicy = DEFAULT_POLICY) -> InequalityReport:
    """Lipschitz-type inequality: the absolute combination against the
    L1 L2 L3-scaled moment bracket. The bracket is antisymmetric in the
    two integration variables and its sign is recorded, not asserted."""
    return _eval_lipschitz(case, policy, "u")


def theorem6(case: TheoremCase,
             policy: TruncationPolicy = DEFAULT_POLICY) -> InequalityReport:
    """Two-weight Lipschitz-type inequality. Reduces to theorem5 when
    v = u."""
    return _eval_lipschitz(case, policy, "v")


_EVALUATORS = {
    "T1": theorem1,
    "T2": theorem2,
    "T3": theorem3,
    "T4": theorem4,
    "T5": theorem5,
    "T6": theorem6,
}


def evaluate_case(case: TheoremCase, policy: TruncationPolicy = DEFAULT_POLICY,
                  expect_reversed: bool = False) -> InequalityReport:
    """Dispatch a case to its theorem evaluator."""
    fn = _EVALUATORS[case.theorem_id]
    if case.theorem_id in ("T1", "T2"):
        return fn(case, policy, expect_reversed)
    return fn(case, policy)


def proof_kernel_A(f, g, h, tau: float, rho: float) -> float:
    """Eight-term two-point kernel used by the bounded and Lipschitz
    inequalities; equals the product of the three pairwise differences
    (f(tau)-f(rho))(g(tau)-g(rho))(h(tau)-h(rho)) and is antisymmetric
    under tau <-> rho."""
    ft, fr = f(tau), f(rho)
    gt, gr = g(tau), g(rho)
    ht, hr = h(tau), h(rho)
    return (ft * gt * ht + fr * gr * ht + ft * gr * hr + fr * gt * hr
            - ft * gr * ht - fr * gr * hr - ft * gt * hr - fr * gt * ht)
