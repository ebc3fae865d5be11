"""Inequality evaluators: kernel identities, margin signs on known cases,
reduction chains, hypothesis enforcement, and verdict semantics."""

import dataclasses
import math
import random

import pytest

from qek.ekoperator import OperatorParams, ek_series
from qek.errors import HypothesisViolatedError
from qek.functions import (
    BoundsTriple,
    LipschitzTriple,
    generate_family,
    generate_weight,
    parse_function_spec,
)
from qek.inequalities import (
    SAFETY_FACTOR,
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
from qek.qcore import DeformationParam, TruncationPolicy

U1 = parse_function_spec("(const 1)", 2.0)
IDENT = parse_function_spec("(power 1)", 2.0)
CONST2 = parse_function_spec("(const 2)", 2.0)
DEC = parse_function_spec("(affine -1 2)", 2.0)


def make_case(theorem_id, f, g, h, u=U1, v=None, t=1.0, q1=0.5, q2=0.5,
              p1=(0.0, 1.0, 1.0), p2=(0.0, 1.0, 1.0), bounds=None,
              lipschitz=None):
    return TheoremCase(
        theorem_id=theorem_id, t=t,
        q1=DeformationParam(q1), q2=DeformationParam(q2),
        p1=OperatorParams(*p1), p2=OperatorParams(*p2),
        u=u, f=f, g=g, h=h, v=v, bounds=bounds, lipschitz=lipschitz,
    )


class TestProofKernel:
    def test_constants_vanish(self):
        c = lambda t: 3.0  # noqa: E731
        assert proof_kernel_A(c, c, c, 2.0, 1.0) == 0.0

    def test_equal_arguments_vanish(self):
        f = lambda t: t * t  # noqa: E731
        assert proof_kernel_A(f, f, f, 1.5, 1.5) == 0.0

    def test_identity_functions_hand_value(self):
        ident = lambda t: t  # noqa: E731
        # eight-term expansion at (2, 1) collapses to (2-1)^3
        assert proof_kernel_A(ident, ident, ident, 2.0, 1.0) == pytest.approx(1.0)

    def test_matches_difference_product_at_random_pairs(self):
        rng = random.Random(101)
        for trial in range(100):
            fam = generate_family("synchronous_triple", trial, 2.0)
            f, g, h = fam.specs
            tau, rho = rng.uniform(0, 2), rng.uniform(0, 2)
            direct = proof_kernel_A(f, g, h, tau, rho)
            factored = ((f(tau) - f(rho)) * (g(tau) - g(rho))
                        * (h(tau) - h(rho)))
            assert direct == pytest.approx(factored, rel=1e-12, abs=1e-12)

    def test_antisymmetry_at_random_pairs(self):
        rng = random.Random(202)
        for trial in range(100):
            fam = generate_family("lipschitz_triple", trial, 2.0)
            f, g, h = fam.specs
            tau, rho = rng.uniform(0, 2), rng.uniform(0, 2)
            fwd = proof_kernel_A(f, g, h, tau, rho)
            bwd = proof_kernel_A(f, g, h, rho, tau)
            assert fwd == pytest.approx(-bwd, rel=1e-12, abs=1e-12)


class TestTheoremCaseValidation:
    def test_unknown_id(self):
        with pytest.raises(ValueError):
            make_case("T9", IDENT, IDENT, IDENT)

    def test_missing_v(self):
        with pytest.raises(ValueError):
            make_case("T2", IDENT, IDENT, IDENT)

    def test_missing_bounds(self):
        with pytest.raises(ValueError):
            make_case("T3", IDENT, IDENT, IDENT)

    def test_missing_lipschitz(self):
        with pytest.raises(ValueError):
            make_case("T5", IDENT, IDENT, IDENT)


class TestTheoremOne:
    def test_constant_triple_margin_zero(self):
        case = make_case("T1", CONST2, CONST2, CONST2, q2=0.7,
                         p1=(0.5, 1.5, 2.0))
        rep = theorem1(case)
        scale = max(1.0, abs(rep.lhs), abs(rep.rhs))
        assert abs(rep.margin) <= 1e-12 * scale

    def test_identity_triple_holds(self):
        case = make_case("T1", IDENT, IDENT, IDENT)
        rep = theorem1(case)
        assert rep.margin >= 0.0
        assert rep.verdict == "holds"
        assert rep.operator_evals == 16

    def test_reversal_case_nonpositive_margin(self):
        case = make_case("T1", IDENT, DEC, U1)
        rep = theorem1(case, expect_reversed=True)
        assert rep.margin <= 0.0

    def test_synchronicity_enforced(self):
        case = make_case("T1", IDENT, DEC, U1)
        with pytest.raises(HypothesisViolatedError):
            theorem1(case)

    def test_reversal_hypotheses_enforced(self):
        case = make_case("T1", IDENT, IDENT, IDENT)
        with pytest.raises(HypothesisViolatedError):
            theorem1(case, expect_reversed=True)

    def test_negative_weight_rejected(self):
        bad_u = parse_function_spec("(affine 1 -0.5)", 2.0)
        case = make_case("T1", IDENT, IDENT, IDENT, u=bad_u)
        with pytest.raises(HypothesisViolatedError):
            theorem1(case)

    def test_not_converged_goes_inconclusive(self):
        case = make_case("T1", IDENT, IDENT, IDENT, q1=0.9)
        rep = theorem1(case, TruncationPolicy(max_terms=5))
        assert rep.verdict == "inconclusive"
        assert rep.notes
        assert math.isnan(rep.margin)

    def test_scale_covariance(self):
        base = make_case("T1", IDENT, IDENT, IDENT,
                         u=parse_function_spec("(affine 1 0.5)", 2.0),
                         q2=0.7, p2=(0.5, 1.5, 2.0))
        scaled = dataclasses.replace(
            base, u=parse_function_spec("(scale 3 (affine 1 0.5))", 2.0))
        rep1 = theorem1(base)
        rep9 = theorem1(scaled)
        assert rep9.margin == pytest.approx(9.0 * rep1.margin, rel=1e-12)

    def test_random_synchronous_cases_hold(self):
        for seed in range(25):
            fam = generate_family("synchronous_triple", seed, 1.0)
            case = make_case("T1", fam.f, fam.g, fam.h,
                             u=generate_weight(seed, 1.0),
                             q1=0.6, q2=0.4, p1=(0.5, 0.7, 2.0),
                             p2=(-0.5, 1.3, 0.5))
            rep = theorem1(case)
            assert rep.verdict != "violated"


class TestTheoremTwo:
    def test_reduces_to_theorem_one_when_v_equals_u(self):
        u = generate_weight(5, 1.0)
        fam = generate_family("synchronous_triple", 5, 1.0)
        base = make_case("T1", fam.f, fam.g, fam.h, u=u, q2=0.7,
                         p2=(0.5, 1.5, 2.0))
        two = dataclasses.replace(base, theorem_id="T2", v=u)
        rep1 = theorem1(base)
        rep2 = theorem2(two)
        assert abs(rep2.margin - rep1.margin) <= 1e-13 * max(1.0, abs(rep1.margin))

    def test_distinct_weights_hold(self):
        fam = generate_family("synchronous_triple", 8, 1.0)
        case = make_case("T2", fam.f, fam.g, fam.h, u=U1,
                         v=parse_function_spec("(power 1)", 2.0))
        rep = theorem2(case)
        assert rep.margin >= -SAFETY_FACTOR * rep.worst_tail
        assert rep.verdict != "violated"


class TestTheoremThree:
    def test_constant_triple(self):
        bounds = BoundsTriple(2.0, 2.0, 2.0, 2.0, 2.0, 2.0)
        case = make_case("T3", CONST2, CONST2, CONST2, bounds=bounds)
        rep = theorem3(case)
        assert rep.lhs <= 1e-12
        assert rep.rhs == 0.0

    def test_seeded_bounded_triple_holds(self):
        fam = generate_family("bounded_triple", 7, 1.0)
        case = make_case("T3", fam.f, fam.g, fam.h, bounds=fam.bounds)
        rep = theorem3(case)
        assert rep.margin >= 0.0
        assert rep.verdict == "holds"

    def test_tight_unit_bounds_hold(self):
        bounds = BoundsTriple(0.0, 1.0, 0.0, 1.0, 0.0, 1.0)
        case = make_case("T3", IDENT, IDENT, IDENT, bounds=bounds)
        rep = theorem3(case)
        assert rep.margin >= 0.0

    def test_escaping_bounds_detected(self):
        bounds = BoundsTriple(0.0, 0.5, 0.0, 1.0, 0.0, 1.0)  # f escapes 0.5
        case = make_case("T3", IDENT, IDENT, IDENT, bounds=bounds)
        with pytest.raises(HypothesisViolatedError):
            theorem3(case)


class TestTheoremFour:
    def test_reduces_to_theorem_three_when_v_equals_u(self):
        fam = generate_family("bounded_triple", 11, 1.0)
        u = generate_weight(11, 1.0)
        base = make_case("T3", fam.f, fam.g, fam.h, u=u, bounds=fam.bounds,
                         q1=0.3, q2=0.8, p1=(1.0, 0.5, 1.0), p2=(0.0, 2.0, 2.0))
        four = dataclasses.replace(base, theorem_id="T4", v=u)
        rep3 = theorem3(base)
        rep4 = theorem4(four)
        assert abs(rep4.margin - rep3.margin) <= 1e-13 * max(1.0, abs(rep3.margin))

    def test_two_weight_case_holds(self):
        fam = generate_family("bounded_triple", 11, 1.0)
        case = make_case("T4", fam.f, fam.g, fam.h, bounds=fam.bounds,
                         v=parse_function_spec("(power 2)", 2.0))
        rep = theorem4(case)
        assert rep.margin >= 0.0


class TestTheoremFive:
    def test_constant_triple_zero_both_sides(self):
        trip = LipschitzTriple(0.0, 0.0, 0.0)
        case = make_case("T5", CONST2, CONST2, CONST2, lipschitz=trip)
        rep = theorem5(case)
        assert rep.lhs <= 1e-12
        assert rep.rhs == 0.0
        assert rep.bracket is not None

    def test_symmetric_identity_case_vanishes(self):
        trip = LipschitzTriple(1.0, 1.0, 1.0)
        case = make_case("T5", IDENT, IDENT, IDENT, lipschitz=trip)
        rep = theorem5(case)
        # identical weights and parameters on both sides: the combination
        # and the cubic bracket are antisymmetric, so both cancel exactly
        assert rep.lhs == 0.0
        assert rep.bracket == 0.0
        assert rep.bracket_nonnegative is True

    def test_seeded_case_reports_bracket(self):
        fam = generate_family("lipschitz_triple", 13, 1.0)
        case = make_case("T5", fam.f, fam.g, fam.h, lipschitz=fam.lipschitz,
                         q1=0.4, q2=0.7, p1=(0.0, 1.0, 1.0), p2=(0.5, 0.5, 2.0))
        rep = theorem5(case)
        assert rep.bracket is not None
        assert rep.bracket_nonnegative == (rep.bracket >= 0.0)
        assert rep.verdict in ("holds", "violated", "inconclusive")

    def test_undersized_certificate_detected(self):
        trip = LipschitzTriple(0.1, 1.0, 1.0)  # identity needs L >= 1
        case = make_case("T5", IDENT, IDENT, IDENT, lipschitz=trip)
        with pytest.raises(HypothesisViolatedError):
            theorem5(case)


class TestTheoremSix:
    def test_reduces_to_theorem_five_when_v_equals_u(self):
        fam = generate_family("lipschitz_triple", 17, 1.0)
        u = generate_weight(17, 1.0)
        base = make_case("T5", fam.f, fam.g, fam.h, u=u,
                         lipschitz=fam.lipschitz, q1=0.35, q2=0.75,
                         p1=(0.5, 1.5, 0.5), p2=(-0.5, 0.7, 1.0))
        six = dataclasses.replace(base, theorem_id="T6", v=u)
        rep5 = theorem5(base)
        rep6 = theorem6(six)
        assert abs(rep6.margin - rep5.margin) <= 1e-13 * max(1.0, abs(rep5.margin))
        assert rep6.bracket == pytest.approx(rep5.bracket, rel=1e-13)

    def test_two_weight_case_runs_and_flags_consistently(self):
        fam = generate_family("lipschitz_triple", 17, 1.0)
        v = parse_function_spec("(affine 1 1)", 2.0)
        case = make_case("T6", fam.f, fam.g, fam.h, v=v,
                         lipschitz=fam.lipschitz, q1=0.5, q2=0.6,
                         p1=(0.0, 1.0, 1.0), p2=(0.5, 0.7, 2.0))
        rep = theorem6(case)
        assert rep.bracket is not None
        # recompute the eight combination terms to confirm the dominance flag
        def op(params, q, w, names):
            fns = {"f": case.f, "g": case.g, "h": case.h}
            prod = lambda s: w(s) * math.prod(fns[n](s) for n in names)  # noqa: E731
            return ek_series(prod, case.t, params, q).value

        pairs = [("fgh", ""), ("h", "fg"), ("g", "fh"), ("f", "gh"),
                 ("gh", "f"), ("fh", "g"), ("fg", "h"), ("", "fgh")]
        magnitudes = [abs(op(case.p1, case.q1, case.u, s1)
                          * op(case.p2, case.q2, v, s2))
                      for s1, s2 in pairs]
        corrected = magnitudes[3]  # the (f | gh) product
        flagged = "corrected q2-weight term dominates combination" in rep.notes
        assert flagged == (corrected >= max(magnitudes))


class TestVerdictSemantics:
    def test_inconclusive_band(self):
        # margin exactly zero with nonzero tails must be inconclusive
        case = make_case("T1", CONST2, CONST2, CONST2)
        rep = theorem1(case)
        assert rep.worst_tail > 0.0
        assert abs(rep.margin) <= rep.worst_tail * SAFETY_FACTOR
        assert rep.verdict == "inconclusive"

    def test_dispatch_matches_direct_calls(self):
        fam = generate_family("synchronous_triple", 3, 1.0)
        case = make_case("T1", fam.f, fam.g, fam.h)
        assert evaluate_case(case) == theorem1(case)

    def test_report_invariant_on_sample(self):
        for seed in range(10):
            fam = generate_family("synchronous_triple", seed, 1.0)
            case = make_case("T1", fam.f, fam.g, fam.h,
                             u=generate_weight(seed + 50, 1.0))
            rep = theorem1(case)
            if abs(rep.margin) <= rep.worst_tail * SAFETY_FACTOR:
                assert rep.verdict == "inconclusive"
            else:
                assert rep.verdict in ("holds", "violated")
