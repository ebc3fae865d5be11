"""Generalized Erdelyi-Kober fractional q-integral operators.

The operator with parameters (eta, mu, beta) at deformation base q has two
equivalent representations:

* series (normative):
    beta (1 - q^(1/beta)) (1-q)^(mu-1)
        * sum_k [(q^mu; q)_k / (q; q)_k] q^(k(eta+1)) f(t q^(k/beta))
* integral (kept as an independent oracle):
    beta t^(-beta(eta+mu)) / GammaQ(mu)
        * int_0^t (t^beta - tau^beta q)_(mu-1) tau^(beta(eta+1)-1) f(tau) d_q tau
  with the Jackson integration in tau running on base q^(1/beta), the
  unique base whose node set t q^(k/beta) matches the series.

The Kober operator is the beta = 1 member, evaluated from its own
integral form so the reduction identity is a real cross-check.

All series weights are positive for mu > 0, so each retained term keeps
the sign of f at its node; results report the smallest scaled term so
nonnegativity of the operator can be checked term by term.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError, NotConvergedError
from .functions import FunctionSpec, compile_expr
from .qcore import (
    DEFAULT_POLICY,
    DeformationParam,
    SeriesResult,
    TruncationPolicy,
    as_deformation,
    q_gamma,
    q_power_alpha,
)

__all__ = [
    "OperatorParams",
    "OperatorResult",
    "ek_series",
    "ek_integral",
    "kober",
    "ek_weighted",
]


@dataclass(frozen=True)
class OperatorParams:
    """Order-shift eta, fractional order mu, deformation exponent beta.

    eta > -1 makes the series term ratio q^(eta+1) < 1 (convergence);
    mu > 0 and beta > 0 keep every series weight positive.
    """

    eta: float
    mu: float
    beta: float = 1.0

    def __post_init__(self):
        if not self.eta > -1.0:
            raise ValueError(
                f"eta must exceed -1 (series diverges otherwise), got {self.eta}"
            )
        if not self.mu > 0.0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.beta > 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")


@dataclass(frozen=True)
class OperatorResult(SeriesResult):
    """SeriesResult extended with the smallest retained (scaled) term.

    ``min_term`` >= 0 certifies that every term of the evaluation was
    nonnegative, which for nonnegative inputs is exact, not a tolerance
    statement.
    """

    min_term: float = 0.0


def _as_callable(f):
    if isinstance(f, FunctionSpec):
        return compile_expr(f.expr)
    return f


def _check_exponent(f, p: OperatorParams) -> None:
    pf = getattr(f, "c_lambda_exponent", None)
    if pf is not None and p.eta + 1.0 + pf / p.beta <= 0.0:
        raise DomainError(
            f"series not summable: eta+1+p/beta = {p.eta + 1.0 + pf / p.beta}"
        )


def ek_series(f, t: float, p: OperatorParams, q: DeformationParam | float,
              policy: TruncationPolicy = DEFAULT_POLICY) -> OperatorResult:
    """Series representation of the generalized Erdelyi-Kober q-operator."""
    if not t > 0.0:
        raise ValueError(f"evaluation point must be positive, got {t}")
    qv = as_deformation(q).q
    _check_exponent(f, p)
    fn = _as_callable(f)
    beta, eta, mu = p.beta, p.eta, p.mu

    root = qv ** (1.0 / beta)
    prefactor = beta * (1.0 - root) * (1.0 - qv) ** (mu - 1.0)
    ratio_eta = qv ** (eta + 1.0)

    rel_tol = policy.rel_tol
    abs_tol = policy.abs_tol
    needed = policy.consecutive_small
    max_terms = policy.max_terms

    total = 0.0
    coef = 1.0          # (q^mu;q)_k / (q;q)_k * q^(k(eta+1))
    qk = 1.0            # q^k
    qmu_k = qv ** mu    # q^(mu+k)
    node = t
    streak = 0
    used = 0
    last = 0.0
    min_raw = float("inf")
    stopped = False
    while used < max_terms:
        term = coef * fn(node)
        total += term
        used += 1
        last = term
        if term < min_raw:
            min_raw = term
        if abs(term) < rel_tol * abs(total) + abs_tol:
            streak += 1
            if streak >= needed and used < max_terms:
                stopped = True
                break
        else:
            streak = 0
        coef *= (1.0 - qmu_k) / (1.0 - qk * qv) * ratio_eta
        qmu_k *= qv
        qk *= qv
        node *= root
    tail = abs(last) * ratio_eta / (1.0 - ratio_eta)
    if not stopped:
        raise NotConvergedError(
            f"operator series: no convergence within {max_terms} terms",
            partial=OperatorResult(prefactor * total, used,
                                   prefactor * abs(total), False,
                                   prefactor * min_raw),
        )
    return OperatorResult(prefactor * total, used, prefactor * tail, True,
                          prefactor * min_raw)


def ek_integral(f, t: float, p: OperatorParams, q: DeformationParam | float,
                policy: TruncationPolicy = DEFAULT_POLICY) -> SeriesResult:
    """Integral representation; an independent oracle for ek_series.

    The kernel (t^beta - tau^beta q)_(mu-1) is evaluated through
    q_power_alpha at every node, so the computational route shares no
    coefficient recurrence with the series form.
    """
    if not t > 0.0:
        raise ValueError(f"evaluation point must be positive, got {t}")
    qv = as_deformation(q).q
    _check_exponent(f, p)
    fn = _as_callable(f)
    beta, eta, mu = p.beta, p.eta, p.mu

    root = qv ** (1.0 / beta)
    tb = t ** beta
    gam = q_gamma(mu, qv, policy)
    front = beta * t ** (-beta * (eta + mu)) / gam.value
    tau_exp = beta * (eta + 1.0) - 1.0
    ratio_eta = qv ** (eta + 1.0)

    rel_tol = policy.rel_tol
    abs_tol = policy.abs_tol
    needed = policy.consecutive_small
    max_terms = policy.max_terms

    total = 0.0
    rj = 1.0            # root^j
    streak = 0
    used = 0
    last = 0.0
    kernel_rel = 0.0
    stopped = False
    while used < max_terms:
        tau = t * rj
        kern = q_power_alpha(tb, (tau ** beta) * qv, qv, mu - 1.0, policy)
        if kern.value != 0.0:
            krel = kern.tail_estimate / abs(kern.value)
            if krel > kernel_rel:
                kernel_rel = krel
        term = rj * kern.value * tau ** tau_exp * fn(tau)
        total += term
        used += 1
        last = term
        if abs(term) < rel_tol * abs(total) + abs_tol:
            streak += 1
            if streak >= needed and used < max_terms:
                stopped = True
                break
        else:
            streak = 0
        rj *= root
    scale = front * (1.0 - root) * t
    value = scale * total
    if not stopped:
        raise NotConvergedError(
            f"operator integral: no convergence within {max_terms} nodes",
            partial=SeriesResult(value, used, abs(value), False),
        )
    sum_tail = abs(last) * ratio_eta / (1.0 - ratio_eta)
    gam_rel = gam.tail_estimate / abs(gam.value)
    tail = abs(scale) * sum_tail + abs(value) * (gam_rel + kernel_rel)
    return SeriesResult(value, used, tail, True)


def kober(f, t: float, eta: float, mu: float, q: DeformationParam | float,
          policy: TruncationPolicy = DEFAULT_POLICY) -> SeriesResult:
    """Kober fractional q-integral operator (the beta = 1 case).

    t^(-eta-mu) / GammaQ(mu) * int_0^t (t - tau q)_(mu-1) tau^eta f(tau) d_q tau,
    evaluated from this integral form directly; agrees with ek_series at
    beta = 1 within combined truncation tolerances.
    """
    if not t > 0.0:
        raise ValueError(f"evaluation point must be positive, got {t}")
    if not eta > -1.0:
        raise ValueError(f"eta must exceed -1, got {eta}")
    if not mu > 0.0:
        raise ValueError(f"mu must be positive, got {mu}")
    qv = as_deformation(q).q
    fn = _as_callable(f)

    gam = q_gamma(mu, qv, policy)
    front = t ** (-eta - mu) / gam.value
    ratio_eta = qv ** (eta + 1.0)

    rel_tol = policy.rel_tol
    abs_tol = policy.abs_tol
    needed = policy.consecutive_small
    max_terms = policy.max_terms

    total = 0.0
    qj = 1.0
    streak = 0
    used = 0
    last = 0.0
    kernel_rel = 0.0
    stopped = False
    while used < max_terms:
        tau = t * qj
        kern = q_power_alpha(t, tau * qv, qv, mu - 1.0, policy)
        if kern.value != 0.0:
            krel = kern.tail_estimate / abs(kern.value)
            if krel > kernel_rel:
                kernel_rel = krel
        term = qj * kern.value * tau ** eta * fn(tau)
        total += term
        used += 1
        last = term
        if abs(term) < rel_tol * abs(total) + abs_tol:
            streak += 1
            if streak >= needed and used < max_terms:
                stopped = True
                break
        else:
            streak = 0
        qj *= qv
    scale = front * (1.0 - qv) * t
    value = scale * total
    if not stopped:
        raise NotConvergedError(
            f"kober: no convergence within {max_terms} nodes",
            partial=SeriesResult(value, used, abs(value), False),
        )
    sum_tail = abs(last) * ratio_eta / (1.0 - ratio_eta)
    gam_rel = gam.tail_estimate / abs(gam.value)
    tail = abs(scale) * sum_tail + abs(value) * (gam_rel + kernel_rel)
    return SeriesResult(value, used, tail, True)


def ek_weighted(f, weight_power: int, u, t: float, p: OperatorParams,
                q: DeformationParam | float,
                policy: TruncationPolicy = DEFAULT_POLICY) -> OperatorResult:
    """Operator applied to the pointwise product s^weight_power * u(s) * f(s).

    Single code path for the moment terms of the Lipschitz-type
    inequalities.
    """
    wp = int(weight_power)
    if wp < 0:
        raise ValueError(f"weight_power must be >= 0, got {wp}")
    uf = _as_callable(u)
    ff = _as_callable(f)
    if wp == 0:
        combined = lambda s: uf(s) * ff(s)  # noqa: E731
    else:
        combined = lambda s: s ** wp * uf(s) * ff(s)  # noqa: E731
    return ek_series(combined, t, p, q, policy)
