"""A small closed function DSL with certified metadata.

Expressions are built from seven node types (constant, power, affine,
piecewise-linear, product, sum, scale) and wrapped in a
:class:`FunctionSpec` that carries metadata certified by construction:
monotonicity direction, the exponent p of the t^p behaviour near 0, and
the certified domain [0, T]. The closed grammar is what makes bounds,
Lipschitz constants and synchronicity certifiable instead of sampled
guesses.

Specs serialize to s-expressions, e.g. ``(product (power 2) (const 1.5))``,
and round-trip exactly.
"""

from __future__ import annotations

import functools
import random
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .errors import DomainError, NotLipschitzError

__all__ = [
    "Const",
    "Power",
    "Affine",
    "PiecewiseLinear",
    "Product",
    "Sum",
    "Scale",
    "FunctionSpec",
    "BoundsTriple",
    "LipschitzTriple",
    "FunctionFamily",
    "function_spec",
    "parse_expr",
    "format_expr",
    "parse_function_spec",
    "compile_expr",
    "check_synchronous",
    "extract_bounds",
    "extract_lipschitz",
    "generate_family",
    "generate_weight",
    "SYNC_TOL",
    "BOUNDS_GRID",
]

# Absolute tolerance on products of differences in the synchronicity scan;
# ties from equal samples must not produce spurious "neither".
SYNC_TOL = 1e-14

# Grid density for bound extraction on non-monotone composites.
BOUNDS_GRID = 1025


class Expr:
    """Base class for DSL expression nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Power(Expr):
    """t^exponent with exponent >= 0."""

    exponent: float

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("power exponent must be >= 0")


@dataclass(frozen=True)
class Affine(Expr):
    """slope * t + intercept."""

    slope: float
    intercept: float


@dataclass(frozen=True)
class PiecewiseLinear(Expr):
    """Linear interpolation through knots (x_i, y_i), first knot at x = 0.

    Beyond the last knot the value is clamped to the last y, which keeps
    monotonicity and range certificates valid under uncertified extension.
    """

    knots: tuple[tuple[float, float], ...]

    def __post_init__(self):
        knots = tuple((float(x), float(y)) for x, y in self.knots)
        if len(knots) < 2:
            raise ValueError("piecewise_linear needs at least two knots")
        if knots[0][0] != 0.0:
            raise ValueError("first knot must sit at x = 0")
        xs = [x for x, _ in knots]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("knot abscissae must be strictly increasing")
        object.__setattr__(self, "knots", knots)


@dataclass(frozen=True)
class Product(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sum(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Scale(Expr):
    factor: float
    inner: Expr


# ---------------------------------------------------------------------------
# evaluation


@functools.lru_cache(maxsize=None)
def compile_expr(expr: Expr) -> Callable[[float], float]:
    """Compile an expression tree into a plain closure.

    Compiled evaluators assume t >= 0 (the domain check lives in
    FunctionSpec.__call__); operator loops fetch the closure once and
    call it per node.
    """
    if isinstance(expr, Const):
        c = expr.value
        return lambda t: c
    if isinstance(expr, Power):
        p = expr.exponent
        if p == 0.0:
            return lambda t: 1.0
        if p == 1.0:
            return lambda t: t
        return lambda t: t ** p
    if isinstance(expr, Affine):
        a, b = expr.slope, expr.intercept
        return lambda t: a * t + b
    if isinstance(expr, PiecewiseLinear):
        knots = expr.knots
        xs = tuple(x for x, _ in knots)
        ys = tuple(y for _, y in knots)
        last = len(knots) - 1

        def interp(t: float) -> float:
            if t >= xs[last]:
                return ys[last]
            i = bisect_right(xs, t) - 1
            if i < 0:
                return ys[0]
            x0, y0 = xs[i], ys[i]
            x1, y1 = xs[i + 1], ys[i + 1]
            return y0 + (y1 - y0) * (t - x0) / (x1 - x0)

        return interp
    if isinstance(expr, Product):
        lf = compile_expr(expr.left)
        rf = compile_expr(expr.right)
        return lambda t: lf(t) * rf(t)
    if isinstance(expr, Sum):
        lf = compile_expr(expr.left)
        rf = compile_expr(expr.right)
        return lambda t: lf(t) + rf(t)
    if isinstance(expr, Scale):
        c = expr.factor
        f = compile_expr(expr.inner)
        return lambda t: c * f(t)
    raise TypeError(f"unknown expression node {expr!r}")


# ---------------------------------------------------------------------------
# certified metadata


def _is_constant(expr: Expr) -> bool:
    if isinstance(expr, Const):
        return True
    if isinstance(expr, Power):
        return expr.exponent == 0.0
    if isinstance(expr, Affine):
        return expr.slope == 0.0
    if isinstance(expr, PiecewiseLinear):
        ys = {y for _, y in expr.knots}
        return len(ys) == 1
    if isinstance(expr, (Product, Sum)):
        return _is_constant(expr.left) and _is_constant(expr.right)
    if isinstance(expr, Scale):
        return expr.factor == 0.0 or _is_constant(expr.inner)
    return False


def _constant_value(expr: Expr) -> float:
    return compile_expr(expr)(1.0)


def nonnegative_on(expr: Expr, T: float) -> bool:
    """Structurally certified nonnegativity on [0, T] (conservative)."""
    if isinstance(expr, Const):
        return expr.value >= 0.0
    if isinstance(expr, Power):
        return True
    if isinstance(expr, Affine):
        return expr.intercept >= 0.0 and expr.slope * T + expr.intercept >= 0.0
    if isinstance(expr, PiecewiseLinear):
        return all(y >= 0.0 for _, y in expr.knots)
    if isinstance(expr, (Product, Sum)):
        return nonnegative_on(expr.left, T) and nonnegative_on(expr.right, T)
    if isinstance(expr, Scale):
        if expr.factor == 0.0:
            return True
        return expr.factor > 0.0 and nonnegative_on(expr.inner, T)
    return False


def _flip(direction: str) -> str:
    if direction == "increasing":
        return "decreasing"
    if direction == "decreasing":
        return "increasing"
    return "none"


def monotonicity_on(expr: Expr, T: float) -> str:
    """Certified monotone direction on [0, T].

    Constants are classified as (weakly) increasing, which keeps every
    downstream synchronicity certification sound since the defining
    inequalities are non-strict. Returns "none" whenever the construction
    rules cannot certify a direction.
    """
    if _is_constant(expr):
        return "increasing"
    if isinstance(expr, Const):
        return "increasing"
    if isinstance(expr, Power):
        return "increasing"
    if isinstance(expr, Affine):
        return "increasing" if expr.slope >= 0.0 else "decreasing"
    if isinstance(expr, PiecewiseLinear):
        ys = [y for _, y in expr.knots]
        diffs = [b - a for a, b in zip(ys, ys[1:])]
        if all(d >= 0.0 for d in diffs):
            return "increasing"
        if all(d <= 0.0 for d in diffs):
            return "decreasing"
        return "none"
    if isinstance(expr, Scale):
        inner = monotonicity_on(expr.inner, T)
        return inner if expr.factor >= 0.0 else _flip(inner)
    if isinstance(expr, Sum):
        if _is_constant(expr.left):
            return monotonicity_on(expr.right, T)
        if _is_constant(expr.right):
            return monotonicity_on(expr.left, T)
        ml = monotonicity_on(expr.left, T)
        mr = monotonicity_on(expr.right, T)
        return ml if ml == mr else "none"
    if isinstance(expr, Product):
        if _is_constant(expr.left):
            c = _constant_value(expr.left)
            m = monotonicity_on(expr.right, T)
            return m if c >= 0.0 else _flip(m)
        if _is_constant(expr.right):
            c = _constant_value(expr.right)
            m = monotonicity_on(expr.left, T)
            return m if c >= 0.0 else _flip(m)
        ml = monotonicity_on(expr.left, T)
        mr = monotonicity_on(expr.right, T)
        if ml == mr and ml != "none":
            # product of co-monotone nonnegative functions keeps direction
            if nonnegative_on(expr.left, T) and nonnegative_on(expr.right, T):
                return ml
        return "none"
    return "none"


def c_lambda_exponent_of(expr: Expr) -> float:
    """Exponent p such that expr(t) = t^p * (continuous on (0, inf))."""
    if isinstance(expr, Const):
        return 0.0
    if isinstance(expr, Power):
        return expr.exponent
    if isinstance(expr, Affine):
        if expr.intercept != 0.0:
            return 0.0
        return 1.0 if expr.slope != 0.0 else 0.0
    if isinstance(expr, PiecewiseLinear):
        return 0.0 if expr.knots[0][1] != 0.0 else 1.0
    if isinstance(expr, Product):
        return c_lambda_exponent_of(expr.left) + c_lambda_exponent_of(expr.right)
    if isinstance(expr, Sum):
        return min(c_lambda_exponent_of(expr.left), c_lambda_exponent_of(expr.right))
    if isinstance(expr, Scale):
        return c_lambda_exponent_of(expr.inner) if expr.factor != 0.0 else 0.0
    raise TypeError(f"unknown expression node {expr!r}")


# ---------------------------------------------------------------------------
# FunctionSpec


@dataclass(frozen=True)
class FunctionSpec:
    """DSL expression plus certified metadata.

    ``monotonicity`` and ``c_lambda_exponent`` are derived structurally by
    :func:`function_spec`; ``domain_hint`` is the T of the certified
    interval [0, T]. Evaluation beyond T is permitted but uncertified.
    """

    expr: Expr
    monotonicity: str
    c_lambda_exponent: float
    domain_hint: float = 1.0

    def __call__(self, t: float) -> float:
        if t < 0.0:
            raise DomainError(f"function domain is [0, inf), got t={t}")
        return compile_expr(self.expr)(t)

    def to_sexpr(self) -> str:
        return format_expr(self.expr)


def function_spec(expr: Expr, T: float = 1.0) -> FunctionSpec:
    """Build a FunctionSpec with metadata certified by construction."""
    if not T > 0.0:
        raise ValueError("domain upper end must be positive")
    return FunctionSpec(
        expr=expr,
        monotonicity=monotonicity_on(expr, T),
        c_lambda_exponent=c_lambda_exponent_of(expr),
        domain_hint=float(T),
    )


# ---------------------------------------------------------------------------
# s-expression serialization


def _fmt_num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def format_expr(expr: Expr) -> str:
    """Canonical s-expression text of an expression tree."""
    if isinstance(expr, Const):
        return f"(const {_fmt_num(expr.value)})"
    if isinstance(expr, Power):
        return f"(power {_fmt_num(expr.exponent)})"
    if isinstance(expr, Affine):
        return f"(affine {_fmt_num(expr.slope)} {_fmt_num(expr.intercept)})"
    if isinstance(expr, PiecewiseLinear):
        knots = " ".join(f"({_fmt_num(x)} {_fmt_num(y)})" for x, y in expr.knots)
        return f"(piecewise_linear {knots})"
    if isinstance(expr, Product):
        return f"(product {format_expr(expr.left)} {format_expr(expr.right)})"
    if isinstance(expr, Sum):
        return f"(sum {format_expr(expr.left)} {format_expr(expr.right)})"
    if isinstance(expr, Scale):
        return f"(scale {_fmt_num(expr.factor)} {format_expr(expr.inner)})"
    raise TypeError(f"unknown expression node {expr!r}")


def _tokenize(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _parse_tokens(tokens: list[str], pos: int):
    if pos >= len(tokens):
        raise ValueError("unexpected end of s-expression")
    tok = tokens[pos]
    if tok != "(":
        raise ValueError(f"expected '(' at token {pos}, got {tok!r}")
    pos += 1
    if pos >= len(tokens):
        raise ValueError("unexpected end of s-expression")
    head = tokens[pos]
    pos += 1

    def number() -> float:
        nonlocal pos
        if pos >= len(tokens) or tokens[pos] in "()":
            raise ValueError(f"expected a number in ({head} ...)")
        try:
            val = float(tokens[pos])
        except ValueError as exc:
            raise ValueError(f"bad number {tokens[pos]!r} in ({head} ...)") from exc
        pos += 1
        return val

    def subexpr() -> Expr:
        nonlocal pos
        node, pos = _parse_tokens(tokens, pos)
        return node

    def close() -> None:
        nonlocal pos
        if pos >= len(tokens) or tokens[pos] != ")":
            raise ValueError(f"missing ')' after ({head} ...)")
        pos += 1

    if head == "const":
        node: Expr = Const(number())
    elif head == "power":
        node = Power(number())
    elif head == "affine":
        node = Affine(number(), number())
    elif head == "piecewise_linear":
        knots = []
        while pos < len(tokens) and tokens[pos] == "(":
            pos += 1
            x = number()
            y = number()
            if pos >= len(tokens) or tokens[pos] != ")":
                raise ValueError("malformed knot in (piecewise_linear ...)")
            pos += 1
            knots.append((x, y))
        node = PiecewiseLinear(tuple(knots))
    elif head == "product":
        node = Product(subexpr(), subexpr())
    elif head == "sum":
        node = Sum(subexpr(), subexpr())
    elif head == "scale":
        node = Scale(number(), subexpr())
    else:
        raise ValueError(f"unknown s-expression head {head!r}")
    close()
    return node, pos


def parse_expr(text: str) -> Expr:
    """Parse the canonical s-expression grammar back into a tree."""
    tokens = _tokenize(text)
    node, pos = _parse_tokens(tokens, 0)
    if pos != len(tokens):
        raise ValueError(f"trailing tokens after s-expression: {tokens[pos:]}")
    return node


def parse_function_spec(text: str, T: float = 1.0) -> FunctionSpec:
    return function_spec(parse_expr(text), T)


# ---------------------------------------------------------------------------
# synchronicity, bounds, Lipschitz


def check_synchronous(f: FunctionSpec, g: FunctionSpec,
                      grid: Sequence[float]):
    """Classify a pair as synchronous / asynchronous / neither on a grid.

    Synchronous means (f(x)-f(y))(g(x)-g(y)) >= 0 for all pairs (within
    SYNC_TOL); asynchronous reverses the sign. When both specs carry a
    certified monotone direction the answer follows from the directions
    and the scan is skipped. For "neither" the witness is the grid pair
    with the most negative product of differences.
    """
    if f.monotonicity != "none" and g.monotonicity != "none":
        if f.monotonicity == g.monotonicity:
            return "synchronous", None
        return "asynchronous", None
    if not grid:
        raise ValueError("synchronicity grid must be nonempty")
    pts = [(x, f(x), g(x)) for x in grid]
    min_prod, max_prod = 0.0, 0.0
    min_pair = None
    for i, (x, fx, gx) in enumerate(pts):
        for y, fy, gy in pts[i + 1:]:
            d = (fx - fy) * (gx - gy)
            if d < min_prod:
                min_prod = d
                min_pair = (x, y)
            elif d > max_prod:
                max_prod = d
    if min_prod >= -SYNC_TOL:
        return "synchronous", None
    if max_prod <= SYNC_TOL:
        return "asynchronous", None
    return "neither", min_pair


def extract_bounds(spec: FunctionSpec, T: float) -> tuple[float, float]:
    """Certified (min, max) of the spec over [0, T].

    Exact via endpoint/knot evaluation for monotone and piecewise-linear
    specs; otherwise a dense-grid estimate with BOUNDS_GRID nodes.
    """
    if not T > 0.0:
        raise ValueError("T must be positive")
    if spec.monotonicity != "none":
        lo, hi = spec(0.0), spec(T)
        return (min(lo, hi), max(lo, hi))
    if isinstance(spec.expr, PiecewiseLinear):
        xs = [x for x, _ in spec.expr.knots if 0.0 <= x <= T]
        vals = [spec(x) for x in xs] + [spec(0.0), spec(T)]
        return (min(vals), max(vals))
    vals = [spec(T * k / (BOUNDS_GRID - 1)) for k in range(BOUNDS_GRID)]
    return (min(vals), max(vals))


def extract_lipschitz(spec_or_expr, T: float) -> float:
    """Certified Lipschitz constant on [0, T].

    Max slope for affine/piecewise pieces, p*T^(p-1) for power(p >= 1),
    sum/product rules (using extract_bounds for the sup factors) for
    composites. power(p) with 0 < p < 1 has an unbounded difference
    quotient at 0 and raises NotLipschitzError.
    """
    if not T > 0.0:
        raise ValueError("T must be positive")
    expr = spec_or_expr.expr if isinstance(spec_or_expr, FunctionSpec) else spec_or_expr
    return _lipschitz(expr, T)


def _sup_abs(expr: Expr, T: float) -> float:
    lo, hi = extract_bounds(function_spec(expr, T), T)
    return max(abs(lo), abs(hi))


def _lipschitz(expr: Expr, T: float) -> float:
    if isinstance(expr, Const):
        return 0.0
    if isinstance(expr, Power):
        p = expr.exponent
        if p == 0.0:
            return 0.0
        if p < 1.0:
            raise NotLipschitzError(
                f"t^{p} has unbounded difference quotient at 0"
            )
        return p * T ** (p - 1.0)
    if isinstance(expr, Affine):
        return abs(expr.slope)
    if isinstance(expr, PiecewiseLinear):
        knots = expr.knots
        return max(
            abs((y1 - y0) / (x1 - x0))
            for (x0, y0), (x1, y1) in zip(knots, knots[1:])
        )
    if isinstance(expr, Sum):
        return _lipschitz(expr.left, T) + _lipschitz(expr.right, T)
    if isinstance(expr, Scale):
        return abs(expr.factor) * _lipschitz(expr.inner, T)
    if isinstance(expr, Product):
        return (_lipschitz(expr.left, T) * _sup_abs(expr.right, T)
                + _lipschitz(expr.right, T) * _sup_abs(expr.left, T))
    raise TypeError(f"unknown expression node {expr!r}")


# ---------------------------------------------------------------------------
# certificates and seeded family generation


@dataclass(frozen=True)
class BoundsTriple:
    """Lower/upper bounds for the three functions of a bounded triple."""

    psi: float
    Psi: float
    phi: float
    Phi: float
    omega: float
    Omega: float

    def __post_init__(self):
        if self.psi > self.Psi or self.phi > self.Phi or self.omega > self.Omega:
            raise ValueError("each lower bound must not exceed its upper bound")


@dataclass(frozen=True)
class LipschitzTriple:
    """Lipschitz constants for the three functions of a triple."""

    L1: float
    L2: float
    L3: float

    def __post_init__(self):
        if min(self.L1, self.L2, self.L3) < 0.0:
            raise ValueError("Lipschitz constants must be nonnegative")


@dataclass(frozen=True)
class FunctionFamily:
    kind: str
    f: FunctionSpec
    g: FunctionSpec
    h: FunctionSpec
    bounds: Optional[BoundsTriple] = None
    lipschitz: Optional[LipschitzTriple] = None

    @property
    def specs(self) -> tuple[FunctionSpec, FunctionSpec, FunctionSpec]:
        return (self.f, self.g, self.h)


FAMILY_KINDS = (
    "synchronous_triple",
    "asynchronous_pair_plus_nonneg",
    "bounded_triple",
    "lipschitz_triple",
)


def _increasing_atom(rng: random.Random, T: float, lipschitz_safe: bool) -> Expr:
    kind = rng.randrange(3)
    if kind == 0:
        return Affine(rng.uniform(0.1, 2.0), rng.uniform(0.0, 2.0))
    if kind == 1:
        if lipschitz_safe:
            return Power(float(rng.choice((1, 2, 3))))
        return Power(float(rng.choice((0.5, 1.0, 1.5, 2.0, 3.0))))
    n_inner = rng.randint(1, 3)
    cuts = sorted(rng.uniform(0.1 * T, 0.9 * T) for _ in range(n_inner))
    xs = [0.0]
    for c in cuts:
        if c > xs[-1] + 1e-9 * T:
            xs.append(c)
    xs.append(T)
    y = rng.uniform(0.0, 1.0)
    knots = [(xs[0], y)]
    for x in xs[1:]:
        y += rng.uniform(0.1, 1.5)
        knots.append((x, y))
    return PiecewiseLinear(tuple(knots))


def _increasing_expr(rng: random.Random, T: float, lipschitz_safe: bool) -> Expr:
    # All atoms are nonnegative and increasing, so sums, products and
    # positive scalings keep a certified increasing direction.
    roll = rng.random()
    if roll < 0.55:
        return _increasing_atom(rng, T, lipschitz_safe)
    if roll < 0.80:
        return Sum(_increasing_atom(rng, T, lipschitz_safe),
                   _increasing_atom(rng, T, lipschitz_safe))
    if roll < 0.92:
        return Product(_increasing_atom(rng, T, lipschitz_safe),
                       _increasing_atom(rng, T, lipschitz_safe))
    return Scale(rng.uniform(0.2, 2.0), _increasing_atom(rng, T, lipschitz_safe))


def _decreasing_expr(rng: random.Random, T: float) -> Expr:
    if rng.random() < 0.5:
        slope = -rng.uniform(0.1, 2.0)
        return Affine(slope, rng.uniform(0.0, 2.0) - slope * T)
    return Sum(Scale(-1.0, _increasing_atom(rng, T, True)),
               Const(rng.uniform(0.0, 3.0)))


def generate_family(kind: str, seed: int, T: float) -> FunctionFamily:
    """Deterministically generate a function triple with certificates.

    synchronous_triple / bounded_triple / lipschitz_triple produce three
    increasing nonnegative specs (pairwise synchronous by construction),
    the latter two attaching a BoundsTriple / LipschitzTriple certified
    on [0, T]. asynchronous_pair_plus_nonneg produces f increasing, g
    decreasing (so f, g are certified asynchronous) and h nonnegative,
    the sign condition under which the product-form inequalities reverse.
    """
    if kind not in FAMILY_KINDS:
        raise ValueError(f"unknown family kind {kind!r}")
    if not T > 0.0:
        raise ValueError("T must be positive")
    rng = random.Random(seed)
    lipschitz_safe = kind == "lipschitz_triple"
    if kind == "asynchronous_pair_plus_nonneg":
        f = function_spec(_increasing_expr(rng, T, True), T)
        g = function_spec(_decreasing_expr(rng, T), T)
        h = function_spec(_increasing_atom(rng, T, True), T)
        return FunctionFamily(kind, f, g, h)
    f = function_spec(_increasing_expr(rng, T, lipschitz_safe), T)
    g = function_spec(_increasing_expr(rng, T, lipschitz_safe), T)
    h = function_spec(_increasing_expr(rng, T, lipschitz_safe), T)
    if kind == "bounded_triple":
        (psi, Psi) = extract_bounds(f, T)
        (phi, Phi) = extract_bounds(g, T)
        (omega, Omega) = extract_bounds(h, T)
        return FunctionFamily(kind, f, g, h,
                              bounds=BoundsTriple(psi, Psi, phi, Phi, omega, Omega))
    if kind == "lipschitz_triple":
        trip = LipschitzTriple(extract_lipschitz(f, T),
                               extract_lipschitz(g, T),
                               extract_lipschitz(h, T))
        return FunctionFamily(kind, f, g, h, lipschitz=trip)
    return FunctionFamily(kind, f, g, h)


def generate_weight(seed: int, T: float) -> FunctionSpec:
    """Deterministically generate a nonnegative continuous weight spec."""
    rng = random.Random(seed)
    roll = rng.random()
    if roll < 0.25:
        expr: Expr = Const(rng.uniform(0.2, 2.0))
    elif roll < 0.5:
        expr = Affine(rng.uniform(0.0, 1.5), rng.uniform(0.1, 2.0))
    elif roll < 0.7:
        expr = Power(float(rng.choice((1, 2))))
    elif roll < 0.9:
        expr = _increasing_atom(rng, T, True)
    else:
        expr = Product(_increasing_atom(rng, T, True),
                       _increasing_atom(rng, T, True))
    return function_spec(expr, T)
