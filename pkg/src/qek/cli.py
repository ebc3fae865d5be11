"""Command line front end: operator evaluation, inequality campaigns,
convergence sweeps, and machine-readable reporting.

Campaigns are reproducible: every case derives its own RNG seed from the
global seed and the case index through a fixed 64-bit mixer, so identical
configs produce byte-identical report files (modulo the suppressible
timestamp header). Exit codes: 0 all checks hold, 1 at least one
violation, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .ekoperator import OperatorParams, ek_integral, ek_series, kober
from .errors import QekError
from .functions import (
    FunctionSpec,
    PiecewiseLinear,
    function_spec,
    generate_family,
    generate_weight,
    parse_function_spec,
)
from .inequalities import InequalityReport, TheoremCase, evaluate_case
from .qcore import DeformationParam, TruncationPolicy

__all__ = [
    "CampaignConfig",
    "CampaignResult",
    "mix_seed",
    "derive_case",
    "run_campaign",
    "report_row",
    "rows_to_jsonl",
    "rows_to_csv",
    "standard_shapes",
    "reduce_check_rows",
    "sweep_rows",
    "main",
    "REPORT_COLUMNS",
]

REPORT_COLUMNS = (
    "case_index", "theorem", "t", "q1", "q2", "eta", "mu", "beta",
    "zeta", "nu", "delta", "lhs", "rhs", "margin", "worst_tail",
    "verdict", "f_spec", "g_spec", "h_spec", "u_spec", "v_spec",
)

_MASK64 = (1 << 64) - 1

_THEOREM_FAMILY = {
    "T1": "synchronous_triple",
    "T2": "synchronous_triple",
    "T3": "bounded_triple",
    "T4": "bounded_triple",
    "T5": "lipschitz_triple",
    "T6": "lipschitz_triple",
}


def mix_seed(global_seed: int, case_index: int) -> int:
    """Derive a per-case seed: splitmix64 step of seed + golden-ratio
    stride times the index (stable across platforms)."""
    x = (global_seed + 0x9E3779B97F4A7C15 * (case_index + 1)) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class CampaignConfig:
    """Reproducible campaign description; grids are validated up front."""

    theorems: tuple[str, ...] = ("T1",)
    cases: int = 100
    seed: int = 0
    t_values: tuple[float, ...] = (0.5, 1.0, 2.0)
    q1_grid: tuple[float, ...] = (0.3, 0.6, 0.9)
    q2_grid: tuple[float, ...] = (0.3, 0.6, 0.9)
    eta_grid: tuple[float, ...] = (-0.5, 0.0, 1.0)
    mu_grid: tuple[float, ...] = (0.5, 1.0, 2.0)
    beta_grid: tuple[float, ...] = (0.5, 1.0, 2.0)
    zeta_grid: tuple[float, ...] = (-0.5, 0.0, 1.0)
    nu_grid: tuple[float, ...] = (0.5, 1.0, 2.0)
    delta_grid: tuple[float, ...] = (0.5, 1.0, 2.0)
    family: str = "synchronous"  # "asynchronous" flips T1/T2 hypotheses
    expect: str = "holds"        # "reversed" for the reversal campaign
    rel_tol: float = 1e-14
    max_terms: int = 100_000
    jobs: int = 1

    def __post_init__(self):
        for tid in self.theorems:
            if tid not in _THEOREM_FAMILY:
                raise ValueError(f"unknown theorem id {tid!r}")
        if self.cases <= 0:
            raise ValueError("case count must be positive")
        for q in self.q1_grid + self.q2_grid:
            DeformationParam(q)
        for t in self.t_values:
            if not t > 0.0:
                raise ValueError("t values must be positive")
        for eta in self.eta_grid + self.zeta_grid:
            if not eta > -1.0:
                raise ValueError("eta/zeta grid values must exceed -1")
        for m in self.mu_grid + self.nu_grid + self.beta_grid + self.delta_grid:
            if not m > 0.0:
                raise ValueError("mu/nu/beta/delta grid values must be positive")
        if self.family not in ("synchronous", "asynchronous"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.expect not in ("holds", "reversed"):
            raise ValueError(f"unknown expectation {self.expect!r}")
        if self.jobs <= 0:
            raise ValueError("jobs must be positive")

    @property
    def policy(self) -> TruncationPolicy:
        return TruncationPolicy(rel_tol=self.rel_tol, max_terms=self.max_terms)


def derive_case(config: CampaignConfig, theorem: str,
                case_index: int) -> TheoremCase:
    """Deterministically derive case number ``case_index`` of a campaign."""
    rng = random.Random(mix_seed(config.seed, case_index))
    t = rng.choice(config.t_values)
    q1 = DeformationParam(rng.choice(config.q1_grid))
    q2 = DeformationParam(rng.choice(config.q2_grid))
    p1 = OperatorParams(rng.choice(config.eta_grid),
                        rng.choice(config.mu_grid),
                        rng.choice(config.beta_grid))
    p2 = OperatorParams(rng.choice(config.zeta_grid),
                        rng.choice(config.nu_grid),
                        rng.choice(config.delta_grid))
    kind = _THEOREM_FAMILY[theorem]
    if theorem in ("T1", "T2") and config.family == "asynchronous":
        kind = "asynchronous_pair_plus_nonneg"
    fam = generate_family(kind, rng.getrandbits(63), t)
    u = generate_weight(rng.getrandbits(63), t)
    v = None
    if theorem in ("T2", "T4", "T6"):
        v = generate_weight(rng.getrandbits(63), t)
    return TheoremCase(theorem_id=theorem, t=t, q1=q1, q2=q2, p1=p1, p2=p2,
                       u=u, f=fam.f, g=fam.g, h=fam.h, v=v,
                       bounds=fam.bounds, lipschitz=fam.lipschitz)


def _evaluate_index(args) -> InequalityReport:
    config, theorem, index = args
    case = derive_case(config, theorem, index)
    return evaluate_case(case, config.policy,
                         expect_reversed=(config.expect == "reversed"))


@dataclass
class CampaignResult:
    config: CampaignConfig
    reports: list[tuple[int, InequalityReport]] = field(default_factory=list)

    def counts(self, theorem: str) -> dict[str, int]:
        out = {"holds": 0, "violated": 0, "inconclusive": 0}
        for _, rep in self.reports:
            if rep.case.theorem_id == theorem:
                out[rep.verdict] += 1
        return out

    def min_margin(self, theorem: str) -> float:
        margins = [rep.margin for _, rep in self.reports
                   if rep.case.theorem_id == theorem
                   and rep.margin == rep.margin]
        return min(margins) if margins else float("nan")

    def max_margin(self, theorem: str) -> float:
        margins = [rep.margin for _, rep in self.reports
                   if rep.case.theorem_id == theorem
                   and rep.margin == rep.margin]
        return max(margins) if margins else float("nan")

    def bracket_sign_counts(self, theorem: str) -> tuple[int, int]:
        pos = neg = 0
        for _, rep in self.reports:
            if rep.case.theorem_id == theorem and rep.bracket is not None:
                if rep.bracket >= 0.0:
                    pos += 1
                else:
                    neg += 1
        return pos, neg


def run_campaign(config: CampaignConfig) -> CampaignResult:
    """Evaluate every (theorem, case index) pair of the campaign.

    With jobs > 1 cases run in a process pool; results are emitted in
    case-index order either way, so output is deterministic regardless
    of parallelism.
    """
    work = [(config, theorem, idx)
            for theorem in config.theorems
            for idx in range(config.cases)]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            reports = list(pool.map(_evaluate_index, work, chunksize=8))
    else:
        reports = [_evaluate_index(item) for item in work]
    result = CampaignResult(config)
    result.reports = [(item[2], rep) for item, rep in zip(work, reports)]
    return result


def report_row(case_index: int, report: InequalityReport) -> dict:
    case = report.case
    return {
        "case_index": case_index,
        "theorem": case.theorem_id,
        "t": case.t,
        "q1": case.q1.q,
        "q2": case.q2.q,
        "eta": case.p1.eta,
        "mu": case.p1.mu,
        "beta": case.p1.beta,
        "zeta": case.p2.eta,
        "nu": case.p2.mu,
        "delta": case.p2.beta,
        "lhs": report.lhs,
        "rhs": report.rhs,
        "margin": report.margin,
        "worst_tail": report.worst_tail,
        "verdict": report.verdict,
        "f_spec": case.f.to_sexpr(),
        "g_spec": case.g.to_sexpr(),
        "h_spec": case.h.to_sexpr(),
        "u_spec": case.u.to_sexpr(),
        "v_spec": case.v.to_sexpr() if case.v is not None else "",
    }


def _timestamp_line() -> str:
    return datetime.now(timezone.utc).isoformat()


def rows_to_jsonl(rows, timestamp: bool = True) -> str:
    """Serialize report rows as JSON lines (fixed key order)."""
    out = []
    if timestamp:
        out.append(json.dumps({"timestamp": _timestamp_line()}))
    for row in rows:
        out.append(json.dumps(row))
    return "\n".join(out) + "\n"


def rows_to_csv(rows, timestamp: bool = True) -> str:
    """Serialize report rows as CSV with the documented column order."""
    buf = io.StringIO()
    if timestamp:
        buf.write(f"# {_timestamp_line()}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in rows:
        writer.writerow([row[col] for col in REPORT_COLUMNS])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# standard grids shared by reduce-check, sweeps and the acceptance suite


def standard_shapes(T: float = 2.0) -> list[FunctionSpec]:
    """The four reference integrand shapes: 1, t, t^2, monotone piecewise."""
    pwl = PiecewiseLinear(((0.0, 0.0), (0.5, 0.3), (1.0, 0.5), (2.0, 1.2)))
    return [
        parse_function_spec("(const 1)", T),
        parse_function_spec("(power 1)", T),
        parse_function_spec("(power 2)", T),
        function_spec(pwl, T),
    ]


def reduce_check_rows(policy: TruncationPolicy | None = None):
    """Compare the series operator at beta = 1 against the Kober operator
    over the standard grid; yields (q, eta, mu, shape index, rel gap)."""
    policy = policy or TruncationPolicy()
    shapes = standard_shapes()
    for q in (0.3, 0.6, 0.9):
        for eta in (-0.5, 0.0, 1.0):
            for mu in (0.5, 1.0, 2.0):
                p = OperatorParams(eta, mu, 1.0)
                for i, shape in enumerate(shapes):
                    series = ek_series(shape, 1.0, p, q, policy).value
                    direct = kober(shape, 1.0, eta, mu, q, policy).value
                    gap = abs(series - direct) / max(1.0, abs(series))
                    yield (q, eta, mu, i, gap)


def sweep_rows(axis: str, values, q: float, eta: float, mu: float,
               beta: float, t: float, f: FunctionSpec,
               policy: TruncationPolicy):
    """Convergence sweep along one parameter axis; yields CSV-ready rows."""
    for val in values:
        kw = {"q": q, "eta": eta, "mu": mu, "beta": beta}
        kw[axis] = val
        p = OperatorParams(kw["eta"], kw["mu"], kw["beta"])
        series = ek_series(f, t, p, kw["q"], policy)
        integral = ek_integral(f, t, p, kw["q"], policy)
        gap = abs(series.value - integral.value) / max(1.0, abs(series.value))
        yield (val, series.terms_used, series.tail_estimate, series.value,
               integral.value, gap)


# ---------------------------------------------------------------------------
# command implementations


def _policy_from_args(args) -> TruncationPolicy:
    return TruncationPolicy(rel_tol=args.tol, max_terms=args.max_terms)


def _fail_usage(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def cmd_eval(args) -> int:
    try:
        q = DeformationParam(args.q)
    except ValueError:
        return _fail_usage("q must lie in (0,1)")
    try:
        p = OperatorParams(args.eta, args.mu, args.beta)
        spec = parse_function_spec(args.f, max(args.t, 1.0))
        policy = _policy_from_args(args)
        if not args.t > 0:
            raise ValueError("t must be positive")
    except (ValueError, QekError) as exc:
        return _fail_usage(str(exc))
    results = {}
    if args.form in ("series", "both"):
        results["series"] = ek_series(spec, args.t, p, q, policy)
    if args.form in ("integral", "both"):
        results["integral"] = ek_integral(spec, args.t, p, q, policy)
    for name, res in results.items():
        print(f"{name}: value={res.value!r} terms_used={res.terms_used} "
              f"tail_estimate={res.tail_estimate:.3e} converged={res.converged}")
    if args.form == "both":
        s, i = results["series"].value, results["integral"].value
        rel = abs(s - i) / max(1.0, abs(s))
        print(f"relative_difference={rel:.3e}")
    return 0


def _parse_grid(text: str) -> tuple[float, ...]:
    vals = tuple(float(x) for x in text.split(",") if x.strip())
    if not vals:
        raise ValueError(f"empty grid {text!r}")
    return vals


def _load_config_file(path: str) -> dict:
    """Flat key = value format with repeated grid.* keys for axes."""
    scalars: dict[str, str] = {}
    grids: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (part.strip() for part in line.split("=", 1))
            if key.startswith("grid."):
                grids.setdefault(key[5:], []).append(val)
            else:
                scalars[key] = val
    out: dict = dict(scalars)
    for key, vals in grids.items():
        out[f"grid.{key}"] = tuple(float(v) for v in vals)
    return out


_GRID_KEYS = {
    "t": "t_values", "q1": "q1_grid", "q2": "q2_grid",
    "eta": "eta_grid", "mu": "mu_grid", "beta": "beta_grid",
    "zeta": "zeta_grid", "nu": "nu_grid", "delta": "delta_grid",
}


def _config_from_args(args) -> tuple[CampaignConfig, dict]:
    values: dict = {}
    io: dict = {}
    if args.config:
        raw = _load_config_file(args.config)
        for key, val in raw.items():
            if key.startswith("grid."):
                values[_GRID_KEYS[key[5:]]] = val
            elif key == "theorem":
                values["theorems"] = tuple(s.strip() for s in val.split(","))
            elif key in ("cases", "seed", "max_terms", "jobs"):
                values[key] = int(val)
            elif key in ("rel_tol",):
                values[key] = float(val)
            elif key in ("family", "expect"):
                values[key] = val
            elif key in ("output", "format"):
                io[key] = val
            elif key == "no_timestamp":
                io[key] = val.lower() in ("1", "true", "yes")
            else:
                raise ValueError(f"unknown config key {key!r}")
    if args.theorem:
        values["theorems"] = tuple(args.theorem)
    if args.cases is not None:
        values["cases"] = args.cases
    if args.seed is not None:
        values["seed"] = args.seed
    if args.tol is not None:
        values["rel_tol"] = args.tol
    if args.max_terms is not None:
        values["max_terms"] = args.max_terms
    if args.jobs is not None:
        values["jobs"] = args.jobs
    if args.family:
        values["family"] = args.family
    if args.expect:
        values["expect"] = args.expect
    for flag, key in (("t", "t_values"), ("q1", "q1_grid"), ("q2", "q2_grid"),
                      ("eta", "eta_grid"), ("mu", "mu_grid"),
                      ("beta", "beta_grid"), ("zeta", "zeta_grid"),
                      ("nu", "nu_grid"), ("delta", "delta_grid")):
        text = getattr(args, f"grid_{flag}")
        if text:
            values[key] = _parse_grid(text)
    return CampaignConfig(**values), io


def cmd_verify(args) -> int:
    try:
        config, io = _config_from_args(args)
        fmt = args.format or io.get("format", "json-lines")
        if fmt not in ("json-lines", "csv"):
            raise ValueError(f"unknown output format {fmt!r}")
    except (ValueError, OSError) as exc:
        return _fail_usage(str(exc))
    output = args.output or io.get("output")
    timestamp = not (args.no_timestamp or io.get("no_timestamp", False))
    result = run_campaign(config)
    rows = [report_row(idx, rep) for idx, rep in result.reports]
    text = (rows_to_csv(rows, timestamp=timestamp) if fmt == "csv"
            else rows_to_jsonl(rows, timestamp=timestamp))
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    failed = False
    for theorem in config.theorems:
        counts = result.counts(theorem)
        line = (f"summary {theorem}: holds={counts['holds']} "
                f"violated={counts['violated']} "
                f"inconclusive={counts['inconclusive']} "
                f"min_margin={result.min_margin(theorem):.6e}")
        if theorem in ("T5", "T6"):
            pos, neg = result.bracket_sign_counts(theorem)
            line += f" bracket_nonneg={pos} bracket_neg={neg}"
        print(line, file=sys.stderr)
        if config.expect == "reversed":
            # every margin must sit at or below the noise threshold
            for _, rep in result.reports:
                if (rep.case.theorem_id == theorem
                        and rep.margin == rep.margin
                        and rep.margin > rep.worst_tail * 10.0):
                    failed = True
        elif counts["violated"]:
            failed = True
    return 1 if failed else 0


def cmd_sweep(args) -> int:
    if args.axis not in ("q", "eta", "mu", "beta"):
        return _fail_usage(f"unknown sweep axis {args.axis!r}")
    if args.steps < 1 or args.stop < args.start:
        return _fail_usage("empty sweep range")
    try:
        policy = _policy_from_args(args)
        spec = parse_function_spec(args.f, max(args.t, 1.0))
        if args.steps == 1:
            values = [args.start]
        else:
            step = (args.stop - args.start) / (args.steps - 1)
            values = [args.start + k * step for k in range(args.steps)]
        rows = list(sweep_rows(args.axis, values, args.q, args.eta, args.mu,
                               args.beta, args.t, spec, policy))
    except (ValueError, QekError) as exc:
        return _fail_usage(str(exc))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow((args.axis, "terms_used", "tail_estimate",
                     "series_value", "integral_value", "relative_gap"))
    for row in rows:
        writer.writerow(row)
    text = buf.getvalue()
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_reduce_check(args) -> int:
    if args.beta is not None and args.beta != 1.0:
        return _fail_usage("reduce-check fixes beta=1")
    policy = _policy_from_args(args)
    max_gap = 0.0
    worst = None
    for q, eta, mu, shape, gap in reduce_check_rows(policy):
        if gap > max_gap:
            max_gap = gap
            worst = (q, eta, mu, shape)
    print(f"max relative gap {max_gap:.3e} at (q, eta, mu, shape)={worst}")
    return 0 if max_gap <= args.tol else 1


def _add_policy_flags(parser, tol_default=1e-14):
    parser.add_argument("--tol", type=float, default=tol_default,
                        help="relative truncation tolerance")
    parser.add_argument("--max-terms", type=int, default=100_000,
                        dest="max_terms")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qek",
        description="q-calculus operators and inequality verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate the fractional operator")
    p_eval.add_argument("--q", type=float, required=True)
    p_eval.add_argument("--eta", type=float, default=0.0)
    p_eval.add_argument("--mu", type=float, default=1.0)
    p_eval.add_argument("--beta", type=float, default=1.0)
    p_eval.add_argument("--t", type=float, default=1.0)
    p_eval.add_argument("--f", required=True, help="function s-expression")
    p_eval.add_argument("--form", choices=("series", "integral", "both"),
                        default="series")
    _add_policy_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_verify = sub.add_parser("verify", help="run an inequality campaign")
    p_verify.add_argument("--config", help="flat key=value config file")
    p_verify.add_argument("--theorem", action="append",
                          help="theorem id (repeatable), e.g. T1")
    p_verify.add_argument("--cases", type=int)
    p_verify.add_argument("--seed", type=int)
    p_verify.add_argument("--jobs", type=int)
    p_verify.add_argument("--family", choices=("synchronous", "asynchronous"))
    p_verify.add_argument("--expect", choices=("holds", "reversed"))
    for flag in _GRID_KEYS:
        p_verify.add_argument(f"--grid-{flag}", dest=f"grid_{flag}",
                              help=f"comma-separated {flag} grid")
    p_verify.add_argument("--output")
    p_verify.add_argument("--format", choices=("json-lines", "csv"),
                          default=None)
    p_verify.add_argument("--no-timestamp", action="store_true")
    p_verify.add_argument("--tol", type=float, default=None)
    p_verify.add_argument("--max-terms", type=int, default=None,
                          dest="max_terms")
    p_verify.set_defaults(func=cmd_verify)

    p_sweep = sub.add_parser("sweep", help="convergence sweep along one axis")
    p_sweep.add_argument("--axis", required=True)
    p_sweep.add_argument("--start", type=float, required=True)
    p_sweep.add_argument("--stop", type=float, required=True)
    p_sweep.add_argument("--steps", type=int, required=True)
    p_sweep.add_argument("--q", type=float, default=0.5)
    p_sweep.add_argument("--eta", type=float, default=0.0)
    p_sweep.add_argument("--mu", type=float, default=1.0)
    p_sweep.add_argument("--beta", type=float, default=1.0)
    p_sweep.add_argument("--t", type=float, default=1.0)
    p_sweep.add_argument("--f", default="(power 1)")
    p_sweep.add_argument("--output")
    _add_policy_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_reduce = sub.add_parser("reduce-check",
                              help="series vs Kober agreement at beta=1")
    p_reduce.add_argument("--beta", type=float, default=None)
    _add_policy_flags(p_reduce, tol_default=1e-12)
    p_reduce.set_defaults(func=cmd_reduce_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except QekError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
