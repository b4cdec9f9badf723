"""Batch command-line front-end.

Subcommands:

* ``infer <file>``   -- run the queries of a JSON scenario file, CSV out.
* ``paper <name>``   -- run a named builtin scenario (case studies, worked
  examples), CSV out.
* ``table <source> --what cdf|integrand --grid N`` -- tabulate the p-box
  CDFs or the first expectation query's integrand on a uniform grid.
* ``verify``         -- run the oracle campaign; exit 1 on any violation.

CSV rows are ``query_id,kind,value,error_bound,elapsed_ms`` with floats at
12 significant digits.  Exit codes: 0 success, 1 verification violations,
2 scenario parse error, 3 validation error.  Values and error bounds are
deterministic for a fixed file, flags, and seed; the elapsed column is wall
time and naturally jitters between runs.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from dataclasses import replace

import numpy as np

from . import choquet as _choquet
from . import pbox as _pbox
from .choquet import DEFAULT_CONFIG, QuadratureConfig, cut_event
from .errors import ToleranceError, ValidationError
from .multivariate import FRECHET, INDEPENDENT, MarginalSpec, RealLinePBox, combine
from .oracle import (
    FiniteCredalInstance,
    additivity_check,
    complete_monotonicity_check,
    envelope_sample_bound,
    lp_lower_expectation,
    natural_extension_table,
    pbox_representability_check,
    random_credal_instance,
)
from .pbox import PBox, PiecewiseLinearCdf, StepCdf, upper_prob_event
from .preorder import (
    UNIT_INTERVAL,
    ClassSubset,
    FiniteQuotientSpace,
    ZInterval,
    complement_z,
    normalize,
)
from .scenarios import (
    BUILTIN_NAMES,
    Query,
    Scenario,
    builtin_scenario,
    named_cdf,
    named_oscillation,
    piecewise_linear_oscillation,
    run_query,
)

CSV_HEADER = "query_id,kind,value,error_bound,elapsed_ms"

_RULES = {"frechet": FRECHET, "independence": INDEPENDENT}


def _fmt(x: float) -> str:
    return f"{x:.12g}"


# ---------------------------------------------------------------------------
# scenario files


def _cdf_from_spec(spec) -> object:
    if isinstance(spec, dict) and "linear" in spec:
        return PiecewiseLinearCdf(tuple((z, f) for z, f in spec["linear"]))
    if isinstance(spec, dict) and "analytic" in spec:
        return named_cdf(spec["analytic"])
    raise ValidationError(f"unrecognized CDF specification: {spec!r}")


def _real_line_pbox(spec) -> RealLinePBox:
    if "point" in spec:
        return RealLinePBox.point_mass(float(spec["point"]))
    lower = spec.get("lower")
    if lower is None:
        raise ValidationError("real-line p-boxes need 'lower' knots or a 'point'")
    return RealLinePBox.from_knots(lower, spec.get("upper"))


def _oscillation_from_spec(spec):
    if "builtin" in spec:
        return named_oscillation(spec["builtin"])
    if "knots" in spec:
        return piecewise_linear_oscillation(spec["knots"])
    raise ValidationError("oscillations need 'builtin' or 'knots'")


def _event_from_spec(query: dict, space):
    if "classes" in query:
        return ClassSubset(frozenset(int(i) for i in query["classes"]))
    if "intervals" in query:
        return normalize([ZInterval(float(lo), float(hi), bool(lo_open), bool(hi_open))
                          for lo, hi, lo_open, hi_open in query["intervals"]])
    raise ValidationError(f"query {query.get('id')!r} needs 'classes' or 'intervals'")


def _pbox_from_spec(spec, space) -> PBox | None:
    if spec is None:
        return None
    if "builtin" in spec:
        return builtin_scenario(spec["builtin"]).pbox
    if "step" in spec:
        if not isinstance(space, FiniteQuotientSpace):
            raise ValidationError("step p-boxes need a finite space")
        return PBox(StepCdf(tuple(spec["step"]["lower"])),
                    StepCdf(tuple(spec["step"]["upper"])), space)
    if "linear" in spec:
        return PBox(PiecewiseLinearCdf(tuple(map(tuple, spec["linear"]["lower"]))),
                    PiecewiseLinearCdf(tuple(map(tuple, spec["linear"]["upper"]))),
                    UNIT_INTERVAL)
    if "analytic" in spec:
        return PBox(named_cdf(spec["analytic"]["lower"]),
                    named_cdf(spec["analytic"]["upper"]), UNIT_INTERVAL)
    if "marginals" in spec:
        marginals = [MarginalSpec(_cdf_from_spec(m["lower"]), _cdf_from_spec(m["upper"]))
                     for m in spec["marginals"]]
        rule_name = spec.get("rule", "frechet")
        if rule_name not in _RULES:
            raise ValidationError(f"unknown combination rule {rule_name!r}")
        return combine(marginals, _RULES[rule_name])
    raise ValidationError(f"unrecognized p-box specification: {spec!r}")


def _queries_from_spec(raw_queries, space) -> tuple:
    queries = []
    for idx, raw in enumerate(raw_queries):
        kind = raw.get("kind")
        qid = str(raw.get("id", f"q{idx}"))
        if kind in ("event_lower", "event_upper"):
            queries.append(Query(qid, kind, event=_event_from_spec(raw, space)))
        elif kind in ("expectation_lower", "expectation_upper"):
            queries.append(Query(qid, kind,
                                 oscillation=_oscillation_from_spec(raw["oscillation"])))
        elif kind == "threshold":
            queries.append(Query(qid, kind,
                                 oscillation=_oscillation_from_spec(raw["oscillation"]),
                                 target=float(raw["target"])))
        elif kind in ("arith_add", "arith_op"):
            x1 = _real_line_pbox(raw["x1"])
            x2 = _real_line_pbox(raw["x2"])
            op = raw.get("op", "add") if kind == "arith_op" else "add"
            side = raw.get("side", "lower")
            ys = raw["y_grid"] if "y_grid" in raw else [raw["y"]]
            for k, y in enumerate(ys):
                suffix = f"_{k}" if "y_grid" in raw else ""
                queries.append(Query(qid + suffix, kind, x1=x1, x2=x2, op=op,
                                     y=float(y), side=side))
        else:
            raise ValidationError(f"unknown query kind {kind!r}")
    return tuple(queries)


def load_scenario(path: str):
    """Parse a scenario file into a runnable scenario and its config."""
    with open(path, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    space_spec = doc.get("space", {"type": "continuum"})
    if space_spec.get("type") == "finite":
        space = FiniteQuotientSpace(tuple(space_spec["classes"]))
    elif space_spec.get("type") in ("continuum", "z_induced"):
        space = UNIT_INTERVAL
    else:
        raise ValidationError(f"unknown space type {space_spec.get('type')!r}")
    pbox = _pbox_from_spec(doc.get("pbox"), space)
    queries = _queries_from_spec(doc.get("queries", []), space)
    cfg = DEFAULT_CONFIG
    raw_cfg = doc.get("config", {})
    known = {k: v for k, v in raw_cfg.items()
             if k in ("abs_tol", "max_refinements", "cut_grid", "bisect_tol", "tail_tol")}
    if known:
        cfg = replace(cfg, **known)
    name = doc.get("name", path)
    return Scenario(str(name), pbox, queries), cfg


def _merge_config(cfg: QuadratureConfig, args) -> QuadratureConfig:
    overrides = {}
    if getattr(args, "tol", None) is not None:
        overrides["abs_tol"] = args.tol
    if getattr(args, "tail_tol", None) is not None:
        overrides["tail_tol"] = args.tail_tol
    if getattr(args, "max_refine", None) is not None:
        overrides["max_refinements"] = args.max_refine
    return replace(cfg, **overrides) if overrides else cfg


def _emit_scenario(scenario: Scenario, cfg: QuadratureConfig, out) -> None:
    print(CSV_HEADER, file=out)
    for query in scenario.queries:
        start = time.perf_counter()
        result = run_query(scenario, query, cfg)
        elapsed_ms = int(round((time.perf_counter() - start) * 1000.0))
        print(f"{result.id},{result.kind},{_fmt(result.value)},"
              f"{_fmt(result.error_bound)},{elapsed_ms}", file=out)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_infer(args) -> int:
    scenario, cfg = load_scenario(args.file)
    _emit_scenario(scenario, _merge_config(cfg, args), sys.stdout)
    return 0


def _cmd_paper(args) -> int:
    scenario = builtin_scenario(args.name)
    _emit_scenario(scenario, _merge_config(DEFAULT_CONFIG, args), sys.stdout)
    return 0


def _scenario_from_source(source: str):
    if source in BUILTIN_NAMES:
        return builtin_scenario(source), DEFAULT_CONFIG
    return load_scenario(source)


def _integrand_probe(pbox, osc, side, cfg):
    def value(t: float) -> float:
        cut = cut_event(osc, t, cfg)
        if side == "upper":
            return upper_prob_event(pbox, complement_z(cut))
        return _pbox.lower_prob_event(pbox, cut)
    return value


def _cmd_table(args) -> int:
    scenario, cfg = _scenario_from_source(args.source)
    cfg = _merge_config(cfg, args)
    grid = args.grid
    if grid < 2:
        raise ValidationError("table grids need at least two points")
    if scenario.pbox is None:
        raise ValidationError(f"scenario {scenario.name!r} carries no p-box to tabulate")
    if args.what == "cdf":
        print("z,lower,upper")
        for z in np.linspace(0.0, 1.0, grid):
            print(f"{_fmt(float(z))},{_fmt(float(scenario.pbox.lower(z)))},"
                  f"{_fmt(float(scenario.pbox.upper(z)))}")
        return 0
    integrand_kinds = ("expectation_lower", "expectation_upper", "threshold")
    if args.query is not None:
        query = next((q for q in scenario.queries
                      if q.id == args.query and q.kind in integrand_kinds), None)
        if query is None:
            raise ValidationError(
                f"no expectation query with id {args.query!r} in {scenario.name!r}")
    else:
        query = next((q for q in scenario.queries if q.kind in integrand_kinds), None)
        if query is None:
            raise ValidationError("no expectation query to take an integrand from")
    side = "lower" if query.kind == "expectation_lower" else "upper"
    pbox = query.pbox_override or scenario.pbox
    probe = _integrand_probe(pbox, query.oscillation, side, cfg)
    lo = query.oscillation.inf_value
    hi = query.oscillation.sup_value
    if not np.isfinite(hi):
        span = 1.0
        for _ in range(64):
            hi = lo + span
            if probe(hi) < cfg.tail_tol:
                break
            span *= 2.0
        else:
            raise ToleranceError("integrand never fell below the tail tolerance")
    print("t,integrand")
    for t in np.linspace(lo, hi, grid):
        print(f"{_fmt(float(t))},{_fmt(probe(float(t)))}")
    return 0


# ---------------------------------------------------------------------------
# oracle campaign


def _instance_pbox(instance: FiniteCredalInstance) -> PBox:
    space = FiniteQuotientSpace(tuple(range(instance.n)))
    return PBox(StepCdf(tuple(float(v) for v in instance.lower_cum)),
                StepCdf(tuple(float(v) for v in instance.upper_cum)), space)


def run_verify(seed: int = 42, trials: int = 200, n_max: int = 6,
               events_per_instance: int = 10, gambles_per_instance: int = 5,
               out=None) -> int:
    """Full oracle campaign; returns 0 iff no violations were found.

    Compares the closed-form event and expectation machinery against the
    exact credal-polytope optimum on random instances, then runs the
    structural checkers (additivity on components, complete monotonicity,
    p-box representability round trips, envelope sampling bounds).
    """
    if out is None:
        out = sys.stdout
    rng = random.Random(seed)
    violations = []
    lp_checks = 0
    for index in range(trials):
        n = rng.randint(2, max(2, n_max))
        instance = random_credal_instance(rng, n)
        box = _instance_pbox(instance)
        for _ in range(events_per_instance):
            mask = rng.randrange(1, 1 << n)
            subset = ClassSubset(frozenset(i for i in range(n) if mask & (1 << i)))
            formula = _pbox.lower_prob_event(box, subset)
            exact = lp_lower_expectation(instance, [1 if i in subset.members else 0
                                                    for i in range(n)])
            lp_checks += 1
            if abs(formula - exact) > 1e-9:
                violations.append(
                    f"event mismatch: instance #{index} {_serialize(instance)} "
                    f"subset={sorted(subset.members)} formula={formula!r} lp={exact!r}")
        for _ in range(gambles_per_instance):
            gamble = [rng.randrange(-500, 501) / 100.0 for _ in range(n)]
            formula = _choquet.lower_expectation_finite(box, gamble)
            exact = lp_lower_expectation(instance, gamble)
            lp_checks += 1
            if abs(formula - exact) > 1e-9:
                violations.append(
                    f"gamble mismatch: instance #{index} {_serialize(instance)} "
                    f"gamble={gamble} formula={formula!r} lp={exact!r}")
            bound = envelope_sample_bound(instance, gamble, samples=16,
                                          seed=rng.randrange(1 << 30))
            if bound < exact - 1e-12:
                violations.append(
                    f"envelope bound below lp: instance #{index} {_serialize(instance)} "
                    f"gamble={gamble} bound={bound!r} lp={exact!r}")
        report = additivity_check(instance, trials=4, seed=rng.randrange(1 << 30))
        if not report.passed:
            violations.append(
                f"additivity violation: instance #{index} {_serialize(instance)} "
                f"{report.violations[0]}")
    print(f"lp-agreement: {trials} instances, {lp_checks} checks", file=out)

    structural = min(trials, 20)
    for index in range(structural):
        n = rng.randint(2, min(n_max, 5))
        instance = random_credal_instance(rng, n, denominator=100)
        table = natural_extension_table(instance)
        mono = complete_monotonicity_check(table, p_max=3)
        if not mono.passed:
            violations.append(
                f"monotonicity violation: {_serialize(instance)} {mono.violations[0]}")
        rep = pbox_representability_check(table)
        if not rep.matches:
            violations.append(
                f"representability mismatch: {_serialize(instance)} {rep.mismatches[0]}")
    print(f"structural: {structural} instances", file=out)

    for line in violations:
        print(line, file=out)
    print(f"RESULT: {'FAIL' if violations else 'PASS'} "
          f"({len(violations)} violations)", file=out)
    return 1 if violations else 0


def _serialize(instance: FiniteCredalInstance) -> str:
    lo = [str(v) for v in instance.lower_cum]
    hi = [str(v) for v in instance.upper_cum]
    return f"lower={lo} upper={hi}"


def _cmd_verify(args) -> int:
    return run_verify(seed=args.seed, trials=args.trials, n_max=args.n_max)


# ---------------------------------------------------------------------------
# parser


def _add_quadrature_flags(sub) -> None:
    sub.add_argument("--tol", type=float, default=None,
                     help="absolute quadrature tolerance (default 1e-4)")
    sub.add_argument("--tail-tol", type=float, default=None,
                     help="tail truncation tolerance (default 1e-8)")
    sub.add_argument("--max-refine", type=int, default=None,
                     help="maximum grid doublings (default 24)")
    sub.add_argument("--seed", type=int, default=0,
                     help="seed for any randomized queries")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pboxes",
        description="lower/upper probabilities and expectations from p-boxes")
    commands = parser.add_subparsers(dest="command", required=True)

    infer = commands.add_parser("infer", help="run a JSON scenario file")
    infer.add_argument("file")
    _add_quadrature_flags(infer)
    infer.set_defaults(func=_cmd_infer)

    paper = commands.add_parser("paper", help="run a builtin scenario by name")
    paper.add_argument("name", choices=BUILTIN_NAMES)
    _add_quadrature_flags(paper)
    paper.set_defaults(func=_cmd_paper)

    table = commands.add_parser("table", help="tabulate CDFs or an integrand")
    table.add_argument("source", help="scenario file or builtin name")
    table.add_argument("--what", choices=("cdf", "integrand"), default="cdf")
    table.add_argument("--grid", type=int, default=101)
    table.add_argument("--query", default=None,
                       help="id of the expectation query to tabulate "
                            "(default: the first one)")
    _add_quadrature_flags(table)
    table.set_defaults(func=_cmd_table)

    verify = commands.add_parser("verify", help="run the oracle campaign")
    verify.add_argument("--seed", type=int, default=42)
    verify.add_argument("--trials", type=int, default=200)
    verify.add_argument("--n-max", type=int, default=6)
    verify.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except json.JSONDecodeError as exc:
        print(f"parse error at line {exc.lineno} column {exc.colno}: {exc.msg}",
              file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, ToleranceError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
