"""Command-line front end.

Exit codes: 0 success, 1 mathematical failure (a witness is printed),
2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from . import config as cfgmod
from .contraction import ContractionInstance, check_remark1, classify, pair_data, verify_z
from .errors import (
    ConfigError,
    DegenerateInterval,
    DomainTooLarge,
    DuplicatePoint,
    EmptyDomain,
    ExprError,
    DomainError,
    InvalidParameter,
    NonFinitePoint,
    PointNotInDomain,
    ZContractError,
)
from .metric_core import MappingSpec, MetricSpec, build_domain, check_closure, verify_metric
from .oracle import run_oracle
from .picard import check_asymptotic_regularity, check_boundedness, check_cauchy_modulus, iterate, trace_to_csv
from .report import VerificationReport
from .simfun import check_axioms, from_config

OK, FAIL, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ------------------------------------------------------------ building blocks


def _expr_context(block: str, build):
    try:
        return build()
    except ExprError as exc:
        if isinstance(exc, DomainError):
            raise
        raise ConfigError(f"[{block}] {exc}") from None


def build_metric(cfg) -> MetricSpec:
    b = cfg["metric"]
    return _expr_context("metric", lambda: MetricSpec.from_expr(b["expr"], b.get("name")))


def build_map(cfg) -> MappingSpec:
    b = cfg["map"]
    return _expr_context("map", lambda: MappingSpec.from_expr(b["expr"], b.get("name")))


def build_zeta(cfg):
    return _expr_context("zeta", lambda: from_config(cfg["zeta"]))


def _dump(path: str | Path, payload) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n")


def _load_config(args) -> dict:
    if not args.config:
        raise UsageError("--config PATH is required")
    return cfgmod.load(args.config)


def _out_path(args, cfg) -> str | None:
    return args.out or cfg.get("output", {}).get("path")


# ------------------------------------------------------------ commands


def cmd_verify_simfun(args) -> int:
    cfg = _load_config(args)
    cfgmod.require(cfg, "zeta")
    zeta = build_zeta(cfg)
    report = check_axioms(zeta)
    print(report.format())
    out = _out_path(args, cfg)
    if out:
        _dump(out, {"zeta": zeta.describe(), "report": report.to_dict()})
    return OK if report.passed else FAIL


def run_checks(domain, metric, mapping, zeta) -> tuple[list[VerificationReport], bool]:
    """Zeta axioms, metric axioms, closure, distance preservation and the Z
    inequality, in that order; stops at the first failing report.

    A zeta that is not a simulation function certifies nothing, so its
    axioms are checked before the inequality is trusted.
    """
    reports = []
    for step in (
        lambda: check_axioms(zeta),
        lambda: verify_metric(metric, domain),
        lambda: check_closure(mapping, domain),
    ):
        r = step()
        reports.append(r)
        if not r.passed:
            return reports, False
    pd = pair_data(domain, metric, mapping)
    r = check_remark1(domain, metric, mapping, pd)
    reports.append(r)
    if not r.passed:
        return reports, False
    r = verify_z(ContractionInstance(domain, metric, mapping, zeta), pd)
    reports.append(r)
    return reports, r.passed


def cmd_check(args) -> int:
    cfg = _load_config(args)
    cfgmod.require(cfg, "domain", "metric", "map", "zeta")
    domain = build_domain(cfg["domain"])
    metric, mapping, zeta = build_metric(cfg), build_map(cfg), build_zeta(cfg)
    reports, ok = run_checks(domain, metric, mapping, zeta)
    for r in reports:
        print(r.format())
    out = _out_path(args, cfg)
    if out:
        _dump(out, {"passed": ok, "reports": [r.to_dict() for r in reports]})
    return OK if ok else FAIL


def solve(domain, metric, mapping, settings: cfgmod.SolverSettings) -> dict:
    """Iterate from every start and collect traces, diagnostics and the
    agreement verdict (all limits within 10 * fix_tol of each other)."""
    rows = []
    traces = []
    for x0 in settings.x0:
        try:
            tr = iterate(domain, metric, mapping, x0, settings.step_tol, settings.fix_tol, settings.max_iter, settings.window)
        except NonFinitePoint as exc:
            tr = exc.trace
        traces.append(tr)
        row = {
            "start": x0,
            "verdict": tr.verdict,
            "fixed_point": tr.fixed_point,
            "steps": tr.n_steps,
            "residual": tr.residual if tr.residual == tr.residual else None,
        }
        if tr.step_dist:
            row["asymptotic_regularity"] = check_asymptotic_regularity(tr).passed
            row["cauchy_modulus"] = check_cauchy_modulus(tr).passed
        row["diameter"] = check_boundedness(tr).entries[0].value
        rows.append(row)
    converged = [t for t in traces if t.converged]
    agree = True
    spread = None
    if len(converged) == len(traces):
        limits = [t.fixed_point for t in converged]
        spread = max(metric.distance(a, b) for a in limits for b in limits)
        agree = spread <= 10 * settings.fix_tol
    return {
        "rows": rows,
        "traces": traces,
        "all_converged": len(converged) == len(traces),
        "agree": agree,
        "spread": spread,
    }


def _print_solve_table(rows) -> None:
    print(f"{'start':>12} {'verdict':>18} {'fixed point':>14} {'steps':>8} {'residual':>12}")
    for r in rows:
        fp = "-" if r["fixed_point"] is None else f"{r['fixed_point']:.6g}"
        res = "-" if r["residual"] is None else f"{r['residual']:.6g}"
        print(f"{r['start']:>12.6g} {r['verdict']:>18} {fp:>14} {r['steps']:>8} {res:>12}")


def _write_traces(result, out_dir: str | Path, fmt: str) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for k, tr in enumerate(result["traces"]):
        if fmt == "csv":
            (out_dir / f"trace_{k}.csv").write_text(trace_to_csv(tr))
        else:
            _dump(out_dir / f"trace_{k}.json", tr.to_dict())
    _dump(out_dir / "summary.json", _summary_payload(result))


def _summary_payload(result) -> dict:
    return {
        "all_converged": result["all_converged"],
        "agree": result["agree"],
        "spread": result["spread"],
        "rows": result["rows"],
    }


def cmd_solve(args) -> int:
    cfg = _load_config(args)
    cfgmod.require(cfg, "domain", "metric", "map", "solver")
    domain = build_domain(cfg["domain"])
    metric, mapping = build_metric(cfg), build_map(cfg)
    settings = cfgmod.solver_settings(cfg)
    if not args.force:
        if "zeta" not in cfg:
            raise ConfigError("solve checks the instance first and needs [zeta]; pass --force to skip the check")
        reports, ok = run_checks(domain, metric, mapping, build_zeta(cfg))
        if not ok:
            for r in reports:
                print(r.format())
            print("instance failed its checks; rerun with --force to iterate anyway")
            return FAIL
    result = solve(domain, metric, mapping, settings)
    _print_solve_table(result["rows"])
    out = _out_path(args, cfg)
    if out:
        fmt = args.format or cfg.get("output", {}).get("format", "csv")
        _write_traces(result, out, fmt)
    if not result["all_converged"]:
        print("not every start converged")
        return FAIL
    if not result["agree"]:
        print(
            f"uniqueness violated: limits differ by {result['spread']:.6g} > 10*fix_tol; "
            "a Z-contraction has at most one fixed point"
        )
        return FAIL
    return OK


def cmd_classify(args) -> int:
    cfg = _load_config(args)
    cfgmod.require(cfg, "domain", "metric", "map")
    domain = build_domain(cfg["domain"])
    metric, mapping = build_metric(cfg), build_map(cfg)
    result = classify(domain, metric, mapping)
    print(f"classification of {mapping.name} under {metric.name}")
    print(result.format())
    out = _out_path(args, cfg)
    if out:
        _dump(out, result.to_dict())
    return OK


def example2_config(n: int = 1000, zeta_expr: str | None = None) -> dict:
    text = resources.files("zcontract").joinpath("data/example2.toml").read_text()
    cfg = cfgmod.loads(text)
    cfg["domain"]["n"] = n
    if zeta_expr is not None:
        cfg["zeta"] = {"family": "custom", "expr": zeta_expr}
    return cfgmod.validate(cfg)


def reproduce_example2(n: int = 1000, zeta_expr: str | None = None) -> dict:
    """Check and solve the built-in max-metric example; returns a JSON-ready record."""
    cfg = example2_config(n, zeta_expr)
    domain = build_domain(cfg["domain"])
    metric, mapping = build_metric(cfg), build_map(cfg)
    zeta = build_zeta(cfg)
    reports, checks_ok = run_checks(domain, metric, mapping, zeta)
    record = {
        "n": n,
        "zeta": zeta.describe(),
        "checks_passed": checks_ok,
        "reports": [r.to_dict() for r in reports],
    }
    settings = cfgmod.solver_settings(cfg)
    result = solve(domain, metric, mapping, settings)
    to_zero = all(
        r["verdict"] == "converged" and metric.distance(r["fixed_point"], 0.0) <= 10 * settings.fix_tol
        for r in result["rows"]
    )
    record["solve"] = _summary_payload(result)
    record["converged_to_zero"] = to_zero
    record["passed"] = checks_ok and to_zero and result["agree"]
    return record


def cmd_reproduce_example2(args) -> int:
    record = reproduce_example2(args.n, args.zeta)
    for r in record["reports"]:
        print(f"{r['subject']}: {'PASS' if r['passed'] else 'FAIL'}")
        for e in r["entries"]:
            if not e["passed"]:
                print(f"  [FAIL] {e['name']} witness={e['witness']} value={e['value']}")
    _print_solve_table(record["solve"]["rows"])
    print("example reproduced" if record["passed"] else "example NOT reproduced")
    if args.out:
        _dump(args.out, record)
    return OK if record["passed"] else FAIL


def cmd_oracle(args) -> int:
    seed = 0 if args.seed is None else args.seed
    summary = run_oracle(seed, args.count)
    print(
        f"seed {seed}: {summary['count']} instances, {summary['certified']} certified, "
        f"{len(summary['counterexamples'])} counterexample(s)"
    )
    for c in summary["counterexamples"]:
        print(f"  instance {c['index']}: {'; '.join(c.get('problems', [c.get('reason', '')]))}")
    if args.out:
        _dump(args.out, summary)
    return OK if not summary["counterexamples"] else FAIL


# ------------------------------------------------------------ entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML experiment config")
    common.add_argument("--out", metavar="PATH", help="machine-readable output (file, or directory for solve)")
    common.add_argument("--format", choices=("csv", "json"), help="trace format for solve")
    common.add_argument("--force", action="store_true", help="solve without the instance check")
    common.add_argument("--seed", type=int, help="seed for randomised suites")

    parser = argparse.ArgumentParser(prog="zcontract", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify-simfun", parents=[common], help="check the simulation-function axioms").set_defaults(
        func=cmd_verify_simfun
    )
    sub.add_parser("check", parents=[common], help="metric, closure, distance preservation, Z inequality").set_defaults(
        func=cmd_check
    )
    sub.add_parser("solve", parents=[common], help="Picard iteration from every start").set_defaults(func=cmd_solve)
    sub.add_parser("classify", parents=[common], help="test the map against each contraction family").set_defaults(
        func=cmd_classify
    )
    p = sub.add_parser("reproduce-example2", parents=[common], help="built-in max-metric example, end to end")
    p.add_argument("--n", type=int, default=1000, help="grid resolution (default 1000)")
    p.add_argument("--zeta", metavar="EXPR", help="replace the example's zeta by a custom expression in t, s")
    p.set_defaults(func=cmd_reproduce_example2)
    p = sub.add_parser("oracle", parents=[common], help="randomised uniqueness/convergence sweep on finite spaces")
    p.add_argument("--count", type=int, default=300)
    p.set_defaults(func=cmd_oracle)
    return parser


_USAGE_ERRORS = (
    UsageError,
    ConfigError,
    InvalidParameter,
    EmptyDomain,
    DegenerateInterval,
    DuplicatePoint,
    DomainTooLarge,
    PointNotInDomain,
)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code not in (0, None) else OK
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except ZContractError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        if exc.witness is not None:
            print(f"witness: {exc.witness!r}", file=sys.stderr)
        return FAIL


if __name__ == "__main__":
    sys.exit(main())
