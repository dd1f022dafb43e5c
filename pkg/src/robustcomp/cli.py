"""Command-line front end.

Four subcommands: ``estimate`` evaluates an estimator stack over a dataset
file, ``breakdown`` measures breakdown counts and checks the composition
bounds, ``manipulate`` plans a median-of-medians relocation, and ``monitor``
runs the router-attack grid. Reports are structured (JSON) or tabular text,
always embed the resolved configuration and tool version, and are byte
identical for identical configuration and seed.

Exit codes: 0 success, 2 parse error, 3 validation error, 4 convergence
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__
from .breakdown import (
    ContaminationModel,
    check_bounds,
    composite_fraction,
    measure_report,
)
from .composition import (
    CompositeSpec,
    HierarchicalDataset,
    evaluate_with_intermediates,
)
from .datafiles import read_dataset
from .errors import (
    ChainError,
    ConfigError,
    ConvergenceError,
    EstimatorError,
    ParseError,
)
from .estimators import EstimatorSpec, Kind, evaluate
from .manipulate import plan_manipulation
from .monitor import (
    DEFAULT_COMBOS,
    run_grid,
    report_to_csv,
    table_scenarios,
)

EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_CONVERGENCE = 4

_KIND_NAMES = {k.value: k for k in Kind}


def parse_estimator(text: str) -> tuple[int, EstimatorSpec]:
    """Parse one ``LEVEL=KIND[:q]`` flag value."""
    try:
        level_text, spec_text = text.split("=", 1)
        level = int(level_text)
    except ValueError:
        raise ConfigError(f"expected LEVEL=KIND[:q], got {text!r}") from None
    kind_text, _, q_text = spec_text.partition(":")
    kind = _KIND_NAMES.get(kind_text.strip().lower())
    if kind is None:
        raise ConfigError(
            f"unknown estimator kind {kind_text!r}; choose from "
            f"{sorted(_KIND_NAMES)}"
        )
    q = None
    if q_text:
        try:
            q = float(q_text)
        except ValueError:
            raise ConfigError(f"bad q value {q_text!r}") from None
    try:
        return level, EstimatorSpec(kind, q)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_levels(args, depth: int) -> list[EstimatorSpec]:
    parsed = dict(parse_estimator(e) for e in args.estimator or [])
    if not parsed:
        parsed = {lv: EstimatorSpec(Kind.MEDIAN) for lv in range(1, depth + 1)}
    if sorted(parsed) != list(range(1, depth + 1)):
        raise ConfigError(
            f"need estimator levels 1..{depth}, got {sorted(parsed)}"
        )
    return [parsed[lv] for lv in range(1, depth + 1)]


def _spec_json(spec: EstimatorSpec, level: int) -> dict:
    return {"level": level, "kind": spec.kind.value, "q": spec.q}


def _config_json(args, command: str, levels=None) -> dict:
    cfg = {
        "tool_version": __version__,
        "command": command,
        "seed": args.seed,
        "format": args.format,
    }
    if levels is not None:
        cfg["estimators"] = [_spec_json(s, i + 1) for i, s in enumerate(levels)]
    for name in ("depth", "weiszfeld_tol", "grad_tol", "flag_threshold"):
        if hasattr(args, name):
            cfg[name] = getattr(args, name)
    if hasattr(args, "ladder"):
        cfg["ladder"] = list(args.ladder)
    if getattr(args, "dataset", None) is not None:
        cfg["dataset"] = str(args.dataset)
    return cfg


def _emit(args, payload: dict, tabular: str | None = None) -> None:
    if args.format == "tabular" and tabular is not None:
        text = tabular
    else:
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _jsonable(value):
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {
            k: _jsonable(v) for k, v in dataclasses.asdict(value).items()
        }
    if hasattr(value, "_asdict"):
        return {k: _jsonable(v) for k, v in value._asdict().items()}
    return value


def cmd_estimate(args) -> int:
    data = read_dataset(args.dataset, args.depth)
    levels = _build_levels(args, args.depth)
    if args.depth == 1:
        value = evaluate(levels[0], data.groups[0], weiszfeld_tol=args.weiszfeld_tol)
        intermediates = []
    else:
        value, intermediates = evaluate_with_intermediates(
            CompositeSpec(levels), data, weiszfeld_tol=args.weiszfeld_tol
        )
    payload = {
        "config": _config_json(args, "estimate", levels),
        "value": _jsonable(value),
        "intermediates": _jsonable(tuple(tuple(lv) for lv in intermediates)),
    }
    lines = [f"estimate  {' -> '.join(s.label() for s in levels)}"]
    for depth_idx, vals in enumerate(intermediates, start=1):
        lines.append(f"level {depth_idx} outputs: {vals!r}")
    lines.append(f"value: {value!r}")
    _emit(args, payload, "\n".join(lines) + "\n")
    return 0


def cmd_breakdown(args) -> int:
    data = read_dataset(args.dataset, args.depth)
    levels = _build_levels(args, args.depth)
    model = ContaminationModel(ladder=tuple(args.ladder))
    payload = {"config": _config_json(args, "breakdown", levels)}
    if args.depth == 1:
        report = measure_report(
            levels[0], data, model, with_onto=args.onto,
            weiszfeld_tol=args.weiszfeld_tol,
        )
        payload["report"] = _jsonable(report)
    else:
        spec = CompositeSpec(levels)
        composite_report = measure_report(
            spec, data, model, weiszfeld_tol=args.weiszfeld_tol
        )
        payload["report"] = _jsonable(composite_report)
        payload["analytic"] = _jsonable(composite_fraction(spec))
        if args.depth == 2:
            inner_data = HierarchicalDataset.flat(data.groups[0], data.kind)
            inner_report = measure_report(
                levels[0], inner_data, model, with_onto=True,
                weiszfeld_tol=args.weiszfeld_tol,
            )
            outer_values = [
                evaluate(levels[0], g, weiszfeld_tol=args.weiszfeld_tol)
                for g in data.groups
            ]
            outer_kind = "point" if levels[1].input_space == "2d" else "scalar"
            outer_report = measure_report(
                levels[1],
                HierarchicalDataset.flat(outer_values, outer_kind),
                model,
                weiszfeld_tol=args.weiszfeld_tol,
            )
            checks = check_bounds(inner_report, outer_report, composite_report)
            composite_report = dataclasses.replace(
                composite_report, checks=tuple(checks)
            )
            payload["report"] = _jsonable(composite_report)
            payload["inner_report"] = _jsonable(inner_report)
            payload["outer_report"] = _jsonable(outer_report)
            payload["checks"] = _jsonable(tuple(checks))
    rep = payload["report"]
    lines = [
        f"breakdown  {rep['estimator']}",
        f"size: {rep['size']}  breakdown_count: {rep['breakdown_count']}"
        f"  onto_count: {rep['onto_count']}",
        f"analytic_fraction: {rep['analytic_fraction']}",
    ]
    for check in payload.get("checks", []):
        lines.append(
            f"check {check['name']}: {check['lhs']} vs {check['rhs']} "
            f"holds={check['holds']}"
        )
    _emit(args, payload, "\n".join(lines) + "\n")
    return 0


def cmd_manipulate(args) -> int:
    data = read_dataset(args.dataset, 2)
    if data.kind != "point":
        raise ConfigError("manipulate needs a dataset of x,y points")
    try:
        tx, ty = (float(t) for t in args.target.split(","))
    except ValueError:
        raise ConfigError(f"expected --target x,y, got {args.target!r}") from None
    plan = plan_manipulation(
        data,
        (tx, ty),
        grad_tol=args.grad_tol,
        weiszfeld_tol=args.weiszfeld_tol,
    )
    payload = {
        "config": _config_json(args, "manipulate"),
        "target": [tx, ty],
        "achieved": list(plan.achieved),
        "residual": plan.residual,
        "moved_groups": plan.moved_groups,
        "moved_per_group": plan.moved_per_group,
        "moves": [
            {
                "group": mv.group,
                "index": mv.index,
                "old": list(mv.old),
                "new": list(mv.new),
            }
            for mv in plan.moves
        ],
        "top_iterations": plan.top_iterations,
        "top_grad_norm": plan.top_grad_norm,
        "group_iterations": list(plan.group_iterations),
        "group_grad_norms": list(plan.group_grad_norms),
    }
    lines = [
        f"manipulate  target=({tx!r}, {ty!r})",
        f"achieved: {plan.achieved!r}  residual: {plan.residual!r}",
        f"moved {len(plan.moves)} of {data.total_points} points",
    ]
    for mv in plan.moves:
        lines.append(
            f"group {mv.group} point {mv.index}: {mv.old!r} -> {mv.new!r}"
        )
    _emit(args, payload, "\n".join(lines) + "\n")
    return 0


def cmd_monitor(args) -> int:
    scenarios = table_scenarios(
        args.seed, router_count=args.routers, stream_length=args.stream_length
    )
    combos = DEFAULT_COMBOS
    reports = [
        run_grid(
            sc,
            combos,
            exact=not args.frugal,
            flag_threshold=args.flag_threshold,
        )
        for sc in scenarios
    ]
    payload = {
        "config": _config_json(args, "monitor"),
        "combos": [list(c) for c in combos],
        "rows": [
            {
                "proportion": rep.scenario.proportion,
                "interval": list(rep.scenario.interval)
                if rep.scenario.interval
                else None,
                "attacked": rep.scenario.attacked,
                "outliers_per_stream": rep.scenario.outliers_per_stream,
                "seed": rep.scenario.seed,
                "values": list(rep.values),
                "flags": list(rep.flags),
            }
            for rep in reports
        ],
    }
    _emit(args, payload, report_to_csv(reports))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustcomp",
        description="Resistant estimator composition, breakdown measurement, "
        "median-of-medians relocation planning, and percentile-based stream "
        "monitoring under attack.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dataset=True):
        if dataset:
            p.add_argument("dataset", help="dataset file (one line per group)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument(
            "--format", choices=("structured", "tabular"), default="structured"
        )
        p.add_argument("--out", default=None, help="write the report here")
        p.add_argument("--weiszfeld-tol", type=float, default=1e-9)

    est = sub.add_parser("estimate", help="evaluate an estimator stack")
    common(est)
    est.add_argument("--depth", type=int, choices=(1, 2, 3), default=2)
    est.add_argument(
        "--estimator",
        action="append",
        metavar="LEVEL=KIND[:q]",
        help="repeatable; e.g. --estimator 1=percentile:0.45 --estimator 2=median",
    )
    est.set_defaults(func=cmd_estimate)

    brk = sub.add_parser("breakdown", help="measure breakdown counts")
    common(brk)
    brk.add_argument("--depth", type=int, choices=(1, 2, 3), default=1)
    brk.add_argument("--estimator", action="append", metavar="LEVEL=KIND[:q]")
    brk.add_argument(
        "--ladder",
        type=lambda s: [float(x) for x in s.split(",")],
        default=[1e3, 1e6, 1e9, 1e12],
        help="comma-separated contamination magnitudes",
    )
    brk.add_argument(
        "--onto",
        action="store_true",
        help="also measure the onto count (depth 1 only)",
    )
    brk.set_defaults(func=cmd_breakdown)

    man = sub.add_parser("manipulate", help="relocate a median of medians")
    common(man)
    man.add_argument(
        "--target",
        required=True,
        metavar="X,Y",
        help="target point; write --target=X,Y when X is negative",
    )
    man.add_argument("--grad-tol", type=float, default=1e-5)
    man.set_defaults(func=cmd_manipulate)

    mon = sub.add_parser("monitor", help="run the router attack grid")
    common(mon, dataset=False)
    mon.add_argument("--routers", type=int, default=100)
    mon.add_argument("--stream-length", type=int, default=1000)
    mon.add_argument("--flag-threshold", type=float, default=50.0)
    mon.add_argument(
        "--frugal",
        action="store_true",
        help="use the frugal sketch per router instead of exact percentiles",
    )
    mon.set_defaults(func=cmd_monitor)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigError, ChainError, EstimatorError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
