"""``detplace`` command line: validate, paths, coverage, solve, enumerate, sweep.

Exit codes: 0 success, 1 internal error, 2 invalid input, 3 resource limit.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from typing import Any, Sequence

from .coverage import CoverageTable, build_coverage
from .grid_model import (
    DETECTOR_PARAMETERS,
    GridScenario,
    ScenarioError,
    load_scenario,
    one_layer,
    validate_scenario,
    with_parameter,
)
from .objective import expected_casualties
from .pathing import NoPath, all_paths
from .solver import InstanceTooLarge, NodeRecord, SolveOptions, SolveResult, enumerate_optimal, solve_bnb

log = logging.getLogger("detplace")

EXIT_OK, EXIT_INTERNAL, EXIT_INVALID, EXIT_LIMIT = 0, 1, 2, 3
SWEEP_MODES = ("two_layer", "one_layer", "both")


class CLIError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def fmt(obj: Any) -> Any:
    """Round every float to 9 significant digits; non-finite floats become null."""
    if isinstance(obj, float):
        return float(f"{obj:.9g}") if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): fmt(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [fmt(v) for v in obj]
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(fmt(obj), sort_keys=True)


def coverage_to_dict(cov: CoverageTable) -> dict:
    def rho(table):
        return [{"cell": i, "entrance": e, "target": j, "rho": r}
                for (i, e, j), r in sorted(table.items())]

    def elig(table):
        return [{"entrance": e, "target": j, "cells": sorted(cells)}
                for (e, j), cells in sorted(table.items())]

    return {
        "rho_primary": rho(cov.rho_primary),
        "rho_secondary": rho(cov.rho_secondary),
        "eligible_primary": elig(cov.eligible_primary),
        "eligible_secondary": elig(cov.eligible_secondary),
        "candidates_P": sorted(cov.candidates_P),
        "candidates_S": sorted(cov.candidates_S),
    }


def _load(path: str, validate: bool = True) -> GridScenario:
    try:
        s = load_scenario(path)
    except OSError as exc:
        raise CLIError(f"{path}: {exc.strerror}", EXIT_INVALID) from exc
    except ScenarioError as exc:
        raise CLIError(f"{path}: {exc}", EXIT_INVALID) from exc
    if validate:
        violations = validate_scenario(s)
        if violations:
            print(dumps({"violations": [v.to_dict() for v in violations]}))
            raise CLIError(f"{path}: {len(violations)} validation violation(s)", EXIT_INVALID)
    return s


def _options(args: argparse.Namespace) -> SolveOptions:
    return SolveOptions(
        gap_tolerance=args.gap,
        node_limit=args.node_limit,
        mccormick_partitions=args.partitions,
        tangent_breakpoints=args.tangents,
        time_limit=args.time_limit,
        parallel_nodes=args.threads,
    )


def _pipeline(s: GridScenario):
    try:
        paths = all_paths(s)
    except NoPath as exc:
        raise CLIError(str(exc), EXIT_INVALID) from exc
    return paths, build_coverage(s, paths)


def _report(s: GridScenario, cov: CoverageTable, res: SolveResult) -> dict:
    return {
        "scenario": s.name,
        "result": res.to_dict(),
        "breakdown": expected_casualties(s, cov, res.placement).to_dict(),
        "candidates": {"primary": len(cov.candidates_P), "secondary": len(cov.candidates_S)},
    }


def _result_code(res: SolveResult) -> int:
    if res.status in ("Optimal", "GapReached"):
        return EXIT_OK
    if res.status in ("NodeLimit", "TimeLimit"):
        return EXIT_LIMIT
    return EXIT_INTERNAL


def cmd_validate(args: argparse.Namespace) -> int:
    s = _load(args.scenario, validate=False)
    violations = validate_scenario(s)
    print(dumps({"violations": [v.to_dict() for v in violations]}))
    return EXIT_INVALID if violations else EXIT_OK


def cmd_paths(args: argparse.Namespace) -> int:
    s = _load(args.scenario)
    paths, _ = _pipeline(s)
    for (e, j), p in sorted(paths.items()):
        print(dumps({"entrance": e, "target": j, "cells": list(p.cells),
                     "total_length": p.total_length, "truncated_length": p.truncated_length}))
    return EXIT_OK


def cmd_coverage(args: argparse.Namespace) -> int:
    s = _load(args.scenario)
    _, cov = _pipeline(s)
    print(dumps(coverage_to_dict(cov)))
    return EXIT_OK


def _tracer(enabled: bool):
    if not enabled:
        return None

    def trace(rec: NodeRecord) -> None:
        print(rec.line(), file=sys.stderr)

    return trace


def cmd_solve(args: argparse.Namespace) -> int:
    s = _load(args.scenario)
    _, cov = _pipeline(s)
    res = solve_bnb(s, cov, _options(args), trace=_tracer(args.trace))
    print(dumps(_report(s, cov, res)))
    return _result_code(res)


def cmd_enumerate(args: argparse.Namespace) -> int:
    s = _load(args.scenario)
    _, cov = _pipeline(s)
    try:
        res = enumerate_optimal(s, cov)
    except InstanceTooLarge as exc:
        raise CLIError(str(exc), EXIT_LIMIT) from exc
    print(dumps(_report(s, cov, res)))
    return _result_code(res)


def parse_values(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise CLIError(f"--values: {exc}", EXIT_INVALID) from exc
    if not values:
        raise CLIError("--values: empty list", EXIT_INVALID)
    if any(b <= a for a, b in zip(values, values[1:])):
        raise CLIError("--values: must be strictly increasing", EXIT_INVALID)
    return values


def run_sweep(s: GridScenario, param: str, values: Sequence[float], mode: str,
              opts: SolveOptions) -> tuple[list[dict], list[str]]:
    """Solve each sweep point; returns CSV rows and monotonicity violations."""
    modes = ("two_layer", "one_layer") if mode == "both" else (mode,)
    rows: list[dict] = []
    for value in values:
        base = with_parameter(s, param, value)
        for m in modes:
            inst = one_layer(base) if m == "one_layer" else base
            t0 = time.perf_counter()
            try:
                _, cov = _pipeline(inst)
                res = solve_bnb(inst, cov, opts)
                row = {"objective": res.objective, "gap": res.relative_gap,
                       "nodes": res.nodes_explored, "status": res.status}
            except Exception as exc:  # recorded per row
                row = {"objective": math.nan, "gap": math.nan, "nodes": 0,
                       "status": f"error: {exc}"}
            row.update(param=param, value=value, mode=m, seconds=time.perf_counter() - t0)
            rows.append(row)

    problems = []
    slack = lambda obj: opts.gap_tolerance * abs(obj) + 1e-9  # noqa: E731
    for m in modes:
        series = [r for r in rows if r["mode"] == m and math.isfinite(r["objective"])]
        for a, b in zip(series, series[1:]):
            if b["objective"] > a["objective"] + slack(a["objective"]):
                problems.append(f"{m}: objective rises from {a['objective']:.9g} at {param}={a['value']:.9g}"
                                f" to {b['objective']:.9g} at {param}={b['value']:.9g}")
    if mode == "both":
        by_value: dict[float, dict[str, float]] = {}
        for r in rows:
            by_value.setdefault(r["value"], {})[r["mode"]] = r["objective"]
        for value, objs in by_value.items():
            two, one = objs.get("two_layer", math.nan), objs.get("one_layer", math.nan)
            if math.isfinite(two) and math.isfinite(one) and two > one + slack(one):
                problems.append(f"two_layer {two:.9g} exceeds one_layer {one:.9g} at {param}={value:.9g}")
    return rows, problems


SWEEP_COLUMNS = ["param", "value", "mode", "objective", "gap", "nodes", "seconds", "status"]


def cmd_sweep(args: argparse.Namespace) -> int:
    s = _load(args.scenario)
    values = parse_values(args.values)
    rows, problems = run_sweep(s, args.param, values, args.mode, _options(args))
    writer = csv.DictWriter(sys.stdout, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (f"{v:.9g}" if isinstance(v, float) else v) for k, v in r.items()})
    for p in problems:
        log.error("monotonicity violated: %s", p)
    if problems:
        return EXIT_INTERNAL
    if any(r["status"] in ("NodeLimit", "TimeLimit") for r in rows):
        return EXIT_LIMIT
    if any(r["status"].startswith("error") for r in rows):
        return EXIT_INTERNAL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="detplace", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_: str, solver: bool = False) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_)
        p.add_argument("scenario", help="scenario JSON file")
        p.set_defaults(func=func)
        if solver:
            p.add_argument("--gap", type=float, default=1e-6, help="relative gap tolerance")
            p.add_argument("--node-limit", type=int, default=10_000_000)
            p.add_argument("--time-limit", type=float, default=None, help="seconds")
            p.add_argument("--partitions", type=int, default=4, help="McCormick partitions")
            p.add_argument("--tangents", type=int, default=4, help="tangent breakpoints per term")
            p.add_argument("--trace", action="store_true", help="node log on stderr")
            p.add_argument("--threads", type=int, default=1, help="parallel node LP solves")
        return p

    add("validate", cmd_validate, "check a scenario and list violations")
    add("paths", cmd_paths, "shortest attacker paths as JSON lines")
    add("coverage", cmd_coverage, "detection probabilities and candidate sets")
    add("solve", cmd_solve, "optimal placement by branch and bound", solver=True)
    add("enumerate", cmd_enumerate, "optimal placement by exhaustive enumeration", solver=True)
    sw = add("sweep", cmd_sweep, "re-solve over a parameter grid, CSV on stdout", solver=True)
    sw.add_argument("--param", required=True, choices=sorted(DETECTOR_PARAMETERS))
    sw.add_argument("--values", required=True, help="comma-separated, strictly increasing")
    sw.add_argument("--mode", choices=SWEEP_MODES, default="two_layer")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"detplace: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"detplace: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # pragma: no cover
        log.exception("internal error: %s", exc)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
