"""Command-line interface: validate, solve, compare and metrics workflows.

Exit codes are a stable contract: 0 success, 1 parse error, 2 validation
failure, 3 solver failure. Identical inputs and flags produce byte-identical
output.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import json
import sys
from typing import Any

import numpy as np

from . import io as fio
from .bfs import BfsOptions, residual, solve_bfs
from .errors import (
    ParseError,
    RadialFlowError,
    RadialityError,
    ValidationError,
)
from .linsolve import Solution, assemble, solve_linear, solve_linear_full
from .metrics import node_errors, summarize
from .network import Feeder, build_incidence

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_VALIDATION = 2
EXIT_SOLVER = 3

LINEAR_METHODS = ("linear-simple", "linear-full")


def _read_feeder(path: str) -> Feeder:
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    return fio.parse_feeder(text)


def _bfs_options(args: argparse.Namespace) -> BfsOptions:
    return BfsOptions(
        tolerance=args.tolerance, max_iterations=args.max_iterations
    )


def _solve(feeder: Feeder, method: str, args: argparse.Namespace) -> Solution:
    if method == "bfs":
        return solve_bfs(feeder, _bfs_options(args))
    v0 = args.v0
    if method == "linear-full":
        return solve_linear_full(feeder, v0)
    return solve_linear(assemble(feeder, v0, mode="simple"))


def _emit(args: argparse.Namespace, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        _read_feeder(args.input)
    except ParseError as exc:
        _emit(args, f"PARSE ERROR: {exc}\n")
        return EXIT_PARSE
    except ValidationError as exc:
        lines = ["INVALID"] + [f"- {v}" for v in exc.violations]
        _emit(args, "\n".join(lines) + "\n")
        return EXIT_VALIDATION
    _emit(args, "OK\n")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    feeder = _read_feeder(args.input)
    solution = _solve(feeder, args.method, args)
    inc = build_incidence(feeder)
    report = summarize(solution, inc, feeder)
    _emit(args, fio.write_solution(solution, report, args.format))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    feeder = _read_feeder(args.input)
    reference = solve_bfs(feeder, _bfs_options(args))
    solution = _solve(feeder, args.method, args)
    inc = build_incidence(feeder)
    epsilon = node_errors(solution, reference)
    lin_report = summarize(solution, inc, feeder, reference=reference)
    ref_report = summarize(reference, inc, feeder)
    p = feeder.phase_count

    rows = []
    for node_idx, node in enumerate(feeder.nodes):
        for phase in range(p):
            flat = node_idx * p + phase
            row: dict[str, Any] = {
                "id": node,
                "phase": fio.phase_label(phase, p),
                "v_mag_linear": fio.fmt_number(abs(solution.voltages[flat])),
                "v_mag_bfs": fio.fmt_number(abs(reference.voltages[flat])),
                "epsilon": fio.fmt_number(float(epsilon[flat])),
            }
            if p == 3:
                row["luvr_linear"] = fio.fmt_number(float(lin_report.luvr[node_idx]))
                row["luvr_bfs"] = fio.fmt_number(float(ref_report.luvr[node_idx]))
            rows.append(row)

    summary: dict[str, Any] = {
        "max_epsilon": fio.fmt_number(float(np.max(epsilon))),
        "mean_epsilon": fio.fmt_number(float(np.mean(epsilon))),
        "v_min": {
            "linear": fio.fmt_number(lin_report.v_min),
            "bfs": fio.fmt_number(ref_report.v_min),
        },
        "p_loss": {
            "linear": fio.fmt_number(lin_report.p_loss),
            "bfs": fio.fmt_number(ref_report.p_loss),
        },
        "q_loss": {
            "linear": fio.fmt_number(lin_report.q_loss),
            "bfs": fio.fmt_number(ref_report.q_loss),
        },
        "residual": {
            "linear": fio.fmt_number(residual(feeder, solution)),
            "bfs": fio.fmt_number(residual(feeder, reference)),
        },
    }
    if p == 3:
        over_linear = [
            feeder.nodes[i] for i in np.flatnonzero(lin_report.luvr > 1.0)
        ]
        over_bfs = [
            feeder.nodes[i] for i in np.flatnonzero(ref_report.luvr > 1.0)
        ]
        summary["luvr_over_1pct"] = {
            "linear": over_linear,
            "bfs": over_bfs,
            "count_linear": len(over_linear),
            "count_bfs": len(over_bfs),
            "identical": over_linear == over_bfs,
        }

    if args.format == "json":
        doc = {
            "schema_version": fio.SCHEMA_VERSION,
            "method": args.method,
            "reference": "bfs",
            "nodes": rows,
            "summary": summary,
        }
        _emit(args, json.dumps(doc, indent=2) + "\n")
    else:
        columns = ["id", "phase", "v_mag_linear", "v_mag_bfs", "epsilon"]
        if p == 3:
            columns += ["luvr_linear", "luvr_bfs"]
        buffer = _stdio.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row[c] for c in columns])
        _emit(args, buffer.getvalue())
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    feeder = _read_feeder(args.input)
    solution = solve_bfs(feeder, _bfs_options(args))
    inc = build_incidence(feeder)
    report = summarize(solution, inc, feeder)
    scalars = {
        "method": "bfs",
        "converged": solution.converged,
        "iterations": solution.iterations,
        "p_loss": fio.fmt_number(report.p_loss),
        "q_loss": fio.fmt_number(report.q_loss),
        "v_min": fio.fmt_number(report.v_min),
        "residual": fio.fmt_number(residual(feeder, solution)),
    }
    if args.format == "json":
        doc: dict[str, Any] = dict(scalars)
        if report.luvr is not None:
            doc["luvr"] = {
                node: fio.fmt_number(float(report.luvr[i]))
                for i, node in enumerate(feeder.nodes)
            }
        _emit(args, json.dumps(doc, indent=2) + "\n")
    else:
        buffer = _stdio.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["metric", "id", "value"])
        for key, value in scalars.items():
            writer.writerow([key, "", value])
        if report.luvr is not None:
            for i, node in enumerate(feeder.nodes):
                writer.writerow(["luvr", node, fio.fmt_number(float(report.luvr[i]))])
        _emit(args, buffer.getvalue())
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radialflow",
        description="Linearized ZIP power flow for radial feeders",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, bfs_opts: bool = True) -> None:
        p.add_argument("input", help="feeder JSON file")
        p.add_argument(
            "--format", choices=("json", "csv"), default="json",
            help="output format (default json)",
        )
        p.add_argument(
            "-o", "--output", default=None,
            help="write output to this path instead of standard output",
        )
        if bfs_opts:
            p.add_argument(
                "--tolerance", type=float, default=1e-8,
                help="BFS convergence tolerance (default 1e-8)",
            )
            p.add_argument(
                "--max-iterations", type=int, default=100,
                help="BFS iteration budget (default 100)",
            )

    p_validate = sub.add_parser("validate", help="check feeder radiality")
    common(p_validate, bfs_opts=False)
    p_validate.set_defaults(func=cmd_validate)

    p_solve = sub.add_parser("solve", help="run one power-flow method")
    common(p_solve)
    p_solve.add_argument(
        "--method",
        choices=LINEAR_METHODS + ("bfs",),
        default="linear-simple",
    )
    p_solve.add_argument(
        "--v0", type=complex, default=None,
        help="linearization point override, e.g. 1.05 or 1.05+0j",
    )
    p_solve.set_defaults(func=cmd_solve)

    p_compare = sub.add_parser(
        "compare", help="run BFS and a linear method, report per-node error"
    )
    common(p_compare)
    p_compare.add_argument(
        "--method", choices=LINEAR_METHODS, default="linear-simple"
    )
    p_compare.add_argument("--v0", type=complex, default=None)
    p_compare.set_defaults(func=cmd_compare)

    p_metrics = sub.add_parser(
        "metrics", help="solve with BFS and report summary metrics"
    )
    common(p_metrics)
    p_metrics.set_defaults(func=cmd_metrics)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValidationError, RadialityError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except RadialFlowError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
