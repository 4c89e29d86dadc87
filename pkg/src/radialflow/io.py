"""Feeder-file parsing and result serialization.

The feeder document is JSON with a top-level ``schema_version`` and the
sections ``slack``, ``branches``, ``loads`` and ``options``. Complex values
are objects with either ``re``/``im`` or ``mag``/``angle_deg`` keys; angles
live in degrees in files and radians internally. Three-phase branch
impedances are nine complex entries, row-major. Quantities are per-unit
unless ``options.v_base`` declares a physical voltage base.
"""

from __future__ import annotations

import csv
import io as _stdio
import json
import math
from typing import Any

import numpy as np

from .errors import ParseError, ValidationError
from .linsolve import Solution
from .loads import PHASES, ZipLoad, drop_zero_loads
from .metrics import MetricsReport
from .network import Branch, Feeder, validate_radial

SCHEMA_VERSION = "1"

_KNOWN_VERSIONS = ("1",)


def _require(obj: dict, key: str, ctx: str) -> Any:
    if key not in obj:
        raise ParseError(f"{ctx}: missing required field {key!r}")
    return obj[key]


def _complex(value: Any, ctx: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if not isinstance(value, dict):
        raise ParseError(f"{ctx}: expected a complex value object")
    if "re" in value or "im" in value:
        try:
            return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{ctx}: non-numeric complex parts") from exc
    if "mag" in value:
        try:
            mag = float(value["mag"])
            angle = math.radians(float(value.get("angle_deg", 0.0)))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{ctx}: non-numeric magnitude/angle") from exc
        return complex(mag * math.cos(angle), mag * math.sin(angle))
    raise ParseError(f"{ctx}: complex value needs re/im or mag/angle_deg")


def _impedance(value: Any, ctx: str):
    if isinstance(value, list):
        if len(value) != 9:
            raise ParseError(
                f"{ctx}: matrix impedance needs nine row-major entries"
            )
        flat = [_complex(entry, f"{ctx}[{i}]") for i, entry in enumerate(value)]
        return tuple(tuple(flat[row * 3 : row * 3 + 3]) for row in range(3))
    return _complex(value, ctx)


def parse_feeder(text: str) -> Feeder:
    """Parse and validate a feeder document.

    Node order is normalized to topological (slack first, parents before
    children); radiality violations raise ValidationError, anything
    structural raises ParseError naming the offending field.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object")

    version = str(doc.get("schema_version", SCHEMA_VERSION))
    if version not in _KNOWN_VERSIONS:
        raise ParseError(f"unrecognized schema_version {version!r}")

    name = str(doc.get("name", "feeder"))
    phase_count = doc.get("phase_count", 1)
    if phase_count not in (1, 3):
        raise ParseError("phase_count must be 1 or 3")

    slack = _require(doc, "slack", "slack")
    if not isinstance(slack, dict):
        raise ParseError("slack: expected an object")
    slack_node = str(_require(slack, "node", "slack"))
    slack_voltage = _complex(_require(slack, "voltage", "slack.voltage"),
                             "slack.voltage")

    branches = []
    raw_branches = doc.get("branches", [])
    if not isinstance(raw_branches, list):
        raise ParseError("branches: expected a list")
    for i, raw in enumerate(raw_branches):
        ctx = f"branches[{i}]"
        if not isinstance(raw, dict):
            raise ParseError(f"{ctx}: expected an object")
        try:
            branches.append(
                Branch(
                    id=str(raw.get("id", f"b{i + 1}")),
                    from_node=str(_require(raw, "from", ctx)),
                    to_node=str(_require(raw, "to", ctx)),
                    impedance=_impedance(
                        _require(raw, "impedance", ctx), f"{ctx}.impedance"
                    ),
                )
            )
        except ValueError as exc:
            raise ParseError(f"{ctx}: {exc}") from exc

    explicit_nodes = doc.get("nodes")
    if explicit_nodes is not None:
        nodes = [str(node) for node in explicit_nodes]
        if slack_node not in nodes:
            raise ParseError(f"slack node {slack_node} missing from nodes")
        known = set(nodes)
        for branch in branches:
            for endpoint in (branch.from_node, branch.to_node):
                if endpoint not in known:
                    raise ParseError(
                        f"branch {branch.id} references unknown node "
                        f"{endpoint}"
                    )
    else:
        nodes = [slack_node]
        known = {slack_node}
        for branch in branches:
            for endpoint in (branch.from_node, branch.to_node):
                if endpoint not in known:
                    known.add(endpoint)
                    nodes.append(endpoint)

    loads = []
    raw_loads = doc.get("loads", [])
    if not isinstance(raw_loads, list):
        raise ParseError("loads: expected a list")
    for i, raw in enumerate(raw_loads):
        ctx = f"loads[{i}]"
        if not isinstance(raw, dict):
            raise ParseError(f"{ctx}: expected an object")
        node = str(_require(raw, "node", ctx))
        if node not in set(nodes):
            raise ParseError(f"{ctx}: unknown node {node}")
        if node == slack_node:
            raise ParseError(
                f"{ctx}: loads at the slack node are not modeled"
            )
        try:
            loads.append(
                ZipLoad(
                    node=node,
                    s_z=_complex(raw.get("s_z", 0.0), f"{ctx}.s_z"),
                    s_i=_complex(raw.get("s_i", 0.0), f"{ctx}.s_i"),
                    s_p=_complex(raw.get("s_p", 0.0), f"{ctx}.s_p"),
                    phase=str(raw.get("phase", "all")),
                    connection=str(raw.get("connection", "wye")),
                )
            )
        except ValueError as exc:
            raise ParseError(f"{ctx}: {exc}") from exc

    options = doc.get("options", {})
    if not isinstance(options, dict):
        raise ParseError("options: expected an object")
    try:
        v_base = float(options.get("v_base", 1.0))
        s_base = float(options.get("s_base", 1.0))
    except (TypeError, ValueError) as exc:
        raise ParseError("options.v_base/s_base: expected a number") from exc

    try:
        feeder = Feeder(
            name=name,
            phase_count=phase_count,
            nodes=tuple(_toposorted(nodes, slack_node, branches)),
            slack_voltage=slack_voltage,
            branches=tuple(branches),
            loads=drop_zero_loads(loads),
            v_base=v_base,
            s_base=s_base,
        )
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    report = validate_radial(feeder)
    if not report.ok:
        raise ValidationError(report.violations)
    return feeder


def _toposorted(nodes: list[str], slack: str, branches: list[Branch]) -> list[str]:
    """Reorder nodes so parents precede children, slack first; nodes that
    cannot be reached keep their declared order at the end (validation will
    flag them)."""
    adjacency: dict[str, list[str]] = {node: [] for node in nodes}
    for branch in branches:
        if branch.from_node in adjacency and branch.to_node in adjacency:
            adjacency[branch.from_node].append(branch.to_node)
            adjacency[branch.to_node].append(branch.from_node)
    order = [slack]
    visited = {slack}
    frontier = 0
    while frontier < len(order):
        node = order[frontier]
        frontier += 1
        for neighbor in adjacency[node]:
            if neighbor not in visited:
                visited.add(neighbor)
                order.append(neighbor)
    order.extend(node for node in nodes if node not in visited)
    return order


def fmt_number(value: float) -> float:
    """Round to 12 significant digits for stable, re-parseable output."""
    return float(f"{value:.12g}")


def _complex_doc(value: complex) -> dict:
    return {"re": fmt_number(value.real), "im": fmt_number(value.imag)}


def serialize_feeder(feeder: Feeder) -> str:
    """Feeder back to its JSON document form (normalized node order)."""
    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "name": feeder.name,
        "phase_count": feeder.phase_count,
        "slack": {
            "node": feeder.slack,
            "voltage": _complex_doc(feeder.slack_voltage),
        },
        "nodes": list(feeder.nodes),
        "branches": [
            {
                "id": branch.id,
                "from": branch.from_node,
                "to": branch.to_node,
                "impedance": (
                    [
                        _complex_doc(entry)
                        for row in branch.impedance
                        for entry in row
                    ]
                    if isinstance(branch.impedance, tuple)
                    else _complex_doc(complex(branch.impedance))
                ),
            }
            for branch in feeder.branches
        ],
        "loads": [
            {
                "node": load.node,
                "phase": load.phase,
                "connection": load.connection,
                "s_z": _complex_doc(load.s_z),
                "s_i": _complex_doc(load.s_i),
                "s_p": _complex_doc(load.s_p),
            }
            for load in feeder.loads
        ],
        "options": {"v_base": fmt_number(feeder.v_base), "s_base": fmt_number(feeder.s_base)},
    }
    return json.dumps(doc, indent=2) + "\n"


def phase_label(index: int, phase_count: int) -> str:
    return PHASES[index] if phase_count == 3 else ""


def _solution_rows(sol: Solution, report: MetricsReport | None):
    p = sol.phase_count
    for node_idx, node in enumerate(sol.nodes):
        for phase in range(p):
            flat = node_idx * p + phase
            v = sol.voltages[flat]
            row: dict[str, Any] = {
                "id": node,
                "phase": phase_label(phase, p),
                "v_re": fmt_number(v.real),
                "v_im": fmt_number(v.imag),
                "v_mag": fmt_number(abs(v)),
                "angle_deg": fmt_number(math.degrees(np.angle(v))),
            }
            if report is not None and report.epsilon is not None:
                row["epsilon"] = fmt_number(float(report.epsilon[flat]))
            if report is not None and report.luvr is not None:
                row["luvr"] = fmt_number(float(report.luvr[node_idx]))
            yield row


def write_solution(
    sol: Solution, report: MetricsReport | None = None, format: str = "json"
) -> str:
    """Serialize a solution (plus optional metrics) to JSON or CSV.

    CSV holds one row per node and phase with magnitude and angle in
    degrees; JSON adds rectangular parts and the summary metrics. Numbers
    carry 12 significant digits and the field order is fixed, so identical
    inputs yield identical bytes.
    """
    if format == "json":
        doc: dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "method": sol.method,
            "converged": sol.converged,
            "iterations": sol.iterations,
            "phase_count": sol.phase_count,
            "nodes": list(_solution_rows(sol, report)),
        }
        if report is not None:
            doc["metrics"] = {
                "p_loss": fmt_number(report.p_loss),
                "q_loss": fmt_number(report.q_loss),
                "v_min": fmt_number(report.v_min),
            }
            if report.luvr is not None:
                doc["metrics"]["luvr_over_1pct"] = int(
                    np.sum(report.luvr > 1.0)
                )
        return json.dumps(doc, indent=2) + "\n"
    if format == "csv":
        columns = ["id", "phase", "v_mag", "angle_deg"]
        if report is not None and report.epsilon is not None:
            columns.append("epsilon")
        if report is not None and report.luvr is not None:
            columns.append("luvr")
        buffer = _stdio.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in _solution_rows(sol, report):
            writer.writerow([row[c] for c in columns])
        return buffer.getvalue()
    raise ValueError(f"unknown format {format!r}")
