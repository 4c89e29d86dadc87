"""ZIP load model: current injections, delta legs, and wye equivalents.

Load powers are consumption-positive throughout: a load with positive real
part draws power, and the corresponding nodal current injection carries a
minus sign. Per-unit analysis uses voltage scale h = 1 (h = 1/V_base when a
feeder declares a physical voltage base).
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import VoltageCollapseError

logger = logging.getLogger(__name__)

NodeId = str

#: Minimum voltage magnitude at which the constant-power division is allowed.
COLLAPSE_TOLERANCE = 1e-6

#: Unit phasors of the three phases under the a-b-c rotation convention.
PHASE_ROTATIONS = (
    1.0 + 0.0j,
    cmath.exp(-2j * math.pi / 3),
    cmath.exp(2j * math.pi / 3),
)

PHASES = ("a", "b", "c")

#: Phase-to-line transformation: rows are the ab, bc, ca leg voltages.
LINE_TRANSFORM = np.array(
    [[1, -1, 0], [0, 1, -1], [-1, 0, 1]], dtype=np.complex128
)

#: Delta leg endpoints by leg index (ab, bc, ca).
_LEG_ENDPOINTS = ((0, 1), (1, 2), (2, 0))

#: Unit phasors of the nominal line voltages, used to orient constant-current
#: delta legs the same way wye constant-current loads are oriented per phase.
_LINE_ROTATIONS = tuple(
    (PHASE_ROTATIONS[p] - PHASE_ROTATIONS[q]) / math.sqrt(3)
    for p, q in _LEG_ENDPOINTS
)


@dataclass(frozen=True)
class ZipLoad:
    """A load at one node, split into constant-impedance (s_z),
    constant-current (s_i) and constant-power (s_p) components, all in
    consumption-positive complex power.

    ``phase`` selects the phase (wye) or the leg by its first phase
    (delta: a=ab, b=bc, c=ca); ``all`` applies the same components to every
    phase or leg. Single-phase feeders ignore ``phase``.
    """

    node: NodeId
    s_z: complex = 0j
    s_i: complex = 0j
    s_p: complex = 0j
    phase: str = "all"
    connection: str = "wye"

    def __post_init__(self):
        if self.phase not in ("a", "b", "c", "all"):
            raise ValueError(f"unknown phase {self.phase!r}")
        if self.connection not in ("wye", "delta"):
            raise ValueError(f"unknown connection {self.connection!r}")
        for name in ("s_z", "s_i", "s_p"):
            value = getattr(self, name)
            if not (math.isfinite(value.real) and math.isfinite(value.imag)):
                raise ValueError(f"{name} must be finite, got {value!r}")

    @property
    def is_zero(self) -> bool:
        return self.s_z == 0 and self.s_i == 0 and self.s_p == 0


def drop_zero_loads(loads: Iterable[ZipLoad]) -> tuple[ZipLoad, ...]:
    """Remove loads whose three components are all zero, warning once each."""
    kept = []
    for load in loads:
        if load.is_zero:
            logger.warning("dropping all-zero load at node %s", load.node)
        else:
            kept.append(load)
    return tuple(kept)


def injection_current(
    load: ZipLoad, v: complex, h: float = 1.0, rotation: complex = 1.0 + 0j
) -> complex:
    """Nodal current injected by one wye load at voltage ``v``.

    Returns -(h^2 s_z* v + h s_i* rotation + s_p* / conj(v)); the negation
    turns consumption-positive powers into negative injections. ``rotation``
    orients the constant-current component along its nominal phase (unity in
    single-phase analysis).
    """
    if abs(v) <= COLLAPSE_TOLERANCE:
        raise VoltageCollapseError(
            f"voltage magnitude {abs(v):.3e} at node {load.node} is below "
            f"{COLLAPSE_TOLERANCE:g}"
        )
    draw = (
        h * h * load.s_z.conjugate() * v
        + h * load.s_i.conjugate() * rotation
        + load.s_p.conjugate() / v.conjugate()
    )
    return -draw


def _delta_legs(
    loads: Iterable[ZipLoad],
) -> list[tuple[complex, complex, complex]]:
    """Sum delta-load components into the three legs ab, bc, ca."""
    legs = [[0j, 0j, 0j] for _ in range(3)]
    for load in loads:
        if load.connection != "delta":
            raise ValueError("only delta loads belong in delta legs")
        targets = range(3) if load.phase == "all" else (PHASES.index(load.phase),)
        for leg in targets:
            legs[leg][0] += load.s_z
            legs[leg][1] += load.s_i
            legs[leg][2] += load.s_p
    return [tuple(leg) for leg in legs]


def delta_to_wye_injections(
    loads: Sequence[ZipLoad], v_abc: Sequence[complex], h: float = 1.0
) -> np.ndarray:
    """Phase current injections of the delta loads at one node.

    Evaluates each loaded leg on the line voltage it sees, with the voltage
    scale reduced by sqrt(3) so leg powers stay on the same per-unit base as
    wye powers, then maps leg currents back to phase injections. The three
    injections sum to zero (no neutral path).
    """
    v_abc = np.asarray(v_abc, dtype=np.complex128)
    if v_abc.shape != (3,):
        raise ValueError("v_abc must hold exactly three phase voltages")
    legs = _delta_legs(loads)
    v_line = LINE_TRANSFORM @ v_abc
    h_leg = h / math.sqrt(3)
    leg_draw = np.zeros(3, dtype=np.complex128)
    for idx, (s_z, s_i, s_p) in enumerate(legs):
        if s_z == 0 and s_i == 0 and s_p == 0:
            continue
        vl = v_line[idx]
        if abs(vl) <= COLLAPSE_TOLERANCE:
            raise VoltageCollapseError(
                f"line voltage magnitude {abs(vl):.3e} on leg "
                f"{PHASES[_LEG_ENDPOINTS[idx][0]]}{PHASES[_LEG_ENDPOINTS[idx][1]]} "
                f"is below {COLLAPSE_TOLERANCE:g}"
            )
        leg_draw[idx] = (
            h_leg * h_leg * s_z.conjugate() * vl
            + h_leg * s_i.conjugate() * _LINE_ROTATIONS[idx]
            + s_p.conjugate() / vl.conjugate()
        )
    return -(LINE_TRANSFORM.T @ leg_draw)


def wye_equivalents(loads: Iterable[ZipLoad]) -> tuple[ZipLoad, ...]:
    """Convert delta loads into equivalent per-phase wye ZIP loads.

    Each leg between phases p and q is split across the two phases with the
    complex factors rho_p/(rho_p - rho_q) and -rho_q/(rho_p - rho_q), which
    sum to one, so total leg power is conserved and a balanced delta maps to
    the identical balanced wye. Wye loads pass through unchanged. The split
    is exact at balanced voltages and first-order accurate under unbalance;
    it is how delta loads enter the linear solver.
    """
    converted = []
    for load in loads:
        if load.connection == "wye":
            converted.append(load)
            continue
        legs = range(3) if load.phase == "all" else (PHASES.index(load.phase),)
        for leg in legs:
            p, q = _LEG_ENDPOINTS[leg]
            denom = PHASE_ROTATIONS[p] - PHASE_ROTATIONS[q]
            for phase_idx, factor in (
                (p, PHASE_ROTATIONS[p] / denom),
                (q, -PHASE_ROTATIONS[q] / denom),
            ):
                converted.append(
                    ZipLoad(
                        node=load.node,
                        s_z=load.s_z * factor,
                        s_i=load.s_i * factor,
                        s_p=load.s_p * factor,
                        phase=PHASES[phase_idx],
                        connection="wye",
                    )
                )
    return tuple(converted)


def _phase_indices(load: ZipLoad, phase_count: int) -> tuple[int, ...]:
    if phase_count == 1:
        return (0,)
    if load.phase == "all":
        return (0, 1, 2)
    return (PHASES.index(load.phase),)


def load_vectors(
    loads: Iterable[ZipLoad],
    nodes: Sequence[NodeId],
    phase_count: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Consumption-positive (s_z, s_i, s_p) vectors over node-major
    node/phase slots, with delta loads replaced by wye equivalents."""
    index = {node: i for i, node in enumerate(nodes)}
    size = len(nodes) * phase_count
    s_z = np.zeros(size, dtype=np.complex128)
    s_i = np.zeros(size, dtype=np.complex128)
    s_p = np.zeros(size, dtype=np.complex128)
    for load in wye_equivalents(loads):
        base = index[load.node] * phase_count
        for phase in _phase_indices(load, phase_count):
            s_z[base + phase] += load.s_z
            s_i[base + phase] += load.s_i
            s_p[base + phase] += load.s_p
    return s_z, s_i, s_p


def nodal_injections(
    loads: Iterable[ZipLoad],
    nodes: Sequence[NodeId],
    voltages: np.ndarray,
    h: float,
    phase_count: int,
) -> np.ndarray:
    """Exact nodal current injections I(V) for the given voltage profile.

    Wye loads are evaluated per phase; delta loads are evaluated on the
    actual line voltages at their node. This is the model the iterative
    solver satisfies and the one nodal residuals are measured against.
    """
    voltages = np.asarray(voltages, dtype=np.complex128)
    index = {node: i for i, node in enumerate(nodes)}
    injections = np.zeros(len(nodes) * phase_count, dtype=np.complex128)
    delta_by_node: dict[NodeId, list[ZipLoad]] = {}
    for load in loads:
        if load.connection == "delta":
            delta_by_node.setdefault(load.node, []).append(load)
            continue
        base = index[load.node] * phase_count
        for phase in _phase_indices(load, phase_count):
            rotation = PHASE_ROTATIONS[phase] if phase_count == 3 else 1.0 + 0j
            injections[base + phase] += injection_current(
                load, voltages[base + phase], h, rotation
            )
    for node, node_loads in delta_by_node.items():
        base = index[node] * phase_count
        injections[base : base + 3] += delta_to_wye_injections(
            node_loads, voltages[base : base + 3], h
        )
    return injections
