import math

import numpy as np
import pytest

from radialflow import (
    VoltageCollapseError,
    ZipLoad,
    delta_to_wye_injections,
    injection_current,
    wye_equivalents,
)
from radialflow.loads import PHASE_ROTATIONS, drop_zero_loads


NOMINAL_ABC = np.array(PHASE_ROTATIONS)


class TestInjectionCurrent:
    def test_constant_power_at_unity(self):
        load = ZipLoad(node="2", s_p=0.1 + 0.05j)
        assert injection_current(load, 1.0 + 0j) == -(0.1 - 0.05j)

    def test_zero_load(self):
        load = ZipLoad(node="2")
        assert injection_current(load, 1.0 + 0j) == 0

    def test_constant_impedance_half_voltage(self):
        load = ZipLoad(node="2", s_z=1.0 + 0j)
        assert injection_current(load, 0.5 + 0j) == -0.5 + 0j

    def test_impedance_part_homogeneous(self):
        v = 0.93 - 0.04j
        one = injection_current(ZipLoad(node="2", s_z=0.2 + 0.1j), v)
        two = injection_current(ZipLoad(node="2", s_z=0.4 + 0.2j), v)
        assert two == 2 * one

    def test_constant_current_independent_of_voltage(self):
        load = ZipLoad(node="2", s_i=0.3 + 0.1j)
        a = injection_current(load, 1.0 + 0j)
        b = injection_current(load, 0.7 - 0.2j)
        assert a == b

    def test_voltage_collapse_guard(self):
        load = ZipLoad(node="2", s_p=0.1)
        with pytest.raises(VoltageCollapseError):
            injection_current(load, 1e-7 + 0j)

    def test_scale_factor(self):
        # h scales the impedance part quadratically, the current part
        # linearly and leaves the power part alone.
        load = ZipLoad(node="2", s_z=0.2, s_i=0.1, s_p=0.05)
        v = 1.0 + 0j
        expected = -(0.25 * 0.2 * v + 0.5 * 0.1 + 0.05)
        assert injection_current(load, v, h=0.5) == expected


class TestDeltaInjections:
    def test_all_legs_zero(self):
        out = delta_to_wye_injections([], NOMINAL_ABC)
        assert np.array_equal(out, np.zeros(3))

    def test_balanced_power_legs(self):
        loads = [ZipLoad(node="2", s_p=0.3 + 0.1j, phase="all",
                         connection="delta")]
        out = delta_to_wye_injections(loads, NOMINAL_ABC)
        mags = np.abs(out)
        assert np.max(mags) - np.min(mags) < 1e-12
        # phases 120 degrees apart
        angles = np.sort(np.angle(out))
        gaps = np.diff(angles)
        assert np.allclose(gaps, 2 * math.pi / 3, atol=1e-12)

    def test_single_leg_enters_and_leaves(self):
        loads = [ZipLoad(node="2", s_p=0.2 + 0.05j, phase="a",
                         connection="delta")]
        out = delta_to_wye_injections(loads, NOMINAL_ABC)
        assert out[2] == 0
        assert abs(out[0] + out[1]) < 1e-15

    def test_injections_sum_to_zero(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            loads = [
                ZipLoad(
                    node="2",
                    s_z=complex(*rng.uniform(0, 0.1, 2)),
                    s_i=complex(*rng.uniform(0, 0.1, 2)),
                    s_p=complex(*rng.uniform(0, 0.1, 2)),
                    phase=str(rng.choice(["a", "b", "c", "all"])),
                    connection="delta",
                )
            ]
            v = NOMINAL_ABC * (1 + rng.uniform(-0.05, 0.05, 3)) * np.exp(
                1j * rng.uniform(-0.05, 0.05, 3)
            )
            out = delta_to_wye_injections(loads, v)
            assert abs(out.sum()) < 1e-12

    def test_collapsed_line_voltage(self):
        loads = [ZipLoad(node="2", s_p=0.1, phase="a", connection="delta")]
        collapsed = np.array([1.0, 1.0, PHASE_ROTATIONS[2]])
        with pytest.raises(VoltageCollapseError):
            delta_to_wye_injections(loads, collapsed)

    def test_balanced_leg_power_at_nominal(self):
        # Each leg consumes exactly its specified power at nominal voltage.
        s = 0.3 + 0.1j
        loads = [ZipLoad(node="2", s_z=s, phase="all", connection="delta")]
        out = delta_to_wye_injections(loads, NOMINAL_ABC)
        total = np.sum(NOMINAL_ABC * np.conjugate(-out))
        assert abs(total - 3 * s) < 1e-12


class TestWyeEquivalents:
    def test_wye_passes_through(self):
        load = ZipLoad(node="2", s_p=0.1)
        assert wye_equivalents([load]) == (load,)

    def test_split_factors_conserve_power(self):
        load = ZipLoad(node="2", s_p=0.12 + 0.05j, s_z=0.04 + 0.01j,
                       phase="a", connection="delta")
        parts = wye_equivalents([load])
        assert len(parts) == 2
        assert all(p.connection == "wye" for p in parts)
        assert abs(sum(p.s_p for p in parts) - load.s_p) < 1e-15
        assert abs(sum(p.s_z for p in parts) - load.s_z) < 1e-15

    def test_balanced_delta_equals_balanced_wye(self):
        s = 0.09 + 0.04j
        load = ZipLoad(node="2", s_p=s, phase="all", connection="delta")
        per_phase = {"a": 0j, "b": 0j, "c": 0j}
        for part in wye_equivalents([load]):
            per_phase[part.phase] += part.s_p
        for value in per_phase.values():
            assert abs(value - s) < 1e-12

    def test_equivalents_match_exact_injections_at_nominal(self):
        load = ZipLoad(node="2", s_p=0.15 + 0.06j, phase="b",
                       connection="delta")
        exact = delta_to_wye_injections([load], NOMINAL_ABC)
        approx = np.zeros(3, dtype=complex)
        for part in wye_equivalents([load]):
            idx = "abc".index(part.phase)
            approx[idx] += injection_current(
                part, NOMINAL_ABC[idx], rotation=PHASE_ROTATIONS[idx]
            )
        assert np.max(np.abs(exact - approx)) < 1e-12


def test_drop_zero_loads_warns(caplog):
    loads = [ZipLoad(node="2"), ZipLoad(node="3", s_p=0.1)]
    with caplog.at_level("WARNING"):
        kept = drop_zero_loads(loads)
    assert len(kept) == 1
    assert kept[0].node == "3"
    assert any("all-zero load" in r.message for r in caplog.records)


def test_invalid_fields_rejected():
    with pytest.raises(ValueError):
        ZipLoad(node="2", phase="d")
    with pytest.raises(ValueError):
        ZipLoad(node="2", connection="mesh")
    with pytest.raises(ValueError):
        ZipLoad(node="2", s_p=complex(float("nan"), 0))
