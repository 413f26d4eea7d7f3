import math

import pytest

from resetguard.circuit import (
    Circuit,
    CircuitError,
    Gate,
    Instruction,
    Role,
    angles_equivalent,
    compose,
    cx,
    depth,
    measure,
    op,
    reduce_angle,
    region_bounds,
    reset,
    rx,
    rz,
    scan_region,
    shift_clbits,
    slice_qubit,
)


def test_instruction_validates_operands():
    with pytest.raises(CircuitError):
        Instruction(Gate.CX, (0,))
    with pytest.raises(CircuitError):
        cx(1, 1)
    with pytest.raises(CircuitError):
        Instruction(Gate.RX, (0,))
    with pytest.raises(CircuitError):
        Instruction(Gate.X, (0,), angle=1.0)
    with pytest.raises(CircuitError):
        rx(math.nan, 0)
    with pytest.raises(CircuitError):
        Instruction(Gate.MEASURE, (0,))


def test_circuit_validates_ranges():
    with pytest.raises(CircuitError):
        Circuit(1, 0, [op(Gate.X, 1)])
    with pytest.raises(CircuitError):
        Circuit(1, 1, [measure(0, 1)])


def test_angle_equivalence_mod_two_pi():
    assert angles_equivalent(0.0, 2 * math.pi)
    assert angles_equivalent(-math.pi / 2, 3 * math.pi / 2)
    assert not angles_equivalent(0.1, 0.2)
    assert 0 <= reduce_angle(-7.0) < 2 * math.pi


def test_equivalent_ignores_name_but_not_structure():
    a = Circuit(1, 1, [rx(0.5, 0), measure(0, 0)], "a")
    b = Circuit(1, 1, [rx(0.5 + 2 * math.pi, 0), measure(0, 0)], "b")
    assert a.equivalent(b)
    assert not a.equivalent(Circuit(1, 1, [rx(0.5, 0)]))


def test_compose_and_shift():
    victim = Circuit(1, 1, [rx(0.1, 0), measure(0, 0)])
    attack = shift_clbits(Circuit(1, 1, [op(Gate.X, 0), measure(0, 0)]), 1)
    both = compose(victim, attack)
    assert both.num_clbits == 2
    assert both.instructions[-1].clbits == (1,)
    with pytest.raises(CircuitError):
        compose(victim, Circuit.empty(2))


def test_region_bounds_follow_last_reset():
    c = Circuit(1, 2, [rx(0.3, 0), measure(0, 0), reset(0), op(Gate.X, 0), op(Gate.X, 0), measure(0, 1)])
    assert region_bounds(c, 0) == (3, 5)
    assert [i.kind for i in scan_region(c, 0)] == [Gate.X, Gate.X]


def test_region_without_measure_after_reset():
    c = Circuit(1, 1, [measure(0, 0), reset(0), op(Gate.X, 0)])
    assert region_bounds(c, 0) == (2, None)


def test_slice_qubit_roles():
    c = Circuit(2, 1, [cx(0, 1), op(Gate.H, 1), cx(1, 0), measure(0, 0)])
    s0 = slice_qubit(c, 0)
    assert s0.roles == [Role.CONTROL, Role.TARGET]
    assert s0.has_measure and not s0.has_reset
    assert [g.kind for g in slice_qubit(c, 1).single_qubit_gates] == [Gate.H]


def test_depth_ignores_barriers():
    c = Circuit(2, 0, [op(Gate.X, 0), op(Gate.BARRIER, 0), op(Gate.X, 1), cx(0, 1), rz(1.0, 0)])
    assert depth(c) == 3
    assert depth(Circuit.empty(3)) == 0
