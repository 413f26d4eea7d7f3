"""Circuit intermediate representation.

A :class:`Circuit` is an immutable, ordered list of :class:`Instruction`
objects over flat qubit and classical-bit indices. Every other module
(parsing, scanning, generation, simulation) speaks this IR.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

TWO_PI = 2.0 * math.pi
ANGLE_TOL = 1e-9


class CircuitError(ValueError):
    """Raised when an instruction or circuit violates the IR invariants."""


class Gate(enum.Enum):
    I = "id"
    X = "x"
    SX = "sx"
    H = "h"
    RZ = "rz"
    RX = "rx"
    CX = "cx"
    MEASURE = "measure"
    RESET = "reset"
    BARRIER = "barrier"

    @property
    def is_unitary(self) -> bool:
        return self not in (Gate.MEASURE, Gate.RESET, Gate.BARRIER)

    @property
    def is_parametric(self) -> bool:
        return self in (Gate.RZ, Gate.RX)

    @property
    def num_qubits(self) -> int:
        return 2 if self is Gate.CX else 1


class Role(enum.Enum):
    CONTROL = "CONTROL"
    TARGET = "TARGET"


def reduce_angle(angle: float) -> float:
    """Map ``angle`` into [0, 2*pi)."""
    r = math.fmod(angle, TWO_PI)
    if r < 0:
        r += TWO_PI
    return 0.0 if r >= TWO_PI else r


def angles_equivalent(a: float, b: float, tol: float = ANGLE_TOL) -> bool:
    d = reduce_angle(a - b)
    return d <= tol or TWO_PI - d <= tol


@dataclass(frozen=True)
class Instruction:
    kind: Gate
    qubits: tuple[int, ...]
    clbits: tuple[int, ...] = ()
    angle: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "clbits", tuple(int(c) for c in self.clbits))
        kind = self.kind
        if len(self.qubits) != kind.num_qubits:
            raise CircuitError(
                f"{kind.value} takes {kind.num_qubits} qubit operand(s), got {len(self.qubits)}"
            )
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"repeated qubit operand in {kind.value}: {self.qubits}")
        if any(q < 0 for q in self.qubits) or any(c < 0 for c in self.clbits):
            raise CircuitError("negative operand index")
        expected_clbits = 1 if kind is Gate.MEASURE else 0
        if len(self.clbits) != expected_clbits:
            raise CircuitError(f"{kind.value} takes {expected_clbits} classical operand(s)")
        if kind.is_parametric:
            if self.angle is None:
                raise CircuitError(f"{kind.value} requires an angle")
            angle = float(self.angle)
            if not math.isfinite(angle):
                raise CircuitError(f"non-finite angle {self.angle!r}")
            object.__setattr__(self, "angle", angle)
        elif self.angle is not None:
            raise CircuitError(f"{kind.value} takes no angle")

    def touches(self, qubit: int) -> bool:
        return qubit in self.qubits

    def equivalent(self, other: Instruction, tol: float = ANGLE_TOL) -> bool:
        """Equality with angles compared modulo 2*pi."""
        if (self.kind, self.qubits, self.clbits) != (other.kind, other.qubits, other.clbits):
            return False
        if self.angle is None:
            return other.angle is None
        return other.angle is not None and angles_equivalent(self.angle, other.angle, tol)

    def __str__(self) -> str:
        name = self.kind.value
        if self.angle is not None:
            name = f"{name}({self.angle:.6g})"
        ops = ",".join(f"q{q}" for q in self.qubits)
        if self.clbits:
            ops += f"->c{self.clbits[0]}"
        return f"{name} {ops}"


# Small constructors, mostly used by the generators and tests.
def op(kind: Gate, *qubits: int, angle: float | None = None) -> Instruction:
    return Instruction(kind, qubits, (), angle)


def rx(theta: float, q: int) -> Instruction:
    return Instruction(Gate.RX, (q,), (), theta)


def rz(phi: float, q: int) -> Instruction:
    return Instruction(Gate.RZ, (q,), (), phi)


def cx(control: int, target: int) -> Instruction:
    return Instruction(Gate.CX, (control, target))


def measure(q: int, c: int) -> Instruction:
    return Instruction(Gate.MEASURE, (q,), (c,))


def reset(q: int) -> Instruction:
    return Instruction(Gate.RESET, (q,))


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    num_clbits: int = 0
    instructions: tuple[Instruction, ...] = ()
    name: str = "circuit"

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        if self.num_qubits < 1:
            raise CircuitError("a circuit needs at least one qubit")
        if self.num_clbits < 0:
            raise CircuitError("negative classical register size")
        for i, inst in enumerate(self.instructions):
            if not isinstance(inst, Instruction):
                raise CircuitError(f"instruction {i} is not an Instruction")
            if any(q >= self.num_qubits for q in inst.qubits):
                raise CircuitError(f"instruction {i} ({inst}) references a qubit outside [0, {self.num_qubits})")
            if any(c >= self.num_clbits for c in inst.clbits):
                raise CircuitError(f"instruction {i} ({inst}) references a clbit outside [0, {self.num_clbits})")

    @classmethod
    def empty(cls, num_qubits: int, num_clbits: int = 0, name: str = "circuit") -> Circuit:
        return cls(num_qubits, num_clbits, (), name)

    def __len__(self) -> int:
        return len(self.instructions)

    def __iter__(self):
        return iter(self.instructions)

    def with_instructions(self, instructions: Iterable[Instruction]) -> Circuit:
        return Circuit(self.num_qubits, self.num_clbits, tuple(instructions), self.name)

    def renamed(self, name: str) -> Circuit:
        return Circuit(self.num_qubits, self.num_clbits, self.instructions, name)

    def equivalent(self, other: Circuit, tol: float = ANGLE_TOL) -> bool:
        """Instruction-level equality with angle tolerance (names are ignored)."""
        if (self.num_qubits, self.num_clbits, len(self)) != (other.num_qubits, other.num_clbits, len(other)):
            return False
        return all(a.equivalent(b, tol) for a, b in zip(self.instructions, other.instructions))

    def count(self, kind: Gate) -> int:
        return sum(1 for inst in self.instructions if inst.kind is kind)


def compose(a: Circuit, b: Circuit, name: str | None = None) -> Circuit:
    """Instructions of ``a`` followed by those of ``b``.

    Classical bits are merged by index; the result has ``max`` of both sizes.
    """
    if a.num_qubits != b.num_qubits:
        raise CircuitError(f"cannot compose a {a.num_qubits}-qubit circuit with a {b.num_qubits}-qubit circuit")
    return Circuit(
        a.num_qubits,
        max(a.num_clbits, b.num_clbits),
        a.instructions + b.instructions,
        name if name is not None else a.name,
    )


def shift_clbits(c: Circuit, offset: int) -> Circuit:
    """Move every classical operand up by ``offset`` (used to keep victim and
    attacker records apart when chaining segments)."""
    out = [
        Instruction(inst.kind, inst.qubits, tuple(x + offset for x in inst.clbits), inst.angle)
        for inst in c.instructions
    ]
    return Circuit(c.num_qubits, c.num_clbits + offset, out, c.name)


@dataclass(frozen=True)
class QubitSlice:
    qubit: int
    single_qubit_gates: tuple[Instruction, ...] = ()
    multiqubit_roles: tuple[tuple[int, Role], ...] = ()
    has_measure: bool = False
    has_reset: bool = False
    first_op_is_measure: bool = False

    @property
    def roles(self) -> list[Role]:
        return [role for _, role in self.multiqubit_roles]


def _check_qubit(c: Circuit, q: int) -> None:
    if not 0 <= q < c.num_qubits:
        raise CircuitError(f"qubit {q} out of range for a {c.num_qubits}-qubit circuit")


def slice_qubit(c: Circuit, q: int) -> QubitSlice:
    """Everything the circuit does to qubit ``q``, in program order."""
    _check_qubit(c, q)
    singles: list[Instruction] = []
    roles: list[tuple[int, Role]] = []
    has_measure = has_reset = False
    first_kind = None
    for i, inst in enumerate(c.instructions):
        if inst.kind is Gate.BARRIER or not inst.touches(q):
            continue
        if first_kind is None:
            first_kind = inst.kind
        if inst.kind is Gate.MEASURE:
            has_measure = True
        elif inst.kind is Gate.RESET:
            has_reset = True
        elif inst.kind is Gate.CX:
            roles.append((i, Role.CONTROL if inst.qubits[0] == q else Role.TARGET))
        else:
            singles.append(inst)
    return QubitSlice(
        qubit=q,
        single_qubit_gates=tuple(singles),
        multiqubit_roles=tuple(roles),
        has_measure=has_measure,
        has_reset=has_reset,
        first_op_is_measure=first_kind is Gate.MEASURE,
    )


def region_bounds(c: Circuit, q: int) -> tuple[int, int | None]:
    """Instruction-index window ``(start, stop)`` of the scan region of ``q``.

    ``start`` is one past the last RESET on ``q`` (0 without resets). ``stop``
    is the index of the last MEASURE on ``q`` at or after ``start``, or None
    when the qubit is never measured after its last reset.
    """
    _check_qubit(c, q)
    last_reset = -1
    final_measure = None
    for i, inst in enumerate(c.instructions):
        if not inst.touches(q):
            continue
        if inst.kind is Gate.RESET:
            last_reset = i
            final_measure = None
        elif inst.kind is Gate.MEASURE:
            final_measure = i
    return last_reset + 1, final_measure


def scan_region_indexed(c: Circuit, q: int) -> list[tuple[int, Instruction]]:
    start, stop = region_bounds(c, q)
    end = len(c.instructions) if stop is None else stop
    return [
        (i, c.instructions[i])
        for i in range(start, end)
        if c.instructions[i].touches(q) and c.instructions[i].kind is not Gate.BARRIER
    ]


def scan_region(c: Circuit, q: int) -> list[Instruction]:
    """Instructions on ``q`` after its last reset and before its final measurement."""
    return [inst for _, inst in scan_region_indexed(c, q)]


def depth(c: Circuit) -> int:
    """Layered depth, ignoring barriers."""
    qlevel = [0] * c.num_qubits
    clevel = [0] * c.num_clbits
    for inst in c.instructions:
        if inst.kind is Gate.BARRIER:
            continue
        level = 1 + max([qlevel[q] for q in inst.qubits] + [clevel[x] for x in inst.clbits])
        for q in inst.qubits:
            qlevel[q] = level
        for x in inst.clbits:
            clevel[x] = level
    return max(qlevel + clevel, default=0)


def unitary_part(c: Circuit) -> Sequence[Instruction]:
    return [inst for inst in c.instructions if inst.kind.is_unitary]
