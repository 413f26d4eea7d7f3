"""Dense matrix semantics for gate sequences.

Qubit ``q`` is bit ``q`` of the basis-state index (little-endian), so the
basis state ``|q1 q0>`` has index ``2*q1 + q0``.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from .circuit import TWO_PI, Circuit, Gate, Instruction, reduce_angle

DEFAULT_QUBIT_CAP = 12
EXACT_TOL = 1e-9
SCAN_TOL = 1e-6


class UnitaryError(ValueError):
    """Raised for instructions or circuits without a unitary matrix."""

    def __init__(self, message: str, code: str):
        super().__init__(message)
        self.code = code


_SQ2 = 1.0 / math.sqrt(2.0)
_FIXED = {
    Gate.I: np.eye(2, dtype=complex),
    Gate.X: np.array([[0, 1], [1, 0]], dtype=complex),
    Gate.SX: 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex),
    Gate.H: _SQ2 * np.array([[1, 1], [1, -1]], dtype=complex),
    # basis order |control target>: control is the high bit of the 4x4 block
    Gate.CX: np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
}


def rx_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def rz_matrix(phi: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * phi), 0], [0, np.exp(0.5j * phi)]], dtype=complex)


def gate_matrix(kind: Gate, angle: float | None = None) -> np.ndarray:
    """2x2 matrix of a single-qubit gate, or 4x4 for CX (control first)."""
    if kind is Gate.RX:
        return rx_matrix(angle)
    if kind is Gate.RZ:
        return rz_matrix(angle)
    try:
        return _FIXED[kind].copy()
    except KeyError:
        raise UnitaryError(f"{kind.value} is not a unitary gate", "NON_UNITARY_INSTRUCTION") from None


def instruction_matrix(inst: Instruction) -> np.ndarray:
    return gate_matrix(inst.kind, inst.angle)


def is_unitary(u: np.ndarray, tol: float = EXACT_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.linalg.norm(u @ u.conj().T - np.eye(u.shape[0]), "fro") <= tol


def apply_instruction(state: np.ndarray, inst: Instruction, num_qubits: int) -> np.ndarray:
    """Apply ``inst`` to ``state`` along its first axis.

    ``state`` is a vector of length 2**n or a matrix whose columns are states.
    """
    m = instruction_matrix(inst)
    k = len(inst.qubits)
    trailing = state.shape[1:]
    t = state.reshape((2,) * num_qubits + trailing)
    # C-order reshape puts qubit q on axis n-1-q
    axes = [num_qubits - 1 - q for q in inst.qubits]
    t = np.tensordot(m.reshape((2,) * (2 * k)), t, axes=(list(range(k, 2 * k)), axes))
    t = np.moveaxis(t, list(range(k)), axes)
    return t.reshape(state.shape)


def sequence_unitary(instructions: Iterable[Instruction], num_qubits: int) -> np.ndarray:
    u = np.eye(2**num_qubits, dtype=complex)
    for inst in instructions:
        if inst.kind is Gate.BARRIER:
            continue
        if not inst.kind.is_unitary:
            raise UnitaryError(f"{inst.kind.value} has no unitary matrix", "NON_UNITARY_INSTRUCTION")
        u = apply_instruction(u, inst, num_qubits)
    return u


def circuit_unitary(c: Circuit, qubit_cap: int = DEFAULT_QUBIT_CAP) -> np.ndarray:
    """Full operator of a measurement-free circuit; later gates act on the left."""
    if c.num_qubits > qubit_cap:
        raise UnitaryError(
            f"{c.num_qubits} qubits exceeds the full-matrix cap of {qubit_cap}", "QUBIT_CAP_EXCEEDED"
        )
    u = sequence_unitary(c.instructions, c.num_qubits)
    if not is_unitary(u):
        raise UnitaryError("accumulated operator lost unitarity", "NON_UNITARY_INSTRUCTION")
    return u


def single_qubit_product(instructions: Iterable[Instruction]) -> np.ndarray:
    """2x2 product of single-qubit gates in program order; CX entries are skipped."""
    u = np.eye(2, dtype=complex)
    for inst in instructions:
        if inst.kind in (Gate.CX, Gate.BARRIER):
            continue
        u = instruction_matrix(inst) @ u
    return u


def is_identity(u: np.ndarray, tol: float = EXACT_TOL, up_to_global_phase: bool = True) -> bool:
    u = np.asarray(u, dtype=complex)
    eye = np.eye(u.shape[0])
    if not up_to_global_phase:
        return bool(np.max(np.abs(u - eye)) <= tol)
    ref = u[0, 0]
    if abs(abs(ref) - 1.0) > tol:
        return False
    return bool(np.max(np.abs(u - ref * eye)) <= tol)


def effective_rx(u: np.ndarray, tol: float = EXACT_TOL) -> float | None:
    """Angle ``theta`` in [0, 2*pi) with ``u == exp(i*alpha) * RX(theta)``, else None."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError(f"effective_rx needs a 2x2 matrix, got shape {u.shape}")
    t = 2.0 * math.atan2(abs(u[0, 1]), abs(u[0, 0]))
    for theta in (t, TWO_PI - t):
        r = rx_matrix(theta)
        overlap = np.trace(r.conj().T @ u) / 2.0
        if abs(overlap) < 1e-12:
            continue
        phase = overlap / abs(overlap)
        if np.max(np.abs(u - phase * r)) <= tol:
            theta = reduce_angle(theta)
            return 0.0 if TWO_PI - theta <= tol else theta
    return None
