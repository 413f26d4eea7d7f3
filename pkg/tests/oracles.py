"""Independent reference implementations used as test oracles.

These deliberately avoid the package's own matrix code: gates are applied
to one basis state at a time by explicit bit manipulation.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from resetguard.circuit import Circuit, Gate


def _single(kind: Gate, angle):
    c, s = (math.cos(angle / 2), math.sin(angle / 2)) if angle is not None else (0.0, 0.0)
    r = 1 / math.sqrt(2)
    return {
        Gate.I: [[1, 0], [0, 1]],
        Gate.X: [[0, 1], [1, 0]],
        Gate.H: [[r, r], [r, -r]],
        Gate.SX: [[(1 + 1j) / 2, (1 - 1j) / 2], [(1 - 1j) / 2, (1 + 1j) / 2]],
        Gate.RX: [[c, -1j * s], [-1j * s, c]],
        Gate.RZ: [[cmath.exp(-1j * angle / 2) if angle is not None else 0, 0],
                  [0, cmath.exp(1j * angle / 2) if angle is not None else 0]],
    }[kind]


def apply_to_basis(c: Circuit, index: int) -> dict[int, complex]:
    """Evolve basis state ``index`` through the unitary gates of ``c``."""
    state = {index: 1.0 + 0j}
    for inst in c.instructions:
        if not inst.kind.is_unitary:
            continue
        new: dict[int, complex] = {}
        if inst.kind is Gate.CX:
            ctl, tgt = inst.qubits
            for b, amp in state.items():
                nb = b ^ (1 << tgt) if (b >> ctl) & 1 else b
                new[nb] = new.get(nb, 0) + amp
        else:
            (q,) = inst.qubits
            m = _single(inst.kind, inst.angle)
            for b, amp in state.items():
                bit = (b >> q) & 1
                for out in (0, 1):
                    coeff = m[out][bit]
                    if coeff != 0:
                        nb = (b & ~(1 << q)) | (out << q)
                        new[nb] = new.get(nb, 0) + coeff * amp
        state = new
    return state


def brute_force_unitary(c: Circuit) -> np.ndarray:
    dim = 2 ** c.num_qubits
    u = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        for row, amp in apply_to_basis(c, col).items():
            u[row, col] += amp
    return u


def outcome_probability(c: Circuit, bits: str) -> float:
    """Probability of reading ``bits`` (qubit 0 first) from |0...0>."""
    target = sum(int(ch) << q for q, ch in enumerate(bits))
    return abs(apply_to_basis(c, 0).get(target, 0)) ** 2


def phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Frobenius distance after the best global phase alignment."""
    overlap = np.vdot(v, u)
    phase = overlap / abs(overlap) if abs(overlap) > 1e-15 else 1.0
    return float(np.linalg.norm(u - phase * v))
