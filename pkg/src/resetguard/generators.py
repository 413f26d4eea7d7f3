"""Constructors for victim, reset and masking circuits.

The masking families are the ones an attacker can slot between the reset
sequence and their own measurement: X chains (identity), RX/RZ rotations,
CX chains with the victim as control, Grover search and a Hadamard random
number generator. ``gen_random_identity`` builds scanner validation inputs.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .circuit import Circuit, Gate, Instruction, cx, measure, op, reset, rx, rz


def gen_victim(thetas: Sequence[float], phis: Sequence[float]) -> Circuit:
    """Per qubit: RX(theta), RZ(phi), then measure into the matching clbit."""
    if len(thetas) != len(phis):
        raise ValueError("thetas and phis must have the same length")
    if not thetas:
        raise ValueError("need at least one victim qubit")
    insts = []
    for q, (theta, phi) in enumerate(zip(thetas, phis)):
        insts += [rx(theta, q), rz(phi, q), measure(q, q)]
    n = len(thetas)
    return Circuit(n, n, insts, "victim")


def gen_resets(n_qubits: int, k: int) -> Circuit:
    if k < 0:
        raise ValueError("number of resets must be non-negative")
    return Circuit(n_qubits, 0, [reset(q) for _ in range(k) for q in range(n_qubits)], f"resets_{k}")


def _measure_all(n: int) -> list[Instruction]:
    return [measure(q, q) for q in range(n)]


def gen_x_chain(n_x: int) -> Circuit:
    if n_x < 0:
        raise ValueError("n_x must be non-negative")
    insts = [op(Gate.X, 0) for _ in range(n_x)] + [measure(0, 0)]
    return Circuit(1, 1, insts, f"xchain_{n_x}")


def gen_rx_rz(theta: float, phi: float, depth: int = 1) -> Circuit:
    """``depth`` copies of RX(theta/depth) followed by ``depth`` copies of RZ(phi/depth)."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    insts = [rx(theta / depth, 0) for _ in range(depth)]
    insts += [rz(phi / depth, 0) for _ in range(depth)]
    insts.append(measure(0, 0))
    return Circuit(1, 1, insts, f"rxrz_d{depth}")


def gen_cx_chain(n_cx: int) -> Circuit:
    """Two qubits, ``n_cx`` CX gates with qubit 0 as control; only qubit 0 is measured."""
    if n_cx < 0:
        raise ValueError("n_cx must be non-negative")
    insts = [cx(0, 1) for _ in range(n_cx)] + [measure(0, 0)]
    return Circuit(2, 1, insts, f"cxchain_{n_cx}")


def _cz(a: int, b: int) -> list[Instruction]:
    return [op(Gate.H, b), cx(a, b), op(Gate.H, b)]


def _ccz(a: int, b: int, c: int) -> list[Instruction]:
    # Toffoli network without its outer H pair; T = RZ(pi/4) up to a global phase
    t, tdg = math.pi / 4, -math.pi / 4
    return [
        cx(b, c), rz(tdg, c), cx(a, c), rz(t, c), cx(b, c), rz(tdg, c), cx(a, c),
        rz(t, b), rz(t, c), cx(a, b), rz(t, a), rz(tdg, b), cx(a, b),
    ]


def _flip_zeros(answer: str) -> list[Instruction]:
    # answer[q] is the bit of qubit q
    return [op(Gate.X, q) for q, bit in enumerate(answer) if bit == "0"]


def _grover_operator(n: int, answer: str) -> list[Instruction]:
    if n == 2:
        phase_flip = _cz(0, 1)
    elif n == 3:
        phase_flip = _ccz(0, 1, 2)
    else:
        raise ValueError("Grover operator is only built for 2 or 3 qubits")
    flips = _flip_zeros(answer)
    oracle = flips + phase_flip + flips
    layer_h = [op(Gate.H, q) for q in range(n)]
    layer_x = [op(Gate.X, q) for q in range(n)]
    diffusion = layer_h + layer_x + phase_flip + layer_x + layer_h
    return oracle + diffusion


def gen_grover(n: int, iterations: int, answer: str | None = None) -> Circuit:
    answer = "1" * n if answer is None else answer
    if len(answer) != n or set(answer) - {"0", "1"}:
        raise ValueError(f"answer must be a {n}-character bitstring")
    insts = [op(Gate.H, q) for q in range(n)]
    for _ in range(iterations):
        insts += _grover_operator(n, answer)
    insts += _measure_all(n)
    return Circuit(n, n, insts, f"grover{n}")


def gen_grover2() -> Circuit:
    return gen_grover(2, 1)


def gen_grover3() -> Circuit:
    return gen_grover(3, 2)


def gen_qrng(n: int = 4) -> Circuit:
    if n < 1:
        raise ValueError("n must be at least 1")
    insts = [op(Gate.H, q) for q in range(n)] + _measure_all(n)
    return Circuit(n, n, insts, f"qrng{n}")


_ONE_QUBIT = (Gate.I, Gate.X, Gate.SX, Gate.H, Gate.RZ, Gate.RX)


def _random_layers(n: int, depth: int, rng: np.random.Generator, cx_prob: float) -> list[Instruction]:
    insts = []
    for _ in range(depth):
        free = list(rng.permutation(n))
        while free:
            q = int(free.pop())
            if free and rng.random() < cx_prob:
                t = int(free.pop())
                insts.append(cx(q, t))
                continue
            kind = _ONE_QUBIT[rng.integers(len(_ONE_QUBIT))]
            angle = float(rng.uniform(-2 * math.pi, 2 * math.pi)) if kind.is_parametric else None
            insts.append(Instruction(kind, (q,), (), angle))
    return insts


def inverse(insts: Sequence[Instruction]) -> list[Instruction]:
    """Exact inverse of a unitary gate sequence."""
    out = []
    for inst in reversed(insts):
        if inst.kind.is_parametric:
            out.append(Instruction(inst.kind, inst.qubits, (), -inst.angle))
        elif inst.kind is Gate.SX:
            out += [inst, inst, inst]  # SX^4 = I
        elif inst.kind.is_unitary:
            out.append(inst)
        else:
            raise ValueError(f"{inst.kind.value} is not invertible")
    return out


def gen_random_identity(n_qubits: int, depth: int, seed=None, cx_prob: float = 0.3) -> Circuit:
    """Random layered circuit followed by its exact inverse, then measure all."""
    rng = np.random.default_rng(seed)
    body = _random_layers(n_qubits, depth, rng, cx_prob)
    insts = body + inverse(body) + _measure_all(n_qubits)
    return Circuit(n_qubits, n_qubits, insts, f"random_identity_{n_qubits}x{depth}")


def gen_random_circuit(n_qubits: int, depth: int, seed=None, cx_prob: float = 0.3,
                       target_every_qubit: bool = False) -> Circuit:
    """Random layered circuit, then measure all.

    With ``target_every_qubit`` a final CX ring makes each qubit a CX target
    at least once (needs two or more qubits).
    """
    rng = np.random.default_rng(seed)
    insts = _random_layers(n_qubits, depth, rng, cx_prob)
    if target_every_qubit:
        if n_qubits < 2:
            raise ValueError("target_every_qubit needs at least two qubits")
        insts += [cx(q, (q + 1) % n_qubits) for q in range(n_qubits)]
    insts += _measure_all(n_qubits)
    return Circuit(n_qubits, n_qubits, insts, f"random_{n_qubits}x{depth}")
