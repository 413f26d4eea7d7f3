"""Shot-level simulation of the victim -> reset -> masking -> measure pipeline.

The victim prepares each qubit with RX(theta) then RZ(phi) and measures.
``num_resets`` reset operations follow, each either a noisy channel (the
post-reset state is |1> with probability ``r1`` after a 1 outcome and
``r0`` after a 0 outcome) or an ideal measure + conditional X. The
attacker's masking unitary acts on the resulting basis state and the final
readout flips bits with asymmetric confusion probabilities.

Every (grid point, trial) cell draws from its own random stream derived
from the seed, so results do not depend on evaluation order.
"""

from __future__ import annotations

import csv
import enum
import io
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, Gate
from .unitary import DEFAULT_QUBIT_CAP, rx_matrix, rz_matrix, sequence_unitary

# 1->0 and 0->1 readout rates of the calibrated device
DEFAULT_R1 = 0.0340
DEFAULT_R0 = 0.0096


class SimulationError(ValueError):
    def __init__(self, message: str, code: str):
        super().__init__(message)
        self.code = code


class ResetMode(str, enum.Enum):
    CHANNEL = "CHANNEL"
    MEASURE_X_IDEAL = "MEASURE_X_IDEAL"


@dataclass(frozen=True)
class ResetChannelParams:
    r1: float = DEFAULT_R1
    r0: float = DEFAULT_R0
    eta_meas_10: float = DEFAULT_R1
    eta_meas_01: float = DEFAULT_R0

    def __post_init__(self):
        for name in ("r1", "r0", "eta_meas_10", "eta_meas_01"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    @classmethod
    def noiseless(cls) -> ResetChannelParams:
        return cls(0.0, 0.0, 0.0, 0.0)

    def readout(self, p1: float) -> float:
        """Probability of reading 1 when the true state is |1> with probability ``p1``."""
        return p1 * (1.0 - self.eta_meas_10) + (1.0 - p1) * self.eta_meas_01


def born_p1(theta: float) -> float:
    return math.sin(theta / 2.0) ** 2


def apply_reset_channel(p1, params: ResetChannelParams):
    """Post-reset probability of |1>: ``p1*r1 + (1-p1)*r0``."""
    return p1 * params.r1 + (1.0 - p1) * params.r0


def expected_frequency(theta: float, k: int, params: ResetChannelParams) -> float:
    """Closed-form 1-output frequency for an empty masking circuit in CHANNEL mode."""
    p = born_p1(theta)
    for _ in range(k):
        p = apply_reset_channel(p, params)
    return params.readout(p)


@dataclass(frozen=True)
class ExperimentSpec:
    victim_thetas: tuple[tuple[float, ...], ...]
    victim_phis: tuple[tuple[float, ...], ...]
    num_resets: int
    masking: Circuit
    shots: int = 4096
    trials: int = 1
    seed: int = 0
    reset_mode: ResetMode = ResetMode.CHANNEL

    def __post_init__(self):
        object.__setattr__(self, "victim_thetas", tuple(tuple(float(t) for t in g) for g in self.victim_thetas))
        object.__setattr__(self, "victim_phis", tuple(tuple(float(p) for p in g) for g in self.victim_phis))
        object.__setattr__(self, "reset_mode", ResetMode(self.reset_mode))
        n = self.masking.num_qubits
        if len(self.victim_thetas) != n or len(self.victim_phis) != n:
            raise ValueError(f"need one theta grid and one phi grid per qubit ({n} qubits)")
        if any(len(g) < 1 for g in self.victim_thetas + self.victim_phis):
            raise ValueError("angle grids must be non-empty")
        if self.shots < 1:
            raise ValueError("shots must be at least 1")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.num_resets < 0:
            raise ValueError("num_resets must be non-negative")

    @property
    def num_qubits(self) -> int:
        return self.masking.num_qubits

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.victim_thetas + self.victim_phis)


@dataclass
class FrequencyTable:
    """Per-qubit 1-output frequencies over the victim angle grid.

    ``freq`` has shape ``(*theta_sizes, *phi_sizes, trials, num_qubits)``:
    one theta axis and one phi axis per victim qubit.
    """

    thetas: tuple[tuple[float, ...], ...]
    phis: tuple[tuple[float, ...], ...]
    freq: np.ndarray
    shots: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.freq = np.asarray(self.freq, dtype=float)
        n = len(self.thetas)
        expected = tuple(len(g) for g in self.thetas) + tuple(len(g) for g in self.phis)
        if self.freq.ndim != 2 * n + 2 or self.freq.shape[: 2 * n] != expected or self.freq.shape[-1] != n:
            raise ValueError(f"frequency array of shape {self.freq.shape} does not match the grids")
        if np.any(self.freq < 0) or np.any(self.freq > 1):
            raise ValueError("frequencies must lie in [0, 1]")

    @property
    def num_qubits(self) -> int:
        return len(self.thetas)

    @property
    def trials(self) -> int:
        return self.freq.shape[-2]

    def qubit(self, q: int) -> np.ndarray:
        """Frequencies of qubit ``q``: shape ``(*theta_sizes, *phi_sizes, trials)``."""
        return self.freq[..., q]

    def rows(self):
        n = self.num_qubits
        grids = self.thetas + self.phis
        for idx in itertools.product(*(range(len(g)) for g in grids)):
            point = [grids[a][i] for a, i in enumerate(idx)]
            for trial in range(self.trials):
                for q in range(n):
                    yield q, point[:n], point[n:], trial, float(self.freq[idx + (trial, q)])

    def to_csv(self, fh=None) -> str | None:
        n = self.num_qubits
        own = fh is None
        fh = io.StringIO() if own else fh
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["qubit"] + [f"theta_{i}" for i in range(n)] + [f"phi_{i}" for i in range(n)]
                   + ["trial", "freq1", "shots"])
        for q, th, ph, trial, f in self.rows():
            w.writerow([q] + [repr(t) for t in th] + [repr(p) for p in ph] + [trial, repr(f), self.shots])
        return fh.getvalue() if own else None

    def to_dict(self) -> dict:
        return {
            "axes": {"thetas": [list(g) for g in self.thetas], "phis": [list(g) for g in self.phis]},
            "shape": list(self.freq.shape),
            "cells": self.freq.tolist(),
            "shots": self.shots,
            "meta": self.meta,
        }

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, d: dict) -> FrequencyTable:
        return cls(
            tuple(tuple(g) for g in d["axes"]["thetas"]),
            tuple(tuple(g) for g in d["axes"]["phis"]),
            np.array(d["cells"], dtype=float).reshape(d["shape"]),
            int(d["shots"]),
            dict(d.get("meta", {})),
        )


def masking_unitary(masking: Circuit, qubit_cap: int = DEFAULT_QUBIT_CAP) -> np.ndarray | None:
    """Unitary of the masking circuit with its trailing measurements stripped.

    Returns None when the circuit has no gates (the identity is implied).
    """
    if masking.num_qubits > qubit_cap:
        raise SimulationError(
            f"masking circuit has {masking.num_qubits} qubits, cap is {qubit_cap}", "CAP_EXCEEDED"
        )
    measured: set[int] = set()
    gates = []
    for inst in masking.instructions:
        if inst.kind is Gate.BARRIER:
            continue
        if inst.kind is Gate.RESET:
            raise SimulationError("masking circuit contains a reset", "NON_UNITARY_MASKING")
        if inst.kind is Gate.MEASURE:
            measured.add(inst.qubits[0])
            continue
        if measured.intersection(inst.qubits):
            raise SimulationError(
                f"gate {inst} acts on an already measured qubit", "NON_UNITARY_MASKING"
            )
        gates.append(inst)
    if not gates:
        return None
    return sequence_unitary(gates, masking.num_qubits)


def cell_rng(seed: int, cell: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(cell)]))


def _victim_p1(theta: float, phi: float) -> float:
    state = rz_matrix(phi) @ rx_matrix(theta) @ np.array([1.0, 0.0], dtype=complex)
    return float(abs(state[1]) ** 2)


def _simulate_cell(
    p1: np.ndarray,
    spec: ExperimentSpec,
    params: ResetChannelParams,
    unitary: np.ndarray | None,
    rng: np.random.Generator,
) -> np.ndarray:
    """1-output frequency per qubit for one grid point and trial."""
    shots, n = spec.shots, spec.num_qubits
    bits = rng.random((shots, n)) < p1  # victim collapse; its record is discarded
    if spec.reset_mode is ResetMode.CHANNEL:
        for _ in range(spec.num_resets):
            u = rng.random((shots, n))
            bits = np.where(bits, u < params.r1, u < params.r0)
    elif spec.num_resets > 0:
        bits = np.zeros_like(bits)  # measure + X on a 1 outcome always lands in |0>

    if unitary is not None:
        weights = 1 << np.arange(n)
        index = bits.astype(np.int64) @ weights
        out = np.empty(shots, dtype=np.int64)
        for b in np.unique(index):
            sel = index == b
            amp = unitary[:, b]
            probs = np.abs(amp) ** 2
            norm = probs.sum()
            if abs(norm - 1.0) > 1e-9:
                raise SimulationError(f"state norm drifted to {norm}", "NORM")
            out[sel] = rng.choice(len(probs), size=int(sel.sum()), p=probs / norm)
        bits = ((out[:, None] >> np.arange(n)) & 1).astype(bool)

    flip = rng.random((shots, n))
    read = np.where(bits, flip >= params.eta_meas_10, flip < params.eta_meas_01)
    return read.mean(axis=0)


def simulate(
    spec: ExperimentSpec,
    params: ResetChannelParams | None = None,
    qubit_cap: int = DEFAULT_QUBIT_CAP,
    workers: int = 1,
) -> FrequencyTable:
    """Run every (grid point, trial) cell and collect per-qubit frequencies."""
    params = params or ResetChannelParams()
    unitary = masking_unitary(spec.masking, qubit_cap)
    n = spec.num_qubits
    grids = spec.victim_thetas + spec.victim_phis
    points = list(itertools.product(*(range(len(g)) for g in grids)))

    def run(cell: int) -> np.ndarray:
        idx, trial = divmod(cell, spec.trials)
        point = points[idx]
        p1 = np.array([
            _victim_p1(grids[q][point[q]], grids[n + q][point[n + q]]) for q in range(n)
        ])
        return _simulate_cell(p1, spec, params, unitary, cell_rng(spec.seed, cell))

    cells = range(len(points) * spec.trials)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, cells))
    else:
        results = [run(c) for c in cells]

    freq = np.array(results).reshape(spec.grid_shape + (spec.trials, n))
    meta = {
        "num_resets": spec.num_resets,
        "reset_mode": spec.reset_mode.value,
        "masking": spec.masking.name,
        "seed": spec.seed,
        "trials": spec.trials,
    }
    return FrequencyTable(spec.victim_thetas, spec.victim_phis, freq, spec.shots, meta)
