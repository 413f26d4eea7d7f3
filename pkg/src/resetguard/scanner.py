"""Compile-time detection of masked reset-attack circuits.

Each qubit is classified from the gates that act on it between its last
reset and its final measurement. A qubit whose measurement reads the
post-reset state unchanged (bare measurement, identity masking, or an
effective RX rotation far from pi/2) makes the circuit suspicious.
"""

from __future__ import annotations

import enum
import json
import math
import time
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from sklearn.base import BaseEstimator

from .circuit import Circuit, Gate, Role, region_bounds, scan_region_indexed
from .unitary import (
    DEFAULT_QUBIT_CAP,
    SCAN_TOL,
    UnitaryError,
    effective_rx,
    is_identity,
    sequence_unitary,
    single_qubit_product,
)


class Category(str, enum.Enum):
    BARE_MEASURE = "BARE_MEASURE"
    IDENTITY_BEFORE_MEASURE = "IDENTITY_BEFORE_MEASURE"
    EFFECTIVE_RX_FLAGGED = "EFFECTIVE_RX_FLAGGED"
    EFFECTIVE_RX_OK = "EFFECTIVE_RX_OK"
    EXPOSED_CONTROL_ONLY = "EXPOSED_CONTROL_ONLY"
    SINGLE_QUBIT_COMPLEX = "SINGLE_QUBIT_COMPLEX"
    MULTIQUBIT_TARGET_INVOLVED = "MULTIQUBIT_TARGET_INVOLVED"
    NO_MEASUREMENT = "NO_MEASUREMENT"


class Verdict(str, enum.Enum):
    SUSPICIOUS = "SUSPICIOUS"
    NOTED = "NOTED"
    CLEAN = "CLEAN"


SUSPICIOUS_CATEGORIES = frozenset(
    {Category.BARE_MEASURE, Category.IDENTITY_BEFORE_MEASURE, Category.EFFECTIVE_RX_FLAGGED}
)
NOTED_CATEGORIES = frozenset({Category.EXPOSED_CONTROL_ONLY, Category.EFFECTIVE_RX_OK})


@dataclass(frozen=True)
class ScanConfig:
    theta_low: float = math.pi / 4
    theta_high: float = 3 * math.pi / 4
    tol: float = SCAN_TOL
    full_matrix_cap: int = DEFAULT_QUBIT_CAP
    attempt_full_matrix: bool = True

    def __post_init__(self):
        if not 0 <= self.theta_low < self.theta_high <= math.pi:
            raise ValueError(
                f"need 0 <= theta_low < theta_high <= pi, got [{self.theta_low}, {self.theta_high}]"
            )
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.full_matrix_cap < 1:
            raise ValueError("full_matrix_cap must be at least 1")


@dataclass(frozen=True)
class QubitClassification:
    qubit: int
    category: Category
    effective_theta: float | None = None
    notes: tuple[str, ...] = ()

    @property
    def suspicious(self) -> bool:
        return self.category in SUSPICIOUS_CATEGORIES


@dataclass(frozen=True)
class ScanReport:
    circuit_name: str
    per_qubit: tuple[QubitClassification, ...]
    verdict: Verdict
    elapsed: float
    config_echo: ScanConfig
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "circuit_name": self.circuit_name,
            "verdict": self.verdict.value,
            "elapsed_seconds": self.elapsed,
            "qubits": [
                {
                    "qubit": qc.qubit,
                    "category": qc.category.value,
                    "effective_theta": qc.effective_theta,
                    "notes": list(qc.notes),
                }
                for qc in self.per_qubit
            ],
            "config": {
                "theta_low": self.config_echo.theta_low,
                "theta_high": self.config_echo.theta_high,
                "tol": self.config_echo.tol,
            },
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def to_text(self) -> str:
        lines = [f"{self.circuit_name}: {self.verdict.value} ({self.elapsed * 1e3:.2f} ms)"]
        for qc in self.per_qubit:
            theta = "" if qc.effective_theta is None else f" theta={qc.effective_theta:.6f}"
            lines.append(f"  q[{qc.qubit}] {qc.category.value}{theta}")
            lines.extend(f"      - {n}" for n in qc.notes)
        lines.extend(f"  * {n}" for n in self.notes)
        return "\n".join(lines)


def verdict_of(per_qubit: Iterable[QubitClassification]) -> Verdict:
    cats = {qc.category for qc in per_qubit}
    if cats & SUSPICIOUS_CATEGORIES:
        return Verdict.SUSPICIOUS
    if cats & NOTED_CATEGORIES:
        return Verdict.NOTED
    return Verdict.CLEAN


_EDGE_SLACK = 1e-12


def fold_theta(theta: float) -> float:
    # RX(theta) and RX(2pi - theta) give identical 1-output statistics
    return min(theta, 2 * math.pi - theta)


def classify_qubit(c: Circuit, q: int, cfg: ScanConfig | None = None) -> QubitClassification:
    cfg = cfg or ScanConfig()
    _, stop = region_bounds(c, q)
    if stop is None:
        return QubitClassification(q, Category.NO_MEASUREMENT)

    region = [inst for _, inst in scan_region_indexed(c, q)]
    notes: list[str] = []
    # an earlier measurement inside the region is the one that sees the masked state
    for i, inst in enumerate(region):
        if inst.kind is Gate.MEASURE:
            notes.append(f"mid-region measurement after {i} gate(s); later gates ignored")
            region = region[:i]
            break

    if not region:
        return QubitClassification(q, Category.BARE_MEASURE, notes=tuple(notes))

    cx_roles = [
        Role.CONTROL if inst.qubits[0] == q else Role.TARGET
        for inst in region
        if inst.kind is Gate.CX
    ]
    if Role.TARGET in cx_roles:
        notes.append(f"CX target {cx_roles.count(Role.TARGET)} time(s)")
        return QubitClassification(q, Category.MULTIQUBIT_TARGET_INVOLVED, notes=tuple(notes))
    if cx_roles:
        notes.append(f"CX control {len(cx_roles)} time(s)")

    u = single_qubit_product(region)
    if is_identity(u, cfg.tol, up_to_global_phase=True):
        return QubitClassification(q, Category.IDENTITY_BEFORE_MEASURE, 0.0, tuple(notes))

    theta = effective_rx(u, cfg.tol)
    if theta is not None:
        folded = fold_theta(theta)
        # open band; round-off at the edges must not flip a boundary angle to flagged
        flagged = folded < cfg.theta_low - _EDGE_SLACK or folded > cfg.theta_high + _EDGE_SLACK
        category = Category.EFFECTIVE_RX_FLAGGED if flagged else Category.EFFECTIVE_RX_OK
        return QubitClassification(q, category, folded, tuple(notes))

    if cx_roles:
        return QubitClassification(q, Category.EXPOSED_CONTROL_ONLY, notes=tuple(notes))
    return QubitClassification(q, Category.SINGLE_QUBIT_COMPLEX, notes=tuple(notes))


def _whole_region_identity(c: Circuit, cfg: ScanConfig) -> tuple[bool | None, str]:
    """Identity test on the full operator of everything inside the scan regions.

    Returns ``(None, reason)`` when the check does not apply.
    """
    if c.num_qubits > cfg.full_matrix_cap:
        return None, f"full-matrix check skipped: {c.num_qubits} qubits > cap {cfg.full_matrix_cap}"
    member: dict[int, int] = {}
    for q in range(c.num_qubits):
        for i, inst in scan_region_indexed(c, q):
            if not inst.kind.is_unitary:
                return None, "full-matrix check skipped: measurement or reset inside a scan region"
            member[i] = member.get(i, 0) + 1
    # a CX must lie inside the regions of both of its operands
    if any(member[i] != len(c.instructions[i].qubits) for i in member):
        return None, "full-matrix check skipped: a CX straddles a reset or measurement boundary"
    picked = [c.instructions[i] for i in sorted(member)]
    try:
        u = sequence_unitary(picked, c.num_qubits)
    except UnitaryError as exc:
        return None, f"full-matrix check skipped: {exc}"
    return is_identity(u, cfg.tol, up_to_global_phase=True), ""


def scan(c: Circuit, cfg: ScanConfig | None = None) -> ScanReport:
    cfg = cfg or ScanConfig()
    start = time.perf_counter()
    per_qubit = [classify_qubit(c, q, cfg) for q in range(c.num_qubits)]
    notes: list[str] = []

    if cfg.attempt_full_matrix:
        ident, reason = _whole_region_identity(c, cfg)
        if ident is None:
            notes.append(reason)
        elif ident:
            notes.append("whole-circuit unitary between resets and measurements is identity")
            per_qubit = [
                qc
                if qc.category in (Category.NO_MEASUREMENT, Category.BARE_MEASURE)
                else QubitClassification(
                    qc.qubit,
                    Category.IDENTITY_BEFORE_MEASURE,
                    0.0,
                    qc.notes + (f"per-qubit category was {qc.category.value}",)
                    if qc.category is not Category.IDENTITY_BEFORE_MEASURE
                    else qc.notes,
                )
                for qc in per_qubit
            ]
        else:
            notes.append("whole-circuit unitary between resets and measurements is not identity")

    elapsed = time.perf_counter() - start
    return ScanReport(c.name, tuple(per_qubit), verdict_of(per_qubit), elapsed, cfg, tuple(notes))


class ResetAttackScanner(BaseEstimator):
    """Estimator-style front end to :func:`scan`.

    ``fit`` only validates the configuration; ``predict`` maps a sequence of
    circuits to verdict strings and ``transform`` to per-circuit reports.

    >>> from resetguard.generators import gen_x_chain
    >>> ResetAttackScanner().fit().predict([gen_x_chain(2)]).tolist()
    ['SUSPICIOUS']
    """

    def __init__(
        self,
        theta_low: float = math.pi / 4,
        theta_high: float = 3 * math.pi / 4,
        tol: float = SCAN_TOL,
        full_matrix_cap: int = DEFAULT_QUBIT_CAP,
        attempt_full_matrix: bool = True,
    ):
        self.theta_low = theta_low
        self.theta_high = theta_high
        self.tol = tol
        self.full_matrix_cap = full_matrix_cap
        self.attempt_full_matrix = attempt_full_matrix

    def fit(self, X=None, y=None):
        self.config_ = ScanConfig(**self.get_params())
        return self

    def _config(self) -> ScanConfig:
        config = getattr(self, "config_", None)
        return config if config is not None else ScanConfig(**self.get_params())

    def transform(self, X) -> list[ScanReport]:
        cfg = self._config()
        return [scan(c, cfg) for c in _as_circuits(X)]

    def predict(self, X) -> np.ndarray:
        return np.array([r.verdict.value for r in self.transform(X)], dtype=object)

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X, y).predict(X)


def _as_circuits(X) -> list[Circuit]:
    if isinstance(X, Circuit):
        return [X]
    circuits = list(X)
    bad = [type(c).__name__ for c in circuits if not isinstance(c, Circuit)]
    if bad:
        raise TypeError(f"expected Circuit objects, got {bad[0]}")
    return circuits
