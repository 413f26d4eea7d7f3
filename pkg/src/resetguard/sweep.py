"""Batch experiment sweeps: JSON spec in, frequency CSVs and analysis rows out.

A sweep spec names a masking family, a list of reset counts, and the
victim angle grids. Family parameters given as lists are swept; the
cartesian product of reset counts and family parameters forms the
conditions. Example::

    {
      "name": "xchain",
      "masking": {"family": "xchain", "params": {"n": [0, 2, 4]}},
      "num_resets": [0, 1, 2],
      "victim_thetas": [["0", "pi/4", "pi/2", "3*pi/4", "pi"]],
      "victim_phis": [["0", "pi/2", "pi", "3*pi/2"]],
      "shots": 4096, "trials": 2, "seed": 1
    }

Angles may be numbers or expressions such as ``"3*pi/4"``.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from . import generators as gen
from .analysis import AnalysisError, fit_table, snr_multi, snr_single
from .circuit import Circuit
from .qasm import ParseError, parse_angle
from .simulator import ExperimentSpec, FrequencyTable, ResetChannelParams, ResetMode, simulate

_ANGLE = {"type": ["number", "string"]}
_GRID = {"type": "array", "minItems": 1, "items": _ANGLE}

SWEEP_SCHEMA = {
    "type": "object",
    "required": ["masking", "num_resets", "victim_thetas", "victim_phis"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "masking": {
            "type": "object",
            "required": ["family"],
            "additionalProperties": False,
            "properties": {
                "family": {"enum": ["empty", "xchain", "rxrz", "cxchain", "grover2", "grover3", "qrng"]},
                "params": {"type": "object"},
            },
        },
        "num_resets": {
            "oneOf": [
                {"type": "integer", "minimum": 0},
                {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
            ]
        },
        "victim_thetas": {"type": "array", "minItems": 1, "items": _GRID},
        "victim_phis": {"type": "array", "minItems": 1, "items": _GRID},
        "shots": {"type": "integer", "minimum": 1},
        "trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "reset_mode": {"enum": [m.value for m in ResetMode]},
        "channel": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                k: {"type": "number", "minimum": 0, "maximum": 1}
                for k in ("r1", "r0", "eta_meas_10", "eta_meas_01")
            },
        },
        "analysis": {"enum": ["single", "multi", "none"]},
        "analysis_qubits": {"type": "array", "items": {"type": "integer", "minimum": 0}},
    },
}

# family -> (constructor, accepted parameter names with defaults)
FAMILIES = {
    "empty": (lambda qubits: Circuit.empty(qubits, 0, "empty"), {"qubits": 1}),
    "xchain": (lambda n: gen.gen_x_chain(n), {"n": 2}),
    "rxrz": (lambda theta, phi, depth: gen.gen_rx_rz(theta, phi, depth), {"theta": math.pi, "phi": math.pi / 2, "depth": 1}),
    "cxchain": (lambda n: gen.gen_cx_chain(n), {"n": 2}),
    "grover2": (lambda: gen.gen_grover2(), {}),
    "grover3": (lambda: gen.gen_grover3(), {}),
    "qrng": (lambda n: gen.gen_qrng(n), {"n": 4}),
}
_ANGLE_PARAMS = {"theta", "phi"}


class SweepSpecError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class Condition:
    num_resets: int
    params: dict

    @property
    def label(self) -> str:
        parts = [f"k={self.num_resets}"] + [f"{k}={_fmt(v)}" for k, v in sorted(self.params.items())]
        return ",".join(parts)


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def parse_condition(label: str) -> dict:
    """Inverse of :attr:`Condition.label`, with numeric values converted."""
    out = {}
    for part in label.split(","):
        key, _, value = part.partition("=")
        try:
            out[key] = int(value)
        except ValueError:
            out[key] = float(value)
    return out


@dataclass(frozen=True)
class SweepSpec:
    name: str
    family: str
    conditions: tuple[Condition, ...]
    thetas: tuple[tuple[float, ...], ...]
    phis: tuple[tuple[float, ...], ...]
    shots: int
    trials: int
    seed: int
    reset_mode: ResetMode
    channel: ResetChannelParams
    analysis: str
    analysis_qubits: tuple[int, ...]

    def masking(self, cond: Condition) -> Circuit:
        build, _ = FAMILIES[self.family]
        return build(**cond.params)


def _angles(grid, path: str) -> tuple[float, ...]:
    out = []
    for i, v in enumerate(grid):
        try:
            out.append(float(v) if not isinstance(v, str) else parse_angle(v))
        except ParseError as exc:
            raise SweepSpecError(f"{path}[{i}]", exc.message) from None
    return tuple(out)


def load_sweep_spec(doc: dict) -> SweepSpec:
    """Validate a sweep document; errors name the offending field path."""
    validator = jsonschema.Draft7Validator(SWEEP_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in e.absolute_path)
        raise SweepSpecError(path, e.message)

    family = doc["masking"]["family"]
    _, defaults = FAMILIES[family]
    raw = dict(doc["masking"].get("params", {}))
    unknown = set(raw) - set(defaults)
    if unknown:
        raise SweepSpecError(f"$.masking.params.{sorted(unknown)[0]}", f"unknown parameter for '{family}'")
    axes = {}
    for key, default in defaults.items():
        values = raw.get(key, default)
        values = values if isinstance(values, list) else [values]
        if not values:
            raise SweepSpecError(f"$.masking.params.{key}", "empty parameter list")
        path = f"$.masking.params.{key}"
        if key in _ANGLE_PARAMS:
            values = list(_angles(values, path))
        elif not all(isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in values):
            raise SweepSpecError(path, "expected non-negative integers")
        axes[key] = values

    resets = doc["num_resets"]
    resets = resets if isinstance(resets, list) else [resets]
    keys = list(axes)
    conditions = tuple(
        Condition(k, dict(zip(keys, combo)))
        for k in resets
        for combo in itertools.product(*(axes[key] for key in keys))
    )

    thetas = tuple(_angles(g, f"$.victim_thetas[{i}]") for i, g in enumerate(doc["victim_thetas"]))
    phis = tuple(_angles(g, f"$.victim_phis[{i}]") for i, g in enumerate(doc["victim_phis"]))
    if len(thetas) != len(phis):
        raise SweepSpecError("$.victim_phis", "need one phi grid per theta grid")

    spec = SweepSpec(
        name=doc.get("name", family),
        family=family,
        conditions=conditions,
        thetas=thetas,
        phis=phis,
        shots=doc.get("shots", 4096),
        trials=doc.get("trials", 1),
        seed=doc.get("seed", 0),
        reset_mode=ResetMode(doc.get("reset_mode", "CHANNEL")),
        channel=ResetChannelParams(**doc.get("channel", {})),
        analysis=doc.get("analysis", "single" if len(thetas) == 1 else "multi"),
        analysis_qubits=tuple(doc.get("analysis_qubits", range(len(thetas)))),
    )
    try:
        n = spec.masking(conditions[0]).num_qubits
    except ValueError as exc:
        raise SweepSpecError("$.masking.params", str(exc)) from None
    if n != len(thetas):
        raise SweepSpecError("$.victim_thetas", f"masking circuit has {n} qubit(s) but {len(thetas)} angle grid(s) given")
    bad = [q for q in spec.analysis_qubits if q >= len(thetas)]
    if bad:
        raise SweepSpecError("$.analysis_qubits", f"qubit {bad[0]} out of range")
    return spec


def condition_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint32)[0])


def run_condition(spec: SweepSpec, index: int) -> tuple[Condition, FrequencyTable]:
    cond = spec.conditions[index]
    exp = ExperimentSpec(
        victim_thetas=spec.thetas,
        victim_phis=spec.phis,
        num_resets=cond.num_resets,
        masking=spec.masking(cond),
        shots=spec.shots,
        trials=spec.trials,
        seed=condition_seed(spec.seed, index),
        reset_mode=spec.reset_mode,
    )
    table = simulate(exp, spec.channel)
    table.meta["condition"] = cond.label
    return cond, table


def analyse(spec: SweepSpec, cond: Condition, table: FrequencyTable) -> list[dict]:
    rows = []
    for q in spec.analysis_qubits:
        row = {"condition": cond.label, "qubit": q, "a": None, "b": None, "c": None, "rss": None}
        try:
            if spec.analysis == "single":
                fit = fit_table(table, q)
                snr = snr_single(fit, table, q)
                row.update(a=fit.a, b=fit.b, c=fit.c, rss=fit.rss)
            elif spec.analysis == "multi":
                snr = snr_multi(table, q)
            else:
                continue
        except AnalysisError as exc:
            row.update(signal=None, sigma=None, snr_db=None, error=str(exc))
        else:
            row.update(signal=snr.signal, sigma=snr.noise_sigma, snr_db=snr.snr_db)
        rows.append(row)
    return rows


def run_sweep(spec: SweepSpec, workers: int = 1):
    """Simulate and analyse every condition; results come back in condition order."""
    indices = range(len(spec.conditions))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(run_condition, [spec] * len(indices), indices))
    else:
        results = [run_condition(spec, i) for i in indices]
    tables = []
    rows = []
    for cond, table in results:
        tables.append((cond, table))
        rows.extend(analyse(spec, cond, table))
    return tables, rows


def _slug(label: str) -> str:
    return label.replace(",", "_").replace("=", "").replace(".", "p").replace("-", "m")


def write_outputs(spec: SweepSpec, tables, rows, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for cond, table in tables:
        path = out_dir / f"freq_{_slug(cond.label)}.csv"
        path.write_text(table.to_csv())
        written.append(path)
    path = out_dir / "analysis.json"
    path.write_text(json.dumps(rows, indent=2) + "\n")
    written.append(path)
    return written
