"""Detect masked reset-operation attack circuits and measure their leakage."""

from .analysis import (
    ErrorChannelRegressor,
    SigmoidFit,
    SnrResult,
    fit_error_channel,
    pearson,
    rms_gradient,
    snr_multi,
    snr_single,
)
from .circuit import Circuit, Gate, Instruction, compose, depth, scan_region, slice_qubit
from .qasm import ParseError, emit_qasm, parse_qasm
from .scanner import ResetAttackScanner, ScanConfig, ScanReport, classify_qubit, scan
from .simulator import ExperimentSpec, FrequencyTable, ResetChannelParams, ResetMode, simulate
from .unitary import circuit_unitary, effective_rx, gate_matrix, is_identity

__version__ = "0.1.0"

__all__ = [
    "ErrorChannelRegressor",
    "SigmoidFit",
    "SnrResult",
    "fit_error_channel",
    "pearson",
    "rms_gradient",
    "snr_multi",
    "snr_single",
    "Circuit",
    "Gate",
    "Instruction",
    "compose",
    "depth",
    "scan_region",
    "slice_qubit",
    "ParseError",
    "emit_qasm",
    "parse_qasm",
    "ResetAttackScanner",
    "ScanConfig",
    "ScanReport",
    "classify_qubit",
    "scan",
    "ExperimentSpec",
    "FrequencyTable",
    "ResetChannelParams",
    "ResetMode",
    "simulate",
    "circuit_unitary",
    "effective_rx",
    "gate_matrix",
    "is_identity",
]
