"""Error-channel fitting and signal-to-noise figures.

The post-reset 1-output probability is modelled as

    E(theta) = a * (b * sin^2(theta/2) + (b - 1) * theta/pi) + c

with ``a`` in [-1, 1] and ``b``, ``c`` in [0, 1]. Single-qubit SNR divides
the fitted amplitude ``|a|`` by the mean spread of frequencies across phi
and trials; multi-qubit SNR uses the RMS frequency gradient over the
victim angle grid as the signal instead.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_consistent_length, check_is_fitted, column_or_1d

from .simulator import FrequencyTable

BOUNDS_LO = np.array([-1.0, 0.0, 0.0])
BOUNDS_HI = np.array([1.0, 1.0, 1.0])


class AnalysisError(ValueError):
    pass


def error_channel(theta, a: float, b: float, c: float):
    theta = np.asarray(theta, dtype=float)
    return a * (b * np.sin(theta / 2) ** 2 + (b - 1) * theta / np.pi) + c


def error_channel_jacobian(theta, a: float, b: float, c: float) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    s = np.sin(theta / 2) ** 2
    t = theta / np.pi
    return np.column_stack([b * s + (b - 1) * t, a * (s + t), np.ones_like(theta)])


@dataclass(frozen=True)
class SigmoidFit:
    a: float
    b: float
    c: float
    rss: float
    converged: bool

    def __call__(self, theta):
        return error_channel(theta, self.a, self.b, self.c)


@dataclass(frozen=True)
class SnrResult:
    signal: float
    noise_sigma: float
    snr_db: float


def _start_lattice(n_starts: int) -> np.ndarray:
    """Roughly ``n_starts`` points on a regular lattice strictly inside the box."""
    per_axis = max(2, math.ceil(n_starts ** (1 / 3)))
    axes = [lo + (hi - lo) * (np.arange(per_axis) + 0.5) / per_axis for lo, hi in zip(BOUNDS_LO, BOUNDS_HI)]
    return np.array(list(itertools.product(*axes)))


def _projected_lm(theta, y, p0, max_iter: int, xtol: float, ftol: float = 1e-12):
    """Levenberg-Marquardt steps clipped to the parameter box."""
    p = np.clip(np.asarray(p0, dtype=float), BOUNDS_LO, BOUNDS_HI)
    r = error_channel(theta, *p) - y
    rss = float(r @ r)
    lam = 1e-3
    for _ in range(max_iter):
        if rss < 1e-30:
            break
        J = error_channel_jacobian(theta, *p)
        g = J.T @ r
        A = J.T @ J
        damp = lam * (np.diag(np.diag(A)) + 1e-12 * np.eye(3))
        try:
            step = np.linalg.solve(A + damp, -g)
        except np.linalg.LinAlgError:
            lam *= 10
            continue
        p_new = np.clip(p + step, BOUNDS_LO, BOUNDS_HI)
        r_new = error_channel(theta, *p_new) - y
        rss_new = float(r_new @ r_new)
        if rss_new < rss:
            moved = np.max(np.abs(p_new - p))
            gain = rss - rss_new
            p, r, rss = p_new, r_new, rss_new
            lam = max(lam / 5, 1e-15)
            if moved < xtol or gain <= ftol * rss:
                break
        else:
            lam *= 4
            if lam > 1e12:
                break
    return p, rss


class ErrorChannelRegressor(RegressorMixin, BaseEstimator):
    """Box-constrained least-squares fit of the reset error channel.

    ``X`` holds victim angles (1-D, or a single column) and ``y`` the
    observed 1-output frequencies. The fit runs projected
    Levenberg-Marquardt from a lattice of starting points and keeps the
    lowest residual.

    Parameters
    ----------
    n_starts : int
        Minimum number of lattice starts.
    max_iter : int
        Iteration cap per start.
    xtol : float
        Stop a start when a step moves every parameter less than this.
    rss_rel_threshold : float
        ``converged_`` is False when the residual sum of squares exceeds
        this fraction of the total sum of squares of ``y``.
    """

    def __init__(self, n_starts: int = 27, max_iter: int = 200, xtol: float = 1e-12,
                 rss_rel_threshold: float = 0.5):
        self.n_starts = n_starts
        self.max_iter = max_iter
        self.xtol = xtol
        self.rss_rel_threshold = rss_rel_threshold

    def fit(self, X, y):
        theta = column_or_1d(np.asarray(X, dtype=float))
        y = column_or_1d(np.asarray(y, dtype=float))
        check_consistent_length(theta, y)
        if len(theta) < 4:
            raise AnalysisError(f"need at least 4 points to fit, got {len(theta)}")
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(y))):
            raise AnalysisError("non-finite input")
        if np.any(theta < -1e-12) or np.any(theta > np.pi + 1e-12):
            raise AnalysisError("theta values must lie in [0, pi]")
        if np.any(y < 0) or np.any(y > 1):
            raise AnalysisError("frequencies must lie in [0, 1]")

        best_p, best_rss = None, np.inf
        for p0 in _start_lattice(self.n_starts):
            p, rss = _projected_lm(theta, y, p0, self.max_iter, self.xtol)
            if rss < best_rss:
                best_p, best_rss = p, rss
        tss = float(np.sum((y - y.mean()) ** 2))
        self.a_, self.b_, self.c_ = (float(v) for v in best_p)
        self.rss_ = best_rss
        self.converged_ = bool(best_rss <= self.rss_rel_threshold * tss + 1e-20)
        return self

    def predict(self, X):
        check_is_fitted(self, "a_")
        theta = column_or_1d(np.asarray(X, dtype=float))
        return error_channel(theta, self.a_, self.b_, self.c_)

    @property
    def result_(self) -> SigmoidFit:
        check_is_fitted(self, "a_")
        return SigmoidFit(self.a_, self.b_, self.c_, self.rss_, self.converged_)


def fit_error_channel(points: Sequence[tuple[float, float]], **kwargs) -> SigmoidFit:
    """Fit ``E(theta)`` to ``(theta, frequency)`` pairs."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2) if len(points) else np.empty((0, 2))
    return ErrorChannelRegressor(**kwargs).fit(pts[:, 0], pts[:, 1]).result_


def snr_db(signal: float, sigma: float) -> float:
    """``20*log10(signal/sigma)``; +inf when sigma is zero, -inf when the signal is."""
    if sigma <= 0:
        return math.inf
    if signal <= 0:
        return -math.inf
    return 20.0 * math.log10(signal / sigma)


def _qubit_axes(table: FrequencyTable, qubit: int) -> np.ndarray:
    if not 0 <= qubit < table.num_qubits:
        raise AnalysisError(f"qubit {qubit} not in table")
    return table.qubit(qubit)


def single_qubit_curve(table: FrequencyTable, qubit: int) -> tuple[np.ndarray, np.ndarray]:
    """``(theta, mean frequency)`` for ``qubit`` against its own victim angle.

    Averages over phi, trials and the other qubits' angles.
    """
    f = _qubit_axes(table, qubit)
    other = tuple(a for a in range(f.ndim) if a != qubit)
    return np.asarray(table.thetas[qubit], dtype=float), f.mean(axis=other)


def fit_table(table: FrequencyTable, qubit: int = 0, **kwargs) -> SigmoidFit:
    theta, mean = single_qubit_curve(table, qubit)
    return fit_error_channel(list(zip(theta, mean)), **kwargs)


def snr_single(fit: SigmoidFit | None, table: FrequencyTable, qubit: int = 0) -> SnrResult:
    """Fitted amplitude over the mean (phi, trial) standard deviation per theta point."""
    n = table.num_qubits
    f = _qubit_axes(table, qubit)
    phi_axes = tuple(range(n, 2 * n)) + (2 * n,)
    samples = int(np.prod([f.shape[a] for a in phi_axes]))
    if int(np.prod(f.shape[n:2 * n])) < 2:
        raise AnalysisError("single-qubit SNR needs at least two phi points per theta")
    if fit is None:
        fit = fit_table(table, qubit)
    sigma = float(np.std(f, axis=phi_axes, ddof=1).mean()) if samples > 1 else 0.0
    signal = abs(fit.a)
    return SnrResult(signal, sigma, snr_db(signal, sigma))


def rms_gradient(table: FrequencyTable, qubit: int = 0) -> float:
    """RMS over the theta grid of the gradient magnitude of the trial-mean frequency."""
    n = table.num_qubits
    f = _qubit_axes(table, qubit)
    mean = f.mean(axis=tuple(range(n, 2 * n + 1)))  # average phi axes and trials
    if any(len(g) < 2 for g in table.thetas):
        raise AnalysisError("gradient needs at least two grid points along every theta axis")
    grads = np.gradient(mean, *[np.asarray(g, dtype=float) for g in table.thetas], edge_order=1)
    if n == 1:
        grads = [grads]
    mag2 = sum(g**2 for g in grads)
    return float(np.sqrt(np.mean(mag2)))


def snr_multi(table: FrequencyTable, qubit: int = 0) -> SnrResult:
    if table.trials < 2:
        raise AnalysisError("multi-qubit SNR needs at least two trials")
    f = _qubit_axes(table, qubit)
    sigma = float(np.std(f, axis=-1, ddof=1).mean())
    signal = rms_gradient(table, qubit)
    return SnrResult(signal, sigma, snr_db(signal, sigma))


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise AnalysisError("pearson needs two equal-length sequences of at least two values")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise AnalysisError("pearson is undefined for a constant sequence")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))
