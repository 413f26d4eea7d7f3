import math

import numpy as np
import pytest
from scipy import stats

from resetguard import generators as gen
from resetguard.analysis import (
    AnalysisError,
    ErrorChannelRegressor,
    error_channel,
    error_channel_jacobian,
    fit_error_channel,
    fit_table,
    pearson,
    rms_gradient,
    snr_db,
    snr_multi,
    snr_single,
)
from resetguard.simulator import ExperimentSpec, FrequencyTable, ResetChannelParams, simulate

GRID = np.linspace(0, math.pi, 17)


def points(a, b, c, grid=GRID):
    return list(zip(grid, error_channel(grid, a, b, c)))


def test_noiseless_recovery_example():
    fit = fit_error_channel(points(0.5, 0.9, 0.05))
    assert (fit.a, fit.b, fit.c) == pytest.approx((0.5, 0.9, 0.05), abs=1e-6)
    assert fit.rss < 1e-10 and fit.converged


def test_constant_data():
    fit = fit_error_channel([(t, 0.3) for t in GRID])
    assert fit.rss < 1e-12
    assert fit(GRID) == pytest.approx(np.full(17, 0.3), abs=1e-6)
    # with a = 0 only c is identified
    if abs(fit.a) < 1e-6:
        assert fit.c == pytest.approx(0.3, abs=1e-6)


def test_b_equal_one():
    data = [(t, 0.4 * math.sin(t / 2) ** 2 + 0.1) for t in GRID]
    fit = fit_error_channel(data)
    assert (fit.a, fit.c) == pytest.approx((0.4, 0.1), abs=1e-6)


def test_negative_amplitude():
    fit = fit_error_channel(points(-0.6, 0.7, 0.8))
    assert (fit.a, fit.b, fit.c) == pytest.approx((-0.6, 0.7, 0.8), abs=1e-6)


def test_fit_stays_in_box():
    rng = np.random.default_rng(0)
    y = np.clip(rng.normal(0.5, 0.3, 17), 0, 1)
    fit = fit_error_channel(list(zip(GRID, y)))
    assert -1 <= fit.a <= 1 and 0 <= fit.b <= 1 and 0 <= fit.c <= 1 and fit.rss >= 0


def test_jacobian_matches_finite_differences():
    p = np.array([0.3, 0.6, 0.2])
    J = error_channel_jacobian(GRID, *p)
    for j in range(3):
        dp = np.zeros(3)
        dp[j] = 1e-6
        fd = (error_channel(GRID, *(p + dp)) - error_channel(GRID, *(p - dp))) / 2e-6
        assert np.allclose(J[:, j], fd, atol=1e-8)


def test_fit_errors():
    with pytest.raises(AnalysisError):
        fit_error_channel([(0.0, 0.1), (1.0, 0.2), (2.0, 0.3)])
    with pytest.raises(AnalysisError):
        fit_error_channel([(t, 0.1) for t in (0, 1, 2, 4)])
    with pytest.raises(AnalysisError):
        fit_error_channel([(t, 1.5) for t in (0, 1, 2, 3)])


def test_regressor_estimator_api():
    reg = ErrorChannelRegressor(n_starts=8)
    assert reg.get_params()["n_starts"] == 8
    y = error_channel(GRID, 0.5, 0.9, 0.05)
    reg.fit(GRID.reshape(-1, 1), y)
    assert np.allclose(reg.predict(GRID), y, atol=1e-8)
    assert reg.score(GRID, y) == pytest.approx(1.0)


def test_snr_db_examples():
    assert snr_db(0.5, 0.05) == pytest.approx(20.0)
    assert snr_db(0.1, 0.1) == pytest.approx(0.0)
    assert snr_db(0.1, 0.0) == math.inf


def _table(freq_fn, thetas, phis, trials=2):
    n = len(thetas)
    shape = tuple(len(g) for g in thetas) + tuple(len(g) for g in phis) + (trials, n)
    f = np.zeros(shape)
    for idx in np.ndindex(*shape[:-2]):
        th = [thetas[q][idx[q]] for q in range(n)]
        for q in range(n):
            f[idx + (slice(None), q)] = freq_fn(th, q)
    return FrequencyTable(tuple(map(tuple, thetas)), tuple(map(tuple, phis)), f, 100)


def test_snr_single_on_hand_table():
    thetas = [tuple(GRID)]
    phis = [(0.0, 1.0)]
    f = np.zeros((17, 2, 2, 1))
    base = error_channel(GRID, 0.5, 1.0, 0.2)
    f[:, 0, 0, 0] = base + 0.01
    f[:, 1, 0, 0] = base - 0.01
    f[:, 0, 1, 0] = base + 0.01
    f[:, 1, 1, 0] = base - 0.01
    t = FrequencyTable(tuple(thetas), tuple(phis), f, 100)
    r = snr_single(None, t, 0)
    sigma = np.std([0.01, -0.01, 0.01, -0.01], ddof=1)
    assert r.noise_sigma == pytest.approx(sigma)
    assert r.signal == pytest.approx(0.5, abs=1e-6)
    # relabelling phi points leaves the result unchanged
    t2 = FrequencyTable(t.thetas, t.phis, f[:, ::-1], 100)
    assert snr_single(None, t2, 0).snr_db == pytest.approx(r.snr_db)


def test_snr_single_needs_two_phis():
    t = _table(lambda th, q: 0.5, [tuple(GRID)], [(0.0,)], trials=1)
    with pytest.raises(AnalysisError):
        snr_single(None, t, 0)


def test_rms_gradient_constant_and_shift():
    t = _table(lambda th, q: 0.3, [tuple(GRID)], [(0.0,)])
    assert rms_gradient(t) == pytest.approx(0.0, abs=1e-14)
    t1 = _table(lambda th, q: 0.8 * math.sin(th[0] / 2) ** 2, [tuple(GRID)], [(0.0,)])
    t2 = _table(lambda th, q: 0.8 * math.sin(th[0] / 2) ** 2 + 0.1, [tuple(GRID)], [(0.0,)])
    assert rms_gradient(t1) == pytest.approx(rms_gradient(t2))


def test_rms_gradient_analytic_oracle():
    grid = np.linspace(0, math.pi, 2001)
    t = _table(lambda th, q: math.sin(th[0] / 2) ** 2, [tuple(grid)], [(0.0,)], trials=1)
    analytic = math.sqrt(np.mean((np.sin(grid) / 2) ** 2))
    assert rms_gradient(t) == pytest.approx(analytic, abs=1e-4)


def test_rms_gradient_linear_field():
    g = tuple(np.linspace(0, math.pi, 5))
    t = _table(lambda th, q: (th[0] + th[1]) / (2 * math.pi), [g, g], [(0.0,), (0.0,)])
    assert rms_gradient(t, 0) == pytest.approx(math.sqrt(2) / (2 * math.pi))


def test_rms_gradient_needs_two_points():
    t = _table(lambda th, q: 0.3, [(0.0,)], [(0.0,)])
    with pytest.raises(AnalysisError):
        rms_gradient(t)


def test_snr_multi_sentinels():
    g = tuple(np.linspace(0, math.pi, 5))
    t = _table(lambda th, q: th[0] / math.pi, [g], [(0.0,)])
    assert snr_multi(t).snr_db == math.inf
    with pytest.raises(AnalysisError):
        snr_multi(_table(lambda th, q: 0.1, [g], [(0.0,)], trials=1))


def test_single_snr_drops_after_a_reset():
    thetas = (tuple(GRID),)
    phis = ((0.0, math.pi / 2, math.pi, 3 * math.pi / 2),)
    snrs = []
    for k in (0, 1):
        t = simulate(ExperimentSpec(thetas, phis, k, gen.gen_x_chain(2), shots=4096, trials=2, seed=k))
        snrs.append(snr_single(fit_table(t), t).snr_db)
    assert snrs[1] < snrs[0]


def _grid_table(masking, k, seed):
    g = tuple(np.linspace(0, math.pi, 5))
    n = masking.num_qubits
    ex = ExperimentSpec((g,) * n, ((0.0,),) * n, k, masking, shots=4096, trials=3, seed=seed)
    return simulate(ex, ResetChannelParams())


def test_grover2_multi_snr_drops_after_a_reset():
    s0 = snr_multi(_grid_table(gen.gen_grover2(), 0, 1), 0).snr_db
    s1 = snr_multi(_grid_table(gen.gen_grover2(), 1, 2), 0).snr_db
    assert s1 < s0


def test_qrng_gradient_is_noise():
    t = _grid_table(gen.gen_qrng(2), 0, 3)
    r = snr_multi(t, 0)
    # only sampling noise: the gradient of a 1/2 plateau is a few binomial sigmas per radian
    assert r.signal < 0.05
    assert r.snr_db < 10


def test_pearson():
    x = np.arange(10.0)
    assert pearson(x, 3 * x + 1) == pytest.approx(1.0)
    assert pearson(x, -x) == pytest.approx(-1.0)
    assert abs(pearson([1, -1, 1, -1], [1, 1, -1, -1])) < 1e-12
    rng = np.random.default_rng(4)
    a, b = rng.normal(size=50), rng.normal(size=50)
    assert pearson(a, b) == pytest.approx(stats.pearsonr(a, b)[0], abs=1e-12)
    with pytest.raises(AnalysisError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(AnalysisError):
        pearson([1], [2])


def _fisher_sd(grid, a, b, c, shots):
    J = error_channel_jacobian(grid, a, b, c)
    p = error_channel(grid, a, b, c)
    w = shots / np.clip(p * (1 - p), 1e-12, None)
    return np.sqrt(np.diag(np.linalg.pinv(J.T @ (w[:, None] * J))))


def test_noisy_fit_errors_are_identifiability_not_optimiser():
    """At 4096 shots the parameters are weakly identified (sin^2(t/2) and t/pi
    are nearly collinear on [0, pi]), so errors track the Cramer-Rao bound
    while the optimiser always reaches a residual no worse than the truth."""
    rng = np.random.default_rng(56)
    within, total = 0, 0
    for _ in range(30):
        a = rng.uniform(0.05, 1) * rng.choice([-1, 1])
        b, c = rng.uniform(0, 1, 2)
        e = error_channel(GRID, a, b, c)
        if e.min() < 0 or e.max() > 1:
            continue
        y = rng.binomial(4096, e) / 4096
        fit = fit_error_channel(list(zip(GRID, y)))
        true_rss = float(np.sum((e - y) ** 2))
        assert fit.rss <= true_rss + 1e-12
        sd = _fisher_sd(GRID, a, b, c, 4096)
        err = np.abs(np.array([fit.a - a, fit.b - b, fit.c - c]))
        within += bool(np.all(err <= 4 * sd + 1e-9))
        total += 1
    assert within >= 0.9 * total
