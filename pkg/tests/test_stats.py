import math

import numpy as np
import pytest

from uncollapse import stats
from uncollapse.charge import waiting_time_cdf


def test_wilson_extremes():
    zero = stats.bernoulli_estimate(0, 1000)
    assert zero.rate == 0.0 and zero.ci_low == 0.0 and zero.ci_high > 0.0
    full = stats.bernoulli_estimate(1000, 1000)
    assert full.rate == 1.0 and full.ci_high == 1.0 and full.ci_low < 1.0
    assert full.contains(1.0) and zero.contains(0.0)


def test_wilson_width_half():
    est = stats.bernoulli_estimate(500, 1000)
    assert est.rate == pytest.approx(0.5)
    width = est.ci_high - est.ci_low
    assert width == pytest.approx(3.0 / math.sqrt(1000.0), rel=0.02)
    assert est.ci_low < 0.5 < est.ci_high


def test_wilson_validation():
    with pytest.raises(ValueError):
        stats.bernoulli_estimate(1, 0)
    with pytest.raises(ValueError):
        stats.bernoulli_estimate(5, 4)


def test_ks_self_draws_small():
    rng = np.random.default_rng(0)
    n = 100_000
    samples = rng.standard_normal(n)

    def cdf(x):
        from scipy.special import ndtr

        return ndtr(x)

    comp = stats.ks_distance(samples, cdf, reference="standard normal")
    assert comp.statistic <= 1.95 / math.sqrt(n)
    assert comp.n == n


def test_ks_degenerate_and_shifted():
    const = np.full(200, 0.3)
    comp = stats.ks_distance(const, lambda x: np.clip(x, 0.0, 1.0))
    assert comp.statistic >= 0.5
    rng = np.random.default_rng(1)
    shifted = rng.standard_normal(5000) + 2.0

    def cdf(x):
        from scipy.special import ndtr

        return ndtr(x)

    assert stats.ks_distance(shifted, cdf).statistic > 0.5


def test_ks_waiting_time_reference_is_monotone():
    grid = np.linspace(1e-4, 30.0, 5000)
    f = waiting_time_cdf(grid, 1.0)
    assert np.all(np.diff(f) >= -1e-12)
    rng = np.random.default_rng(2)
    # inverse-transform draws from the waiting-time law itself
    u = rng.random(20_000)
    samples = np.interp(u, f, grid)
    comp = stats.ks_distance(samples, lambda t: waiting_time_cdf(t, 1.0))
    assert comp.statistic <= 0.02


def test_ks_requires_samples_and_monotone_cdf():
    with pytest.raises(ValueError):
        stats.ks_distance(np.arange(10), lambda x: x)
    with pytest.raises(ValueError):
        stats.ks_distance(np.linspace(0, 1, 200), lambda x: -x)


def test_moment_summary_gaussian():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(50_000)
    out = stats.moment_summary(x)
    assert out.mean == pytest.approx(0.0, abs=0.02)
    assert out.std == pytest.approx(1.0, abs=0.02)
    assert abs(out.mode - out.mean) <= 0.1


def test_moment_summary_exponential_long_tail():
    rng = np.random.default_rng(4)
    x = rng.exponential(size=50_000)
    out = stats.moment_summary(x)
    assert out.mean > out.mode


def test_moment_summary_deterministic():
    x = np.linspace(0.0, 1.0, 500)
    assert stats.moment_summary(x) == stats.moment_summary(x)
