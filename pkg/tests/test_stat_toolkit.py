import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtri

from polymerlab import stat_toolkit as stk


def test_ks_one_sample_exact_quantiles():
    n = 100
    sample = ndtri((np.arange(1, n + 1) - 0.5) / n)
    assert stk.ks_one_sample(sample, stk.normal_cdf) == pytest.approx(0.005, abs=1e-12)


def test_ks_one_sample_constant_sample():
    assert stk.ks_one_sample([0.0, 0.0, 0.0], stk.normal_cdf) == pytest.approx(0.5)


def test_ks_one_sample_uniform_critical_value():
    rng = np.random.default_rng(123)
    u = rng.random(10_000)
    assert stk.ks_one_sample(u, lambda x: np.clip(x, 0, 1)) < 1.63 / math.sqrt(10_000)


def test_ks_empty_inputs():
    with pytest.raises(stk.EmptySampleError):
        stk.ks_one_sample([], stk.normal_cdf)
    with pytest.raises(stk.EmptySampleError):
        stk.ks_two_sample([], [1.0])


def test_ks_two_sample_degenerate_cases():
    assert stk.ks_two_sample([0.0, 1.0, 2.0], [0.0, 1.0, 2.0]) == 0.0
    assert stk.ks_two_sample([0.0], [1.0]) == 1.0


def test_ks_two_sample_null_critical_value():
    rng = np.random.default_rng(7)
    a = rng.standard_normal(2000)
    b = rng.standard_normal(2000)
    assert stk.ks_two_sample(a, b) < 1.63 * math.sqrt(2 / 2000)


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=60),
       st.lists(st.floats(-50, 50), min_size=1, max_size=60))
@settings(max_examples=50, deadline=None)
def test_ks_two_sample_symmetry(a, b):
    assert stk.ks_two_sample(a, b) == pytest.approx(stk.ks_two_sample(b, a), abs=1e-15)


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=50),
       st.lists(st.floats(-10, 10), min_size=2, max_size=50))
@settings(max_examples=50, deadline=None)
def test_ks_two_sample_monotone_invariance(a, b):
    f = lambda x: np.asarray(x) ** 3 + 2.0 * np.asarray(x)  # strictly increasing
    d0 = stk.ks_two_sample(a, b)
    d1 = stk.ks_two_sample(f(a), f(b))
    assert d0 == pytest.approx(d1, abs=1e-12)


def test_ks_one_sample_monotone_invariance():
    rng = np.random.default_rng(11)
    x = rng.standard_normal(500)
    d0 = stk.ks_one_sample(x, stk.normal_cdf)
    # transform sample and reference cdf by the same increasing map
    g = lambda y: y / 3.0
    d1 = stk.ks_one_sample(x * 3.0, lambda v: stk.normal_cdf(g(np.asarray(v))))
    assert d0 == pytest.approx(d1, abs=1e-12)


def test_sample_wrapper():
    s = stk.Sample(np.array([3.0, 1.0, 2.0]))
    assert np.array_equal(s.ensure_sorted(), [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        stk.Sample(np.array([2.0, 1.0]), sorted=True)
    assert stk.ks_two_sample(stk.Sample(np.array([1.0])), stk.Sample(np.array([1.0]))) == 0.0


# --- log-log slope -----------------------------------------------------------


def test_loglog_exact_power_law():
    pts = [(2.0**k, 2.0 ** (1.5 * k)) for k in range(10, 19)]
    fit = stk.loglog_slope(pts)
    assert fit.slope == pytest.approx(1.5, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_loglog_constant():
    fit = stk.loglog_slope([(2.0**k, 7.0) for k in range(10, 15)])
    assert fit.slope == pytest.approx(0.0, abs=1e-12)
    assert 0.0 <= fit.r_squared <= 1.0


def test_loglog_one_percent_noise():
    rng = np.random.default_rng(99)
    pts = [(2.0**k, 2.0 ** (1.5 * k) * (1.0 + 0.01 * rng.standard_normal()))
           for k in range(10, 19)]
    fit = stk.loglog_slope(pts)
    assert 1.48 <= fit.slope <= 1.52


def test_loglog_input_errors():
    with pytest.raises(ValueError):
        stk.loglog_slope([(1.0, 1.0), (2.0, 2.0)])
    with pytest.raises(ValueError):
        stk.loglog_slope([(1.0, 1.0), (2.0, -2.0), (4.0, 4.0)])


@given(st.floats(0.01, 100.0), st.integers(0, 1000))
@settings(max_examples=40, deadline=None)
def test_loglog_scale_invariance(c, seed):
    rng = np.random.default_rng(seed)
    ns = 2.0 ** np.arange(5, 12)
    vals = np.exp(rng.standard_normal(len(ns))) * ns
    f0 = stk.loglog_slope(np.column_stack([ns, vals]))
    f1 = stk.loglog_slope(np.column_stack([ns, c * vals]))
    assert f0.slope == pytest.approx(f1.slope, abs=1e-9)
    assert f1.intercept == pytest.approx(f0.intercept + math.log(c), abs=1e-9)


# --- normal cdf and intervals -------------------------------------------------


def test_normal_cdf_reference_values():
    # frozen high-precision references
    refs = {0.0: 0.5,
            1.0: 0.8413447460685429,
            -2.0: 0.022750131948179195,
            3.5: 0.9997673709209645,
            -5.0: 2.866515718791939e-07}
    for x, v in refs.items():
        assert abs(float(stk.normal_cdf(x)) - v) < 1e-12


def test_wilson_interval():
    lo, hi = stk.wilson_interval(50, 100)
    assert 0.0 <= lo < 0.5 < hi <= 1.0
    lo0, hi0 = stk.wilson_interval(0, 100)
    assert lo0 == 0.0 and hi0 > 0.0
    with pytest.raises(ValueError):
        stk.wilson_interval(1, 0)


def test_mean_ci():
    m, lo, hi = stk.mean_ci([1.0, 2.0, 3.0])
    assert m == 2.0 and lo < 2.0 < hi
    with pytest.raises(stk.EmptySampleError):
        stk.mean_ci([])
