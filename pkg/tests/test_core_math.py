import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from twoway_qkd.core_math import (
    ComplexAmplitude,
    InsufficientDataError,
    SampleStats,
    correlation_mi,
    empirical_error_variance,
    empirical_mi,
    gaussian_pdf,
    mi_per_quadrature,
    mi_two_quadratures,
    sample_modulation,
    sample_real,
)

N = 10**6


def test_gaussian_pdf_values():
    assert gaussian_pdf(0.0, 1 / (2 * math.pi)) == pytest.approx(1.0, rel=1e-15)
    assert gaussian_pdf(0.0, 1.0) == pytest.approx(0.3989422804014327, rel=1e-15)


def test_gaussian_pdf_integrates_to_one():
    # trapezoid quadrature over +-12 sigma
    for v in (0.1, 1.0, 7.5):
        x = np.linspace(-12 * math.sqrt(v), 12 * math.sqrt(v), 20001)
        y = gaussian_pdf(x, v)
        area = np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
        assert area == pytest.approx(1.0, abs=1e-9)


@given(st.floats(-50, 50), st.floats(1e-3, 1e3))
def test_gaussian_pdf_even(a, v):
    assert gaussian_pdf(a, v) == gaussian_pdf(-a, v)


@pytest.mark.parametrize("v", [0.0, -1.0])
def test_gaussian_pdf_rejects_nonpositive_variance(v):
    with pytest.raises(ValueError):
        gaussian_pdf(0.0, v)


def test_sample_real_degenerate_and_negative():
    rng = np.random.default_rng(0)
    assert sample_real(0.0, rng) == 0.0
    assert np.all(sample_real(0.0, rng, size=5) == 0.0)
    with pytest.raises(ValueError):
        sample_real(-0.1, rng)


def test_sample_real_variance():
    s = sample_real(4.0, np.random.default_rng(1), size=N)
    assert 3.97 <= s.var(ddof=1) <= 4.03


@pytest.mark.parametrize("v", [0.25, 0.5, 1.0, 100.0])
def test_sample_real_variance_band(v):
    n = 200_000
    s = sample_real(v, np.random.default_rng(2), size=n)
    assert abs(s.var(ddof=1) - v) < 5 * math.sqrt(2 / n) * v


def test_sample_real_replay():
    a = sample_real(1.0, np.random.default_rng(7), size=10)
    b = sample_real(1.0, np.random.default_rng(7), size=10)
    assert np.array_equal(a, b)


def test_sample_modulation():
    rng = np.random.default_rng(3)
    assert sample_modulation(0.0, rng) == ComplexAmplitude(0.0, 0.0)
    assert isinstance(sample_modulation(0.3, rng), ComplexAmplitude)
    s = sample_modulation(0.5, rng, size=N)
    assert s.shape == (N, 2)
    np.testing.assert_allclose(s.var(axis=0, ddof=1), 0.5, rtol=0.01)
    assert abs(np.corrcoef(s[:, 0], s[:, 1])[0, 1]) < 0.005
    with pytest.raises(ValueError):
        sample_modulation(-1.0, rng)


def test_modulation_kernel_convention():
    # |mu|^2 = (x^2 + p^2)/2 is exponential with mean sigma2 under exp(-|mu|^2/sigma2)/(pi sigma2)
    s = sample_modulation(0.7, np.random.default_rng(4), size=N)
    mu_sq = 0.5 * (s**2).sum(axis=1)
    assert mu_sq.mean() == pytest.approx(0.7, rel=0.01)


def test_complex_amplitude_roundtrip():
    a = ComplexAmplitude.from_complex(1 - 2j)
    assert a.mu == pytest.approx(1 - 2j)
    assert a == pytest.approx((math.sqrt(2), -2 * math.sqrt(2)))
    assert ComplexAmplitude(1, 2) + ComplexAmplitude(3, 4) == (4, 6)


def test_mi_values():
    assert mi_per_quadrature(0.0, 1.0) == 0.0
    assert mi_per_quadrature(1.0, 1.0) == pytest.approx(0.5)
    assert mi_per_quadrature(3.0, 1.0) == pytest.approx(1.0)
    assert mi_two_quadratures(3.0, 1.0) == pytest.approx(2.0)
    assert mi_two_quadratures(100.0, 2.0) == pytest.approx(math.log2(51))
    assert mi_two_quadratures(100.0, 2.0) == pytest.approx(5.672, abs=5e-4)
    with pytest.raises(ValueError):
        mi_per_quadrature(1.0, 0.0)


def test_mi_two_is_twice_per_quadrature():
    rng = np.random.default_rng(5)
    for s, n in zip(rng.uniform(0, 100, 100), rng.uniform(0.01, 10, 100)):
        assert mi_two_quadratures(s, n) == pytest.approx(2 * mi_per_quadrature(s, n), rel=1e-15)


@given(st.floats(0, 1e4), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_mi_scale_invariance(s, n, a):
    assert mi_per_quadrature(a * s, a * n) == pytest.approx(mi_per_quadrature(s, n), rel=1e-9, abs=1e-12)


@given(st.floats(0, 1e3), st.floats(0, 1e3), st.floats(1e-2, 1e2))
def test_mi_monotone(s1, s2, n):
    lo, hi = sorted((s1, s2))
    assert mi_per_quadrature(lo, n) <= mi_per_quadrature(hi, n)
    assert mi_per_quadrature(hi, n) >= mi_per_quadrature(hi, n * 2)


def test_empirical_error_variance():
    assert empirical_error_variance([(0, 1), (0, -1)]) == pytest.approx(2.0)
    assert empirical_error_variance([(1, 1), (2, 2), (5, 5)]) == 0.0
    with pytest.raises(InsufficientDataError):
        empirical_error_variance([(0, 1)])
    rng = np.random.default_rng(6)
    t = rng.normal(0, 3, N)
    assert empirical_error_variance(np.column_stack([t, t + rng.normal(0, 1, N)])) == pytest.approx(1.0, rel=0.01)


def test_empirical_mi():
    pairs = [(0, 1), (0, -1), (0, 1), (0, -1)]  # error variance 4/3
    assert empirical_mi(pairs, 1.0) == pytest.approx(mi_per_quadrature(1.0, 4 / 3))
    assert empirical_mi([(1, 1), (2, 2)], 5.0) == math.inf
    rng = np.random.default_rng(8)
    t = rng.normal(0, 10, N)
    pairs = np.column_stack([t, t + rng.normal(0, 1, N)])
    assert empirical_mi(pairs, 100.0) == pytest.approx(0.5 * math.log2(101), rel=0.02)
    assert 0.5 * math.log2(101) == pytest.approx(3.329, abs=5e-4)


def test_empirical_mi_additive_over_quadratures():
    rng = np.random.default_rng(9)
    a = rng.normal(0, 10, (N, 2))
    est = a + rng.normal(0, math.sqrt(2.0), (N, 2))
    total = empirical_mi(np.column_stack([a[:, 0], est[:, 0]]), 100.0) + empirical_mi(
        np.column_stack([a[:, 1], est[:, 1]]), 100.0
    )
    assert total == pytest.approx(mi_two_quadratures(100.0, 2.0), rel=0.01)


def test_correlation_mi():
    rng = np.random.default_rng(10)
    t = rng.normal(0, 10, N)
    assert correlation_mi(np.column_stack([t, t + rng.normal(0, 1, N)])) == pytest.approx(0.5 * math.log2(101), rel=0.01)
    assert correlation_mi(np.column_stack([t, rng.normal(0, 1, N)])) < 1e-5


@given(st.lists(st.floats(-1e3, 1e3), min_size=0, max_size=30), st.lists(st.floats(-1e3, 1e3), min_size=0, max_size=30),
       st.lists(st.floats(-1e3, 1e3), min_size=0, max_size=30))
def test_sample_stats_merge(a, b, c):
    whole = a + b + c
    merged = SampleStats.from_samples(a).merge(SampleStats.from_samples(b).merge(SampleStats.from_samples(c)))
    assert merged.count == len(whole)
    if len(whole) >= 2:
        ref = np.var(whole, ddof=1)
        assert merged.variance == pytest.approx(ref, rel=1e-12, abs=1e-9)
        assert merged.mean == pytest.approx(np.mean(whole), rel=1e-12, abs=1e-9)


def test_sample_stats_needs_two():
    with pytest.raises(InsufficientDataError):
        SampleStats.from_samples([1.0]).variance
