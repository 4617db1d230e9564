import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdeur.entmath import (as_dstring, dary_entropy, extended_dary_entropy, log_binomial,
                           log_gamma, log_gamma_ratio, relative_weight)


def h_direct(x, d):
    # three-term formula in mpmath, independent of the float implementation
    x, d = mpmath.mpf(x), mpmath.mpf(d)
    return float((x * mpmath.log(d - 1) - x * mpmath.log(x) - (1 - x) * mpmath.log(1 - x)) / mpmath.log(d))


def test_relative_weight_examples():
    assert relative_weight([0, 0, 0, 0]) == 0
    assert relative_weight(as_dstring([1, 2, 0, 3], 4)) == 0.75


def test_relative_weight_matches_recount(rng):
    q = rng.integers(0, 5, size=1000)
    count = 0
    for s in q.tolist():
        if s != 0:
            count += 1
    assert relative_weight(q) == count / 1000


def test_relative_weight_empty():
    with pytest.raises(ValueError):
        relative_weight([])


def test_dstring_validation():
    with pytest.raises(ValueError):
        as_dstring([0, 4], 4)
    with pytest.raises(ValueError):
        as_dstring([0, 1], 1)


@pytest.mark.parametrize("d", [2, 3, 4, 10, 2**20])
def test_dary_entropy_fixed_points(d):
    assert dary_entropy(0.0, d) == 0.0
    assert dary_entropy(1 - 1 / d, d) == pytest.approx(1.0, abs=1e-12)
    assert dary_entropy(1.0, d) == pytest.approx(math.log(d - 1, d) if d > 2 else 0.0, abs=1e-15)


def test_binary_entropy_max():
    assert dary_entropy(0.5, 2) == pytest.approx(1.0, abs=1e-15)


def test_dary_entropy_domain():
    with pytest.raises(ValueError):
        dary_entropy(-0.1, 2)
    with pytest.raises(ValueError):
        dary_entropy(1.1, 3)


def test_extended_entropy_branches():
    assert extended_dary_entropy(-0.3, 5) == 0.0
    assert extended_dary_entropy(0.99, 2) == 1.0
    assert extended_dary_entropy(0.1, 4) == pytest.approx(h_direct(0.1, 4), rel=1e-13)


@settings(max_examples=300, deadline=None)
@given(x=st.floats(0.001, 0.999), d=st.integers(2, 5000))
def test_dary_entropy_matches_direct_formula(x, d):
    assert dary_entropy(x, d) == pytest.approx(h_direct(x, d), rel=1e-12, abs=1e-15)


@settings(max_examples=300, deadline=None)
@given(x=st.floats(0, 1), y=st.floats(0, 1), lam=st.floats(0, 1), d=st.integers(2, 64))
def test_dary_entropy_concave_and_bounded(x, y, lam, d):
    h = lambda v: dary_entropy(v, d)
    assert 0.0 <= h(x) <= 1.0 + 1e-15
    assert h(lam * x + (1 - lam) * y) >= lam * h(x) + (1 - lam) * h(y) - 1e-12


@settings(max_examples=200, deadline=None)
@given(a=st.floats(-2, 2), b=st.floats(-2, 2), d=st.integers(2, 100))
def test_extended_entropy_monotone(a, b, d):
    lo, hi = min(a, b), max(a, b)
    assert extended_dary_entropy(lo, d) <= extended_dary_entropy(hi, d) + 1e-15


@pytest.mark.parametrize("d", [2, 3, 7, 256])
def test_extended_entropy_continuity(d):
    assert extended_dary_entropy(1e-300, d) < 1e-12
    cut = 1 - 1 / d
    assert abs(extended_dary_entropy(cut, d) - extended_dary_entropy(math.nextafter(cut, 2), d)) < 1e-12


def test_log_gamma_examples():
    assert log_gamma(1.0) == 0.0
    assert log_gamma(0.5) == pytest.approx(math.log(math.sqrt(math.pi)), rel=1e-15)
    assert log_gamma(171.5) == pytest.approx(float(mpmath.loggamma(mpmath.mpf("171.5"))), rel=1e-12)
    with pytest.raises(ValueError):
        log_gamma(0.0)


@pytest.mark.parametrize("x", [0.5, 0.75, 3.3, 17.0, 1234.5, 1e5 + 0.25, 3.7e7, 1e9])
def test_log_gamma_high_precision(x):
    ref = float(mpmath.loggamma(mpmath.mpf(x)))
    assert log_gamma(x) == pytest.approx(ref, rel=1e-12)


def test_log_gamma_recurrence(rng):
    for x in rng.uniform(0.5, 100, 200):
        assert math.exp(log_gamma(x + 1)) == pytest.approx(x * math.exp(log_gamma(x)), rel=1e-10)


@pytest.mark.parametrize("x", [1.0, 10.5, 20.0, 25.5, 150.0, 999.0, 1001.0, 7e4, 3.3e6, 7e10, 1e12])
@pytest.mark.parametrize("a", [0.5, -0.5, 1.0])
def test_log_gamma_ratio_against_mpmath(x, a):
    with mpmath.workdps(40):
        ref = float(mpmath.loggamma(mpmath.mpf(x) + a) - mpmath.loggamma(mpmath.mpf(x)))
    assert log_gamma_ratio(x, a) == pytest.approx(ref, rel=1e-13, abs=1e-15)


def test_log_binomial_examples():
    assert log_binomial(5, 2) == pytest.approx(math.log(10), rel=1e-14)
    assert log_binomial(5, 2, base=2) == pytest.approx(math.log2(10), rel=1e-14)
    assert log_binomial(17, 0) == 0.0
    with pytest.raises(ValueError):
        log_binomial(5, 6)
    with pytest.raises(ValueError):
        log_binomial(5, -1)


@pytest.mark.parametrize("n,k", [(10000, 700), (10**6, 3), (10**9, 1), (10**9, 70_000_000), (60, 30)])
def test_log_binomial_exact_bigint(n, k):
    # exact integer for moderate n; mpmath binomial (exact-rounded) beyond
    if n <= 10**6:
        ref = float(mpmath.log(mpmath.mpf(math.comb(n, k))))
    else:
        with mpmath.workdps(40):
            ref = float(mpmath.log(mpmath.binomial(n, k)))
    assert log_binomial(n, k) == pytest.approx(ref, rel=1e-10)
