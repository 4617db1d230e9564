import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdeur.qsim import computational_basis, fourier_basis, random_basis
from hdeur.rates import (RATE_PANELS, ProtocolParams, delta_prime, depolarizing_observables,
                         ell_one, ell_ours, ell_two, evaluate, gamma_fn, gamma_overlap,
                         has_crossover_ordering, leaders, log2_gamma_fn, log_spaced_N, sweep)


def ell_ours_script(d, N, f, eps, w):
    # standalone closed-form evaluation in mpmath
    mpmath.mp.dps = 40
    m = math.floor(f * N + 0.5)
    n = N - m
    eps = mpmath.mpf(eps)
    delta = mpmath.sqrt((m + n + 2) * mpmath.log(2 / eps**2) / (m * (m + n)))
    x = w + delta
    if x <= 0:
        H = 0
    elif x > 1 - mpmath.mpf(1) / d:
        H = 1
    else:
        H = (x * mpmath.log(d - 1) - x * mpmath.log(x) - (1 - x) * mpmath.log(1 - x)) / mpmath.log(d)
    return float(n * (mpmath.log(d, 2) - H / mpmath.log(2, d)) - 2 * mpmath.log(1 / eps, 2))


def ell_one_direct_gamma(d, m, n, counts):
    mpmath.mp.dps = 40
    B = mpmath.gamma(m + d) / mpmath.gamma(m + d + mpmath.mpf(1) / 2) * sum(
        mpmath.gamma(mpmath.mpf(c) + mpmath.mpf(3) / 2) / mpmath.gamma(mpmath.mpf(c) + 1) for c in counts)
    return float(n * (mpmath.log(d, 2) - 2 * mpmath.log(B, 2)))


def gamma_fn_direct(x):
    mpmath.mp.dps = 40
    x = mpmath.mpf(x)
    s = mpmath.sqrt(1 + x * x)
    return float((x + s) * (x / (s - 1)) ** x)


def test_protocol_rounding():
    p = ProtocolParams(4, 1000)
    assert (p.m, p.n) == (70, 930)
    assert ProtocolParams(4, 50, sample_fraction=0.07).m == 4  # 3.5 rounds up
    with pytest.raises(ValueError):
        ProtocolParams(4, 2, sample_fraction=0.49)


def test_gamma_overlap_examples():
    assert gamma_overlap(computational_basis(3), computational_basis(3)) == pytest.approx(0, abs=1e-12)
    for d in (2, 3, 4, 8, 17):
        assert gamma_overlap(computational_basis(d), fourier_basis(d)) == pytest.approx(math.log2(d), abs=1e-12)


def test_gamma_overlap_exhaustive(rng):
    Z, X = random_basis(3, rng), random_basis(3, rng)
    best = 0.0
    for a in range(3):
        for b in range(3):
            best = max(best, abs(np.vdot(Z[a], X[b])) ** 2)
    assert gamma_overlap(Z, X) == pytest.approx(-math.log2(best), rel=1e-12)


def test_gamma_overlap_errors():
    with pytest.raises(ValueError):
        gamma_overlap(np.eye(2), np.eye(3))
    with pytest.raises(ValueError):
        gamma_overlap(np.eye(2), np.array([[1, 1], [0, 1]]))


def test_ell_ours_noiseless_large_N():
    p = ProtocolParams(4, 10**12)
    val = ell_ours(p, 0.0)
    assert val < p.n * 2 - 2 * math.log2(1e36)
    assert val / p.N == pytest.approx(0.93 * 2, rel=2e-3)


def test_ell_ours_saturated_is_zero():
    p = ProtocolParams(4, 1000)
    assert p.delta > 0.75
    assert ell_ours(p, 0.1) == 0.0


def test_ell_ours_reference_point():
    p = ProtocolParams(4, 10**7)
    rate = ell_ours(p, 0.02) / p.N
    assert rate == pytest.approx(1.60, abs=0.02)
    assert ell_ours(p, 0.02) == pytest.approx(ell_ours_script(4, 10**7, 0.07, 1e-36, 0.02), rel=1e-9)


@pytest.mark.parametrize("d,N,w", [(2, 5000, 0.01), (32, 10**6, 0.1), (1024, 10**9, 0.2), (3, 77777, 0.3)])
def test_ell_ours_matches_script(d, N, w):
    p = ProtocolParams(d, N)
    assert ell_ours(p, w, clamp=False) == pytest.approx(ell_ours_script(d, N, 0.07, 1e-36, w), rel=1e-9, abs=1e-6)


def test_ell_one_small_m_direct_gamma():
    p = ProtocolParams(2, 143)
    assert p.m == 10
    val = ell_one(p, [9, 1], clamp=False)
    assert val == pytest.approx(ell_one_direct_gamma(2, 10, p.n, [9, 1]), rel=1e-9)


@pytest.mark.parametrize("d,N,x", [(4, 500, 0.02), (8, 1400, 0.1), (3, 1000, 0.0)])
def test_ell_one_real_counts_direct_gamma(d, N, x):
    p = ProtocolParams(d, N)
    obs = depolarizing_observables(x, d, p.m)
    assert ell_one(p, obs.counts, clamp=False) == pytest.approx(
        ell_one_direct_gamma(d, p.m, p.n, obs.counts), rel=1e-9)


def test_ell_one_noiseless_limit():
    p = ProtocolParams(4, 10**13)
    counts = [p.m, 0, 0, 0]
    assert ell_one(p, counts) / p.n == pytest.approx(2.0, abs=1e-5)
    smaller = ProtocolParams(4, 10**7)
    assert ell_one(smaller, [smaller.m, 0, 0, 0]) / smaller.n < ell_one(p, counts) / p.n


@pytest.mark.parametrize("N", [10**4, 10**6, 10**8])
def test_ell_one_maximal_noise_near_zero(N):
    # uniform counts put the bracket at about sqrt(d), so the rate collapses to ~0
    p = ProtocolParams(4, N)
    counts = [p.m / 4] * 4
    raw = ell_one(p, counts, clamp=False)
    # the result is a near-cancellation of n log2 d; compare on that scale
    assert raw == pytest.approx(ell_one_direct_gamma(4, p.m, p.n, counts), abs=1e-12 * 2 * p.n)
    assert abs(raw) / p.n < 0.01
    assert ell_one(p, counts) >= 0.0


def test_ell_one_clamp_and_validation():
    p = ProtocolParams(4, 10**4)
    counts = [0.0, p.m / 3, p.m / 3, p.m / 3]
    raw = ell_one(p, counts, clamp=False)
    assert raw == pytest.approx(ell_one_direct_gamma(4, p.m, p.n, counts), abs=1e-12 * 2 * p.n)
    assert ell_one(p, counts) == max(0.0, raw)
    with pytest.raises(ValueError):
        ell_one(p, [-1, p.m + 1, 0, 0])
    with pytest.raises(ValueError):
        ell_one(p, [p.m, 1, 0, 0])
    with pytest.raises(ValueError):
        ell_one(p, [p.m, 0, 0])


def test_gamma_fn_examples():
    assert gamma_fn(0) == 1.0
    assert gamma_fn(1) == pytest.approx((1 + math.sqrt(2)) ** 2, rel=1e-14)
    assert gamma_fn(0.1) == pytest.approx(gamma_fn_direct(0.1), rel=1e-13)
    with pytest.raises(ValueError):
        gamma_fn(-0.1)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(1e-8, 50))
def test_gamma_fn_high_precision(x):
    assert log2_gamma_fn(x) == pytest.approx(math.log2(gamma_fn_direct(x)), rel=1e-11, abs=1e-14)


def test_ell_two_examples():
    p = ProtocolParams(4, 10**7)
    dp = 4 * math.sqrt(p.N**2 / (p.n**2 * p.m) * math.log(4 / 4e-12))
    assert delta_prime(p) == pytest.approx(dp, rel=1e-14)
    ref = p.n * (2 - math.log2(gamma_fn_direct(0.02 + dp)))
    assert ell_two(p, 0.02) == pytest.approx(ref, rel=1e-9)


def test_ell_two_noiseless_small_penalty_limit():
    p = ProtocolParams(4, 10**7, eps_prime_ell2=0.999999)
    assert delta_prime(p) < 0.01
    assert ell_two(p, 0.0) <= p.n * 2
    assert ell_two(p, 0.0) > 0.95 * p.n * 2


def test_ell_two_monotone_in_delta_prime():
    vals = [ell_two(ProtocolParams(4, 10**7, eps_prime_ell2=e), 0.05) for e in (0.5, 1e-3, 1e-12, 1e-60)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_depolarizing_observables():
    obs = depolarizing_observables(0.0, 4, 700)
    assert obs.w_obs == 0 and obs.d0 == 0 and list(obs.counts) == [700, 0, 0, 0]
    obs = depolarizing_observables(0.02, 4, 700)
    assert obs.counts == pytest.approx([686, 14 / 3, 14 / 3, 14 / 3], rel=1e-14)
    for x in np.linspace(0, 1, 11):
        assert depolarizing_observables(x, 7, 1234).counts.sum() == pytest.approx(1234, rel=1e-12)


def test_sweep_consistency():
    tpl = ProtocolParams(4, 1000)
    (pt,) = sweep(tpl, 0.02, [10**6])
    p = ProtocolParams(4, 10**6)
    obs = depolarizing_observables(0.02, 4, p.m)
    assert pt.ell_ours == ell_ours(p, 0.02)
    assert pt.ell_1 == ell_one(p, obs.counts)
    assert pt.ell_2 == ell_two(p, 0.02)
    assert pt.rate_ours == pt.ell_ours / 10**6


def test_sweep_noiseless_large_N():
    (pt,) = sweep(ProtocolParams(4, 1000), 0.0, [10**15])
    assert pt.rate_ours == pytest.approx(0.93 * 2, rel=1e-4)


def test_sweep_flags_invalid_points():
    # m = round(0.49 * 30) = 15 = n, so the first point is invalid
    pts = sweep(ProtocolParams(4, 1000, sample_fraction=0.49), 0.02, [30, 1000])
    assert len(pts) == 2
    assert not pts[0].valid and pts[0].flags
    assert pts[0].ell_ours == pts[0].ell_1 == pts[0].ell_2 == 0.0
    assert pts[1].valid and (pts[1].m, pts[1].n) == (490, 510)
    with pytest.raises(ValueError):
        sweep(ProtocolParams(4, 1000), 0.02, [10])


def test_sweep_parallel_preserves_order():
    Ns = log_spaced_N(1e3, 1e9, 25)
    a = sweep(ProtocolParams(32, 1000), 0.1, Ns)
    b = sweep(ProtocolParams(32, 1000), 0.1, Ns, workers=4)
    assert [p.N for p in b] == Ns
    assert [p.rates for p in a] == [p.rates for p in b]


@settings(max_examples=100, deadline=None)
@given(d=st.sampled_from([2, 3, 4, 32, 1024]), logN=st.floats(2, 11), x=st.floats(0, 1))
def test_key_lengths_bounded(d, logN, x):
    p = ProtocolParams(d, int(10**logN))
    pt = evaluate(p, depolarizing_observables(x, d, p.m))
    cap = p.n * math.log2(d) * (1 + 1e-12)
    for v in (pt.ell_ours, pt.ell_1, pt.ell_2):
        assert 0 <= v <= cap
    for r in pt.rates:
        assert 0 <= r <= math.log2(d)


@pytest.mark.parametrize("d", [2, 4, 32])
def test_monotone_in_noise(d):
    p = ProtocolParams(d, 10**6)
    xs = np.linspace(0, 0.6, 61)
    ours = [ell_ours(p, x) for x in xs]
    two = [ell_two(p, x) for x in xs]
    assert all(b <= a for a, b in zip(ours, ours[1:]))
    assert all(b <= a for a, b in zip(two, two[1:]))


def test_monotone_in_N_after_threshold():
    Ns = log_spaced_N(1e3, 1e11, 120)
    vals = [ell_ours(ProtocolParams(4, N), 0.02) / N for N in Ns]
    positive = [v for v in vals if v > 0]
    assert positive and all(b >= a for a, b in zip(positive, positive[1:]))
    raw = [ell_ours(ProtocolParams(4, N), 0.02) for N in Ns]
    started = [v for v in raw if v > 0]
    assert all(b >= a for a, b in zip(started, started[1:]))


@settings(max_examples=200, deadline=None)
@given(x=st.floats(-0.5, 1.5), d=st.integers(2, 4096))
def test_base_conversion_identity(x, d):
    from hdeur.entmath import extended_dary_entropy
    h = extended_dary_entropy(x, d)
    assert h / math.log(2, d) == pytest.approx(h * math.log2(d), abs=1e-12)


def test_leaders_and_ordering_helpers():
    tpl = ProtocolParams(4, 1000)
    pts = sweep(tpl, 0.02, log_spaced_N(1e3, 1e11, 40))
    seq = leaders(pts)
    assert seq[0] == 1 and seq[-1] == 2 and 0 in seq
    assert has_crossover_ordering(pts)
    assert not has_crossover_ordering(pts[::-1])


def test_rate_panels_defined():
    assert set(RATE_PANELS) == {"upper_left", "upper_right", "lower_left", "lower_right"}
