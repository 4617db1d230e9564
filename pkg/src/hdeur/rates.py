"""Key-length formulas for the source-independent QRNG and two baselines.

Three finite-size key lengths are compared:

* ``ell_ours`` -- the sampling-based bound, driven by the relative weight of
  the two-outcome test string.
* ``ell_one`` -- a Bayesian max-entropy estimate built from full-basis test
  counts ``c_0, ..., c_{d-1}``.
* ``ell_two`` -- a max-entropy bound for entangled-pair sources driven by the
  mean test discrepancy ``d0``.

All logarithms are base 2 and results are in bits. Negative key lengths are
clamped to zero; the raw values are kept on :class:`RatePoint` for plotting.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np
from scipy.special import logsumexp

from .entmath import extended_dary_entropy, log_gamma_ratio
from .sampling import SamplingParams, delta_from_epsilon, pa_epsilon, theorem1_epsilons

LN2 = math.log(2.0)


@dataclass(frozen=True)
class ProtocolParams:
    d: int
    N: int
    sample_fraction: float = 0.07
    epsilon: float = 1e-36
    beta: float = 1.0 / 3.0
    eps_prime_ell2: float = 4e-12

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"d must be an integer >= 2, got {self.d}")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        if not 0.0 < self.sample_fraction < 0.5:
            raise ValueError("sample_fraction must lie in (0, 1/2)")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0.0 < self.beta < 0.5:
            raise ValueError("beta must lie in (0, 1/2)")
        if not 0.0 < self.eps_prime_ell2 < 1.0:
            raise ValueError("eps_prime_ell2 must lie in (0, 1)")
        if not self.m < self.n:
            raise ValueError(f"sample size m={self.m} must be smaller than n={self.n}")

    @property
    def m(self):
        # round half up, at least one test signal
        return max(1, math.floor(self.sample_fraction * self.N + 0.5))

    @property
    def n(self):
        return self.N - self.m

    @property
    def sampling(self):
        return SamplingParams(self.d, self.m, self.n, self.epsilon, self.beta)

    @property
    def delta(self):
        return delta_from_epsilon(self.sampling)

    @property
    def delta_prime(self):
        return delta_prime(self)

    def with_N(self, N):
        return replace(self, N=int(N))


@dataclass(frozen=True)
class NoiseObservables:
    w_obs: float
    counts: np.ndarray
    d0: float

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=float)
        object.__setattr__(self, "counts", counts)
        if not 0.0 <= self.w_obs <= 1.0:
            raise ValueError("w_obs must lie in [0, 1]")
        if np.any(counts < 0):
            raise ValueError("test counts must be non-negative")
        if not 0.0 <= self.d0 <= counts.size - 1:
            raise ValueError("d0 must lie in [0, d-1]")


@dataclass
class RatePoint:
    N: int
    m: int
    n: int
    delta: float
    delta_prime: float
    ell_ours: float
    ell_1: float
    ell_2: float
    raw_ours: float
    raw_1: float
    raw_2: float
    valid: bool = True
    flags: list = field(default_factory=list)

    @property
    def rate_ours(self):
        return self.ell_ours / self.N

    @property
    def rate_1(self):
        return self.ell_1 / self.N

    @property
    def rate_2(self):
        return self.ell_2 / self.N

    @property
    def rates(self):
        return self.rate_ours, self.rate_1, self.rate_2


def gamma_overlap(Z, X, tol=1e-9):
    """Overlap parameter ``-log2 max_{a,b} |<z_a|x_b>|^2`` of two bases given as column matrices."""
    Z = np.asarray(getattr(Z, "vectors", Z))
    X = np.asarray(getattr(X, "vectors", X))
    if Z.ndim != 2 or Z.shape[0] != Z.shape[1] or Z.shape != X.shape:
        raise ValueError(f"bases must be square and of equal size, got {Z.shape} and {X.shape}")
    eye = np.eye(Z.shape[0])
    for name, B in (("Z", Z), ("X", X)):
        if not np.allclose(B.conj().T @ B, eye, atol=tol, rtol=0):
            raise ValueError(f"basis {name} is not unitary")
    c = np.max(np.abs(Z.conj().T @ X) ** 2)
    return float(-math.log2(min(c, 1.0)))


def ell_ours(p, w_obs, clamp=True):
    r"""Extractable bits from the sampling-based bound at observed test weight ``w_obs``.

    ``n (log2 d - Hbar_d(w_obs + delta) log2 d) - 2 log2(1/eps)``; the
    extended entropy is normalised to base d, hence the ``log2 d`` factor.
    """
    log2d = math.log2(p.d)
    hbar = extended_dary_entropy(w_obs + p.delta, p.d)
    val = p.n * (log2d - hbar * log2d) + 2.0 * math.log2(p.epsilon)
    return max(0.0, val) if clamp else val


def log2_bracket_one(m, counts):
    """``log2`` of the Gamma-ratio bracket in the Bayesian key length."""
    counts = np.asarray(counts, dtype=float)
    if np.any(counts < 0):
        raise ValueError("test counts must be non-negative")
    d = counts.size
    terms = [log_gamma_ratio(c + 1.0, 0.5) for c in counts]
    return (logsumexp(terms) - log_gamma_ratio(m + d, 0.5)) / LN2


def ell_one(p, counts, clamp=True):
    """Bayesian-estimator key length from full-basis test counts ``c_i`` (reals allowed)."""
    counts = np.asarray(counts, dtype=float)
    if counts.size != p.d:
        raise ValueError(f"expected {p.d} counts, got {counts.size}")
    if abs(counts.sum() - p.m) > 1e-9 * max(1.0, p.m):
        raise ValueError(f"test counts must sum to m={p.m}")
    val = p.n * (math.log2(p.d) - 2.0 * log2_bracket_one(p.m, counts))
    return max(0.0, val) if clamp else val


def log2_gamma_fn(x):
    """``log2`` of ``(x + sqrt(1+x^2)) (x / (sqrt(1+x^2) - 1))^x``, equal to 0 at x = 0."""
    if x < 0:
        raise ValueError("gamma_fn is defined for x >= 0")
    if x == 0:
        return 0.0
    s = math.hypot(1.0, x)
    # x / (s - 1) == (s + 1) / x, without the cancellation in s - 1
    return (math.asinh(x) + x * math.log((s + 1.0) / x)) / LN2


def gamma_fn(x):
    """The max-entropy penalty function; ``gamma_fn(0) = 1`` by continuity."""
    return 2.0 ** log2_gamma_fn(x)


def delta_prime(p):
    """Statistical correction ``d sqrt(N^2 / (n^2 m) ln(4/eps'))`` used by ``ell_two``."""
    eps = p.eps_prime_ell2
    if not 0.0 < eps < 1.0:
        raise ValueError("eps_prime_ell2 must lie in (0, 1)")
    return p.d * math.sqrt(p.N**2 / (p.n**2 * p.m) * math.log(4.0 / eps))


def ell_two(p, d0, clamp=True):
    """Entangled-source key length ``n (log2 d - log2 gamma_fn(d0 + delta'))``.

    The penalty is charged per signal; see the README for why it is scaled
    by ``n``.
    """
    if d0 < 0:
        raise ValueError("d0 must be non-negative")
    val = p.n * (math.log2(p.d) - log2_gamma_fn(d0 + delta_prime(p)))
    return max(0.0, val) if clamp else val


def depolarizing_observables(x, d, m):
    """Test statistics a depolarizing channel of strength ``x`` produces (expected values)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("noise x must lie in [0, 1]")
    counts = np.full(d, m * x / (d - 1))
    counts[0] = m * (1.0 - x)
    return NoiseObservables(w_obs=x, counts=counts, d0=x)


def evaluate(p, obs):
    """All three key lengths at one parameter point."""
    raw = (ell_ours(p, obs.w_obs, clamp=False), ell_one(p, obs.counts, clamp=False),
           ell_two(p, obs.d0, clamp=False))
    return RatePoint(p.N, p.m, p.n, p.delta, delta_prime(p), *(max(0.0, v) for v in raw), *raw)


def _invalid_point(N, template, reason):
    m = max(1, math.floor(template.sample_fraction * N + 0.5))
    nan = math.nan
    return RatePoint(N, m, N - m, nan, nan, 0.0, 0.0, 0.0, nan, nan, nan, False, [reason])


def sweep_point(template, noise, N):
    try:
        p = template.with_N(N)
    except ValueError as exc:
        return _invalid_point(int(N), template, str(exc))
    point = evaluate(p, depolarizing_observables(noise, p.d, p.m))
    for name, raw in (("ours", point.raw_ours), ("l1", point.raw_1), ("l2", point.raw_2)):
        if raw < 0:
            point.flags.append(f"{name}_clamped")
    return point


def sweep(template, noise, N_list, workers=None):
    """Evaluate all three key lengths under depolarizing noise for every N in ``N_list``.

    Points where the sample would not be smaller than the remainder come
    back with ``valid=False`` rather than being dropped. Order follows
    ``N_list``.
    """
    N_list = [int(N) for N in N_list]
    if not N_list:
        raise ValueError("N_list must not be empty")
    if min(N_list) < 30:
        raise ValueError("every N must be at least 30")
    if workers and workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda N: sweep_point(template, noise, N), N_list))
    return [sweep_point(template, noise, N) for N in N_list]


def log_spaced_N(start, stop, points):
    """Distinct integers roughly log-spaced between ``start`` and ``stop``."""
    grid = np.unique(np.round(np.logspace(math.log10(start), math.log10(stop), points)).astype(np.int64))
    return [int(v) for v in grid]


LEADER_NAMES = ("ours", "ell_1", "ell_2")


def leaders(points):
    """Index of the strictly largest rate at each point, ``None`` on ties or all-zero."""
    out = []
    for pt in points:
        r = pt.rates
        best = max(r)
        if not pt.valid or best <= 0 or sum(v == best for v in r) > 1:
            out.append(None)
        else:
            out.append(r.index(best))
    return out


def has_crossover_ordering(points):
    """True when some N has ell_1 on top, a larger N has ours on top, and a larger one ell_2."""
    seq = leaders(points)
    want = [1, 0, 2]
    k = 0
    for lead in seq:
        if k < 3 and lead == want[k]:
            k += 1
    return k == 3


def security_constants(epsilon, beta):
    """Smoothing, failure and privacy-amplification parameters for reports."""
    eps_prime, eps_dprime = theorem1_epsilons(epsilon, beta)
    return {"eps_smooth": eps_prime, "eps_fail": eps_dprime, "eps_pa": pa_epsilon(epsilon, beta)}


# Rate-curve panels: (d, noise, N_start, N_stop). Each range brackets
# every change of the leading key length.
RATE_PANELS = {
    "upper_left": (4, 0.02, 1e3, 1e7),
    "upper_right": (4, 0.02, 1e3, 1e11),
    "lower_left": (2**5, 0.10, 1e3, 1e11),
    "lower_right": (2**10, 0.10, 1e3, 1e12),
}
