"""The classical sampling strategy Phi(d, m, n) and its failure probability.

The strategy draws a uniform m-subset ``t`` of the N = m + n positions of a
string ``q`` and reports the relative weight of ``q_t`` as its guess for the
relative weight of the rest. It fails when the guess misses by more than
``delta``. Because ``t`` is uniform, the failure probability of a string only
depends on how many non-zero symbols it holds, which is what
:func:`worst_case_error_estimate` exploits.
"""

from dataclasses import dataclass
import itertools
import math
from typing import NamedTuple

import numpy as np
from scipy import stats

from .entmath import as_dstring, log_binomial, relative_weight

# two-sided 99% normal quantile
Z99 = 2.5758293035489004
EXHAUSTIVE_LIMIT = 10**6
_CHUNK = 1 << 14
# slack absorbing float round-off in |w(q_t) - w(q_-t)| <= delta
_WEIGHT_TOL = 1e-12


def make_rng(rng=None):
    """Return a numpy Generator (PCG64, 128-bit state) from a seed, Generator or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class SamplingParams:
    """Parameters (d, m, n, epsilon, beta) of the sampling-based bound."""

    d: int
    m: int
    n: int
    epsilon: float
    beta: float = 1.0 / 3.0

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be at least 2")
        if self.m < 1:
            raise ValueError("sample size m must be at least 1")
        if not self.m < self.n:
            raise ValueError(f"need m < n, got m={self.m}, n={self.n}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0.0 < self.beta < 0.5:
            raise ValueError("beta must lie in (0, 1/2)")

    @property
    def N(self):
        return self.m + self.n

    @property
    def delta(self):
        return delta_from_epsilon(self)

    @property
    def epsilons(self):
        return theorem1_epsilons(self.epsilon, self.beta)


@dataclass(frozen=True)
class SubsetIndex:
    """Sorted, distinct 0-based positions of an m-subset of ``range(N)``."""

    indices: tuple
    N: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("subset indices must be strictly increasing")
        if idx and (idx[0] < 0 or idx[-1] >= self.N):
            raise ValueError("subset index out of range")
        object.__setattr__(self, "indices", idx)

    @property
    def m(self):
        return len(self.indices)

    def mask(self):
        out = np.zeros(self.N, dtype=bool)
        out[list(self.indices)] = True
        return out

    def complement(self):
        chosen = set(self.indices)
        return tuple(i for i in range(self.N) if i not in chosen)


class ErrorEstimate(NamedTuple):
    estimate: float
    ci_halfwidth: float
    trials: int
    failures: int
    exact: bool = False

    @property
    def stderr(self):
        if self.exact or self.trials == 0:
            return 0.0
        p = self.estimate
        return math.sqrt(p * (1.0 - p) / self.trials)

    @property
    def ci(self):
        """99% Wilson interval ``(lo, hi)``; a point for exact results."""
        if self.exact:
            return self.estimate, self.estimate
        return wilson_interval(self.estimate, self.trials)


class WorstCase(NamedTuple):
    worst_weight: int
    estimate: float
    ci_halfwidth: float
    stderr: float
    trials: int


def delta_from_epsilon(p):
    """Sampling tolerance delta that makes the sampling tail bound equal ``epsilon**2``."""
    m, n, eps = p.m, p.n, p.epsilon
    # ln(2/eps^2) written to survive eps = 1e-200
    log_term = math.log(2.0) - 2.0 * math.log(eps)
    return math.sqrt((m + n + 2) * log_term / (m * (m + n)))


def lemma2_bound(delta, m, n):
    """Upper bound ``min(1, 2 exp(-delta^2 m (n+m) / (m+n+2)))`` on the error probability."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not m < n:
        raise ValueError(f"need m < n, got m={m}, n={n}")
    return min(1.0, 2.0 * math.exp(-delta * delta * m * (n + m) / (m + n + 2)))


def theorem1_epsilons(epsilon, beta):
    """Return ``(4 eps + 2 eps^beta, 2 eps^(1-2 beta))``: smoothing and failure parameters."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if not 0.0 < beta < 0.5:
        raise ValueError("beta must lie in (0, 1/2)")
    return 4.0 * epsilon + 2.0 * epsilon**beta, 2.0 * epsilon ** (1.0 - 2.0 * beta)


def pa_epsilon(epsilon, beta):
    """Distance from uniform quoted for the QRNG output, ``9 eps + 4 eps^beta``.

    This is the composed privacy-amplification constant used when evaluating
    the QRNG; it is roughly twice the smoothing parameter of the bound.
    """
    return 9.0 * epsilon + 4.0 * epsilon**beta


def sample_subset(N, m, rng=None):
    """Draw a uniformly random m-subset of ``range(N)``."""
    if not 1 <= m < N:
        raise ValueError(f"need 1 <= m < N, got m={m}, N={N}")
    rng = make_rng(rng)
    idx = rng.choice(N, size=m, replace=False)
    return SubsetIndex(tuple(np.sort(idx)), N)


def in_B_set(q, t, delta):
    """True iff the sampled and unsampled relative weights of ``q`` differ by at most ``delta``."""
    q = np.asarray(q)
    if q.size != t.N:
        raise ValueError(f"string length {q.size} does not match subset universe {t.N}")
    mask = t.mask()
    gap = abs(relative_weight(q[mask]) - relative_weight(q[~mask]))
    return gap <= delta + _WEIGHT_TOL


def _fails(sample_weight, total_weight, m, n, delta):
    # sample_weight may be an array of non-zero counts inside the sample
    gap = np.abs(sample_weight / m - (total_weight - sample_weight) / n)
    return gap > delta + _WEIGHT_TOL


def wilson_halfwidth(p, trials, z=Z99):
    """Half-width of the Wilson score interval at quantile ``z``."""
    z2 = z * z
    return z / (1.0 + z2 / trials) * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials))


def wilson_interval(p, trials, z=Z99):
    """Wilson score interval ``(lo, hi)``; its centre is shrunk towards 1/2, not ``p``."""
    z2 = z * z
    centre = (p + z2 / (2.0 * trials)) / (1.0 + z2 / trials)
    half = wilson_halfwidth(p, trials, z)
    return max(0.0, centre - half), min(1.0, centre + half)


def _chunk_sizes(trials):
    full, rest = divmod(trials, _CHUNK)
    return [_CHUNK] * full + ([rest] if rest else [])


def _spawn(rng, count):
    return make_rng(rng).spawn(count)


def _map(fn, jobs, workers):
    if workers is None or workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def _subset_failures(nz, m, delta, size, gen):
    # nz: boolean non-zero mask of q. Uniform subsets via argpartition of uniforms.
    N = nz.size
    n = N - m
    total = int(nz.sum())
    keys = gen.random((size, N))
    picks = np.argpartition(keys, m - 1, axis=1)[:, :m]
    k = nz[picks].sum(axis=1)
    return int(_fails(k, total, m, n, delta).sum())


def exhaustive_error_probability(q, delta, m):
    """Exact failure probability by enumerating every m-subset (small N only)."""
    q = np.asarray(q)
    N = q.size
    if not 1 <= m < N:
        raise ValueError(f"need 1 <= m < N, got m={m}, N={N}")
    if math.comb(N, m) > EXHAUSTIVE_LIMIT:
        raise ValueError(f"C({N},{m}) exceeds the exhaustive enumeration limit")
    nz = (q != 0).astype(np.int64)
    total = int(nz.sum())
    n = N - m
    fails = 0
    count = 0
    combos = itertools.combinations(range(N), m)
    while True:
        batch = np.array(list(itertools.islice(combos, 1 << 16)), dtype=np.intp)
        if batch.size == 0:
            break
        k = nz[batch].sum(axis=1)
        fails += int(_fails(k, total, m, n, delta).sum())
        count += len(batch)
    return fails / count


def estimate_error_probability(q, delta, m, trials=100_000, rng=None, method="auto", workers=1):
    """Probability over a uniform m-subset that ``q`` falls outside the delta-good set.

    ``method`` is ``"auto"`` (exhaustive when C(N, m) <= 1e6, Monte Carlo
    otherwise), ``"exhaustive"`` or ``"monte_carlo"``. Monte Carlo trials
    are split into fixed-size chunks with seeds spawned from ``rng``, so the
    pooled result does not depend on ``workers``. The returned half-width is
    a 99% Wilson interval (zero for exact results).
    """
    q = np.asarray(q)
    N = q.size
    if not 1 <= m < N:
        raise ValueError(f"need 1 <= m < N, got m={m}, N={N}")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if method == "auto":
        exhaustive = log_binomial(N, m) <= math.log(EXHAUSTIVE_LIMIT)
        method = "exhaustive" if exhaustive else "monte_carlo"
    if method == "exhaustive":
        p = exhaustive_error_probability(q, delta, m)
        return ErrorEstimate(p, 0.0, math.comb(N, m), round(p * math.comb(N, m)), True)
    if method != "monte_carlo":
        raise ValueError(f"unknown method {method!r}")
    if trials < 1000:
        raise ValueError("Monte Carlo estimation needs at least 1000 trials")

    nz = q != 0
    sizes = _chunk_sizes(trials)
    gens = _spawn(rng, len(sizes))
    fails = sum(_map(lambda s, g: _subset_failures(nz, m, delta, s, g), list(zip(sizes, gens)), workers))
    p = fails / trials
    return ErrorEstimate(p, wilson_halfwidth(p, trials), trials, fails)


def exact_weight_class_error(N, weight, m, delta):
    """Exact failure probability of any string with ``weight`` non-zeros (hypergeometric law)."""
    n = N - m
    k = np.arange(max(0, weight - n), min(m, weight) + 1)
    pmf = stats.hypergeom.pmf(k, N, weight, m)
    return float(pmf[_fails(k, weight, m, n, delta)].sum())


def _weight_class_failures(N, weight, m, delta, trials, gen):
    # Number of non-zeros landing in a uniform m-subset is hypergeometric;
    # drawing it directly is the same experiment as drawing the subset.
    n = N - m
    if weight == 0 or weight == N:
        return 0
    fails = 0
    for size in _chunk_sizes(trials):
        k = gen.hypergeometric(weight, N - weight, m, size=size)
        fails += int(_fails(k, weight, m, n, delta).sum())
    return fails


def weight_classes(N, full_scan_limit=200, strata=50):
    """Coarse weight grid: every class when N is small, every ceil(N/strata)-th otherwise."""
    if N <= full_scan_limit:
        return list(range(N + 1))
    step = math.ceil(N / strata)
    grid = list(range(0, N + 1, step))
    if grid[-1] != N:
        grid.append(N)
    return grid


def worst_case_error_estimate(d, m, n, delta, trials=100_000, rng=None, workers=1, weights=None):
    """Monte Carlo estimate of the max over strings of the failure probability.

    Scans Hamming-weight classes (all of them for N <= 200, otherwise a
    stride of ceil(N/50) followed by a full scan of the neighbourhood of the
    coarse maximum). ``d`` only enters through the weight: any string of a
    given weight is equivalent. Pass ``weights`` to restrict the scan.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    N = m + n
    gen = make_rng(rng)

    def scan(ws):
        ws = [w for w in ws if w not in results]
        gens = gen.spawn(len(ws))
        jobs = [(N, w, m, delta, trials, g) for w, g in zip(ws, gens)]
        for w, f in zip(ws, _map(_weight_class_failures, jobs, workers)):
            results[w] = f

    results = {}
    if weights is not None:
        scan(sorted(set(int(w) for w in weights)))
    else:
        coarse = weight_classes(N)
        scan(coarse)
        if len(coarse) < N + 1:
            step = coarse[1] - coarse[0]
            top = max(results, key=lambda w: (results[w], -w))
            scan(range(max(0, top - step), min(N, top + step) + 1))

    worst = max(results, key=lambda w: (results[w], -w))
    p = results[worst] / trials
    return WorstCase(worst, p, wilson_halfwidth(p, trials), math.sqrt(p * (1 - p) / trials), trials)


def random_string_with_weight(N, weight, d, rng=None):
    """A d-ary string of length N with exactly ``weight`` non-zero symbols at random positions."""
    gen = make_rng(rng)
    q = np.zeros(N, dtype=np.int64)
    pos = gen.choice(N, size=weight, replace=False)
    q[pos] = gen.integers(1, d, size=weight)
    return as_dstring(q, d)
