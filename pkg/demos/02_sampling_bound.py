"""
How often does random sampling misjudge a string?
=================================================

A uniformly random m-subset of an N-symbol string is used to estimate the
fraction of non-zero symbols in the rest. We compare the exact failure
probability, a Monte Carlo estimate and the analytic tail bound.
"""

import numpy as np

from hdeur import sampling

rng = np.random.default_rng(1)

# A small string: every subset can be enumerated.
N, m, delta = 18, 6, 0.2
q = sampling.random_string_with_weight(N, 6, 4, rng)
exact = sampling.estimate_error_probability(q, delta, m, method="exhaustive")
mc = sampling.estimate_error_probability(q, delta, m, 100_000, rng, method="monte_carlo")
lo, hi = mc.ci
print(f"q = {''.join(map(str, q))}")
print(f"exact failure probability   {exact.estimate:.5f}  ({exact.trials} subsets)")
print(f"Monte Carlo (1e5 subsets)   {mc.estimate:.5f}  99% interval [{lo:.5f}, {hi:.5f}]")
print(f"analytic bound              {sampling.lemma2_bound(delta, m, N - m):.5f}\n")

# Larger strings: only the number of non-zeros matters, so scan weight classes
# and keep the worst one.
print(f"{'N':>5} {'m':>4} {'delta':>6} {'worst weight':>13} {'estimate':>10} {'bound':>10}")
for N in (100, 1000):
    m = int(0.25 * N)
    for delta in (0.1, 0.2):
        res = sampling.worst_case_error_estimate(2, m, N - m, delta, 100_000, rng)
        bound = sampling.lemma2_bound(delta, m, N - m)
        print(f"{N:>5} {m:>4} {delta:>6} {res.worst_weight:>13} {res.estimate:>10.5f} {bound:>10.5f}")

# The tolerance that makes the bound equal eps^2 at protocol scale.
p = sampling.SamplingParams(4, 700_000, 9_300_000, 1e-36)
eps_smooth, eps_fail = p.epsilons
print(f"\nN=1e7, m=7e5, eps=1e-36: delta = {p.delta:.5f}, eps' = {eps_smooth:.2e}, eps'' = {eps_fail:.2e}")
