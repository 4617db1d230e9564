"""Cross-module property checks, runnable outside pytest.

Each check takes a numpy Generator and returns ``(passed, detail)``. The
``verify`` command runs them in order and stops at the first failure;
``faults`` lets a caller swap in deliberately broken components to confirm
the checks can fail.
"""

import itertools
import math

import numpy as np

from . import entmath, extractor, qsim, rates, sampling


def _perturbed_fourier(d):
    B = np.array(qsim.fourier_basis(d).vectors)
    B[0, 0] += 1e-3
    return B


def check_dary_entropy(gen, faults):
    worst = 0.0
    for _ in range(2000):
        d = int(gen.choice([2, 3, 4, 16, 1024]))
        x, y, lam = gen.random(3)
        h = lambda v: entmath.dary_entropy(v, d)
        gap = lam * h(x) + (1 - lam) * h(y) - h(lam * x + (1 - lam) * y)
        worst = max(worst, gap)
        if not 0.0 <= h(x) <= 1.0 + 1e-15:
            return False, f"h_{d}({x}) out of [0,1]"
    return worst <= 1e-12, f"max concavity violation {worst:.2e}"


def check_extended_entropy(gen, faults):
    for d in (2, 3, 4, 32):
        xs = np.sort(gen.uniform(-0.5, 1.5, 500))
        vals = [entmath.extended_dary_entropy(x, d) for x in xs]
        cut = 1 - 1 / d
        for x0, x1, v0, v1 in zip(xs, xs[1:], vals, vals[1:]):
            if x1 <= cut and v1 < v0 - 1e-15:
                return False, f"not monotone at d={d}, x={x1}"
            if x0 > cut and v0 != 1.0:
                return False, f"not saturated at d={d}, x={x0}"
        jump0 = entmath.extended_dary_entropy(1e-15, d)
        jump1 = abs(entmath.extended_dary_entropy(cut, d) - 1.0)
        if jump0 > 1e-12 or jump1 > 1e-12:
            return False, f"discontinuity at d={d}"
    return True, "monotone, saturating, continuous"


def check_log_gamma(gen, faults):
    worst = 0.0
    for x in gen.uniform(0.5, 100.0, 500):
        lhs = math.exp(entmath.log_gamma(x + 1))
        rhs = x * math.exp(entmath.log_gamma(x))
        worst = max(worst, abs(lhs - rhs) / rhs)
    return worst <= 1e-10, f"recurrence rel. error {worst:.2e}"


def check_delta_roundtrip(gen, faults):
    worst = 0.0
    for _ in range(200):
        m = int(gen.integers(1, 10**6))
        n = m + int(gen.integers(1, 10**7))
        eps = 10.0 ** gen.uniform(-40, -1)
        p = sampling.SamplingParams(2, m, n, eps)
        b = sampling.lemma2_bound(p.delta, m, n)
        if b < 1.0:
            worst = max(worst, abs(b - eps * eps) / (eps * eps))
    return worst <= 1e-12, f"round-trip rel. error {worst:.2e}"


def check_weight_symmetry(gen, faults):
    N, m, delta, trials = 60, 15, 0.1, 20000
    for weight in (10, 30):
        a = sampling.random_string_with_weight(N, weight, 4, gen)
        b = sampling.random_string_with_weight(N, weight, 4, gen)
        ea = sampling.estimate_error_probability(a, delta, m, trials, gen, method="monte_carlo")
        eb = sampling.estimate_error_probability(b, delta, m, trials, gen, method="monte_carlo")
        if abs(ea.estimate - eb.estimate) > ea.ci_halfwidth + eb.ci_halfwidth:
            return False, f"weight {weight}: {ea.estimate} vs {eb.estimate}"
    return True, "equal-weight strings agree"


def check_sampling_soundness(gen, faults, trials=20000):
    for N in (100, 1000):
        for m in (round(0.07 * N), round(0.25 * N), math.floor(0.5 * (N - 1))):
            for delta in (0.05, 0.1, 0.2):
                res = sampling.worst_case_error_estimate(2, m, N - m, delta, trials, gen)
                excess = res.estimate - sampling.lemma2_bound(delta, m, N - m)
                if excess > 5 * res.stderr:
                    return False, f"N={N} m={m} delta={delta}: {res.estimate} above bound"
    return True, "Monte Carlo worst case within the bound"


def check_rate_bounds(gen, faults):
    for _ in range(200):
        d = int(gen.choice([2, 4, 32, 1024]))
        N = int(10 ** gen.uniform(2, 10))
        x = float(gen.uniform(0, 0.3))
        p = rates.ProtocolParams(d, N)
        pt = rates.evaluate(p, rates.depolarizing_observables(x, d, p.m))
        cap = p.n * math.log2(d) * (1 + 1e-12)
        for v in (pt.ell_ours, pt.ell_1, pt.ell_2):
            if not 0.0 <= v <= cap:
                return False, f"key length {v} outside [0, n log2 d] at d={d}, N={N}"
    return True, "0 <= ell <= n log2 d"


def check_rate_monotonicity(gen, faults):
    for d in (2, 4, 32):
        for N in (10**4, 10**6, 10**8):
            p = rates.ProtocolParams(d, N)
            xs = np.linspace(0, 0.5, 101)
            ours = [rates.ell_ours(p, x) for x in xs]
            two = [rates.ell_two(p, x) for x in xs]
            if any(b > a for a, b in zip(ours, ours[1:])):
                return False, f"ell_ours increases with weight at d={d}, N={N}"
            if any(b > a for a, b in zip(two, two[1:])):
                return False, f"ell_two increases with d0 at d={d}, N={N}"
        Ns = rates.log_spaced_N(1e3, 1e10, 80)
        vals = [rates.ell_ours(rates.ProtocolParams(d, N), 0.02) for N in Ns]
        started = [v for v in vals if v > 0]
        if any(b < a for a, b in zip(started, started[1:])):
            return False, f"ell_ours decreases in N at d={d}"
    return True, "monotone in noise and N"


def check_base_conversion(gen, faults):
    worst = 0.0
    for _ in range(500):
        d = int(gen.integers(2, 2000))
        x = float(gen.uniform(-0.1, 1.1))
        h = entmath.extended_dary_entropy(x, d)
        worst = max(worst, abs(h / math.log(2, d) - h * math.log2(d)))
    return worst <= 1e-12, f"max difference {worst:.2e}"


def check_fourier_unitarity(gen, faults):
    for d in (2, 3, 4, 7, 16, 64):
        F = _perturbed_fourier(d) if "fourier" in faults else qsim.fourier_basis(d).vectors
        err = np.max(np.abs(F.conj().T @ F - np.eye(d)))
        if err > 1e-12:
            return False, f"Fourier basis at d={d} off unitarity by {err:.1e}"
    return True, "Fourier bases unitary"


def check_experiment_paths(gen, faults):
    for d, k, m in ((2, 4, 1), (2, 5, 2), (3, 3, 1)):
        state = qsim.random_state(d, k, gen)
        total = 0.0
        subsets = list(itertools.combinations(range(k), m))
        for t in subsets:
            ti = sampling.SubsetIndex(t, k)
            for q in itertools.product((0, 1), repeat=m):
                total += qsim.path_probability(state, ti, q) / len(subsets)
        if abs(total - 1.0) > 1e-9:
            return False, f"path probabilities sum to {total} at d={d}, k={k}"
        for _ in range(20):
            out = qsim.run_experiment(state, m, rng=gen)
            if abs(np.linalg.norm(out.joint) - 1.0) > 1e-9:
                return False, "norm not preserved"
    return True, "normalised, path probabilities sum to 1"


def check_product_post_state(gen, faults):
    d, k, m = 3, 5, 2
    sites = [gen.normal(size=d) + 1j * gen.normal(size=d) for _ in range(k)]
    sites = [v / np.linalg.norm(v) for v in sites]
    state = qsim.product_state(sites)
    for _ in range(20):
        out = qsim.run_experiment(state, m, rng=gen)
        expected = qsim.product_state([sites[i] for i in out.t.complement()]).amplitudes
        fid = abs(np.vdot(expected, out.post_state.amplitudes)) ** 2
        if fid < 1 - 1e-9:
            return False, f"post-state fidelity {fid}"
    return True, "product inputs leave product remainders"


def check_superposition(gen, faults):
    for _ in range(300):
        J = int(gen.integers(1, 17))
        D = max(J, 2 ** math.ceil(math.log2(max(J, 2))))
        alpha = gen.normal(size=J) + 1j * gen.normal(size=J)
        alpha /= np.linalg.norm(alpha)
        e = int(gen.integers(1, 4))
        phis = gen.normal(size=(J, e)) + 1j * gen.normal(size=(J, e))
        phis /= np.linalg.norm(phis, axis=1, keepdims=True)
        lhs, rhs = qsim.check_lemma1(alpha, qsim.random_basis(D, gen), phis)
        if lhs < rhs - 1e-9:
            return False, f"lhs {lhs} < rhs {rhs}"
    return True, "superposition costs at most log2 |J|"


def check_cl_ent(gen, faults):
    for _ in range(300):
        C, A = int(gen.integers(1, 5)), int(gen.integers(2, 6))
        pcs = gen.dirichlet(np.ones(C))
        joint = [(pc, gen.dirichlet(np.ones(A))) for pc in pcs]
        lhs, rhs = qsim.cl_ent_check(joint)
        if lhs < rhs - 1e-9:
            return False, f"lhs {lhs} < rhs {rhs}"
    return True, "classical conditioning bound holds"


def check_entropy_bound(gen, faults):
    p = sampling.SamplingParams(2, 3, 5, 1e-3)
    for state in (qsim.honest_state(2, 8), qsim.random_state(2, 8, gen)):
        res = qsim.check_theorem1(state, p, trials=50, rng=gen)
        if not res.passed:
            return False, f"satisfaction {res.satisfaction_frequency}"
    return True, "bound satisfied (one-sided, non-smoothed)"


def check_extractor(gen, faults):
    n_in, ell = 8, 3
    seeds = [extractor.ToeplitzSeed(np.array(b, dtype=np.uint8), n_in, ell)
             for b in itertools.product((0, 1), repeat=n_in + ell - 1)]
    mats = np.array([s.matrix() for s in seeds], dtype=np.int64)
    xs = np.array(list(itertools.product((0, 1), repeat=n_in)), dtype=np.int64)
    # collision of x, y under T iff T (x xor y) = 0; checking every nonzero difference suffices
    zero = np.all((mats @ xs[1:].T) % 2 == 0, axis=1)
    worst = zero.mean(axis=0).max()
    if worst > 2.0**-ell + 1e-15:
        return False, f"collision probability {worst}"
    seed = extractor.ToeplitzSeed.random(64, 20, gen)
    for _ in range(500):
        x, y = gen.integers(0, 2, (2, 64))
        lhs = extractor.toeplitz_hash(x ^ y, seed)
        rhs = extractor.toeplitz_hash(x, seed) ^ extractor.toeplitz_hash(y, seed)
        if not np.array_equal(lhs, rhs):
            return False, "hash not linear"
    hs = np.linspace(0, 200, 50)
    vals = [extractor.pa_distance_bound(h, 40, 1e-6) for h in hs]
    if any(b > a for a, b in zip(vals, vals[1:])):
        return False, "PA bound not monotone in h_min"
    return True, f"max collision {worst:.4f} <= 2^-{ell}, linear"


CHECKS = [
    ("entmath.dary_entropy", check_dary_entropy),
    ("entmath.extended_entropy", check_extended_entropy),
    ("entmath.log_gamma", check_log_gamma),
    ("sampling.delta_roundtrip", check_delta_roundtrip),
    ("sampling.weight_symmetry", check_weight_symmetry),
    ("sampling.soundness", check_sampling_soundness),
    ("rates.bounds", check_rate_bounds),
    ("rates.monotonicity", check_rate_monotonicity),
    ("rates.base_conversion", check_base_conversion),
    ("qsim.fourier_unitarity", check_fourier_unitarity),
    ("qsim.experiment_paths", check_experiment_paths),
    ("qsim.product_post_state", check_product_post_state),
    ("qsim.superposition_bound", check_superposition),
    ("qsim.cl_ent", check_cl_ent),
    ("qsim.entropy_bound", check_entropy_bound),
    ("extractor.universality", check_extractor),
]


def run_invariants(seed=0, faults=(), stop_on_failure=True):
    """Run every check with a per-check Generator spawned from ``seed``.

    Returns a list of ``(name, passed, detail)``.
    """
    children = np.random.SeedSequence(seed).spawn(len(CHECKS))
    results = []
    for (name, check), child in zip(CHECKS, children):
        passed, detail = check(np.random.default_rng(child), set(faults))
        results.append((name, bool(passed), detail))
        if stop_on_failure and not passed:
            break
    return results
