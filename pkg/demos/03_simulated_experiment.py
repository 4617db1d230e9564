"""
Sampling a quantum source, then reading out the rest
====================================================

A few qubits are prepared, a random subset is tested against |x0>, and the
untested ones are measured in the computational basis. The entropy of that
readout is compared with the lower bound the test outcome certifies.
"""

import numpy as np

from hdeur import qsim, sampling

rng = np.random.default_rng(3)
p = sampling.SamplingParams(2, 3, 7, 1e-3)
Z, X = qsim.computational_basis(2), qsim.fourier_basis(2)

sources = {
    "honest |x0>^10": qsim.honest_state(2, 10),
    "orthogonal |x1>^10": qsim.product_state([X[1]] * 10),
    "Haar-random": qsim.random_state(2, 10, rng),
}

# One run in detail.
out = qsim.run_experiment(sources["Haar-random"], p.m, X[0], rng)
print(f"tested sites {out.t.indices}, outcomes {out.q.tolist()}, path probability {out.prob:.4f}")
print(f"remaining 7 qubits pure: {out.is_pure}; "
      f"H_min of Z readout = {qsim.min_entropy_classical(out.distribution(Z)):.3f} bits\n")

# Many runs per source. At this size delta is large, so the bound is loose.
print(f"delta = {p.delta:.3f}, failure probability allowed = {p.epsilons[1]:.3f}")
for name, state in sources.items():
    rep = qsim.check_theorem1(state, p, Z, X, trials=300, rng=rng)
    w, bound, h = np.array(rep.records).T
    print(f"{name:>20}: mean w(q) {w.mean():.3f}, bound max {bound.max():6.2f}, "
          f"entropy min {h.min():.3f}, satisfied {rep.satisfaction_frequency:.3f}")
print(f"({rep.label})\n")

# A superposition never has less entropy than the matching mixture, minus log2 |J|.
lhs, rhs = qsim.check_lemma1([2**-0.5] * 2, X, [[1.0], [1.0]])
print(f"|+> measured in the Hadamard basis: {lhs + 0.0:.3f} >= {rhs + 0.0:.3f}")
