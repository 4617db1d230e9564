"""Dense statevector simulator for the sample-then-measure experiment.

A state on k qudits of dimension d is stored as a complex array of length
d**k in row-major order (site 0 is the most significant index). The
experiment picks a uniform m-subset of sites, applies the two-outcome POVM
{|x0><x0|, I - |x0><x0|} to each of them in ascending order, and returns
the outcomes together with the unmeasured remainder.

Side information is restricted to nothing or a small classical register, so
every min-entropy here is an exact enumeration. Smoothing is never
computed: the non-smoothed entropy lower-bounds the smoothed one, which keeps
the bound checks one-sided but sound.
"""

from dataclasses import dataclass
import math

import numpy as np

from .entmath import extended_dary_entropy, relative_weight
from .rates import gamma_overlap
from .sampling import SamplingParams, SubsetIndex, make_rng, sample_subset

MAX_AMPLITUDES = 2**24
NORM_TOL = 1e-9


class ResourceError(RuntimeError):
    """Raised when a dense state would exceed the amplitude budget."""


def _guard(d, k):
    if d**k > MAX_AMPLITUDES:
        raise ResourceError(f"{d}^{k} amplitudes exceed the 2^24 limit")


@dataclass(frozen=True)
class Basis:
    """Orthonormal basis of C^d; column j is the j-th basis vector."""

    vectors: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.vectors, dtype=complex)
        if V.ndim != 2 or V.shape[0] != V.shape[1]:
            raise ValueError("basis matrix must be square")
        if not np.allclose(V.conj().T @ V, np.eye(V.shape[0]), atol=NORM_TOL, rtol=0):
            raise ValueError("basis vectors are not orthonormal")
        object.__setattr__(self, "vectors", V)

    @property
    def d(self):
        return self.vectors.shape[0]

    def __getitem__(self, j):
        return self.vectors[:, j]


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray
    d: int
    k: int

    def __post_init__(self):
        _guard(self.d, self.k)
        psi = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if psi.size != self.d**self.k:
            raise ValueError(f"expected {self.d}^{self.k} amplitudes, got {psi.size}")
        if abs(np.linalg.norm(psi) - 1.0) > NORM_TOL:
            raise ValueError("state is not normalised")
        object.__setattr__(self, "amplitudes", psi)

    def tensor(self):
        return self.amplitudes.reshape((self.d,) * self.k)


def computational_basis(d):
    return Basis(np.eye(d, dtype=complex))


def fourier_basis(d):
    """Columns ``omega^(a b) / sqrt(d)`` with ``omega = exp(2 pi i / d)``."""
    if d < 2:
        raise ValueError("d must be at least 2")
    a = np.arange(d)
    return Basis(np.exp(2j * np.pi * np.outer(a, a) / d) / math.sqrt(d))


def product_state(vectors):
    """Tensor product of single-site vectors (all of the same dimension)."""
    vectors = [np.asarray(v, dtype=complex) for v in vectors]
    d = vectors[0].size
    _guard(d, len(vectors))
    psi = np.ones(1, dtype=complex)
    for v in vectors:
        psi = np.kron(psi, v / np.linalg.norm(v))
    return PureState(psi, d, len(vectors))


def honest_state(d, k):
    """``|x_0>^{(x) k}`` with ``x_0`` the first Fourier vector (uniform amplitudes)."""
    _guard(d, k)
    return PureState(np.full(d**k, d ** (-k / 2), dtype=complex), d, k)


def random_state(d, k, rng=None):
    """Haar-random pure state on k qudits."""
    _guard(d, k)
    gen = make_rng(rng)
    psi = gen.normal(size=d**k) + 1j * gen.normal(size=d**k)
    return PureState(psi / np.linalg.norm(psi), d, k)


def random_basis(d, rng=None):
    """Haar-random orthonormal basis via QR with phase fix."""
    gen = make_rng(rng)
    A = gen.normal(size=(d, d)) + 1j * gen.normal(size=(d, d))
    Q, R = np.linalg.qr(A)
    return Basis(Q * (np.diag(R) / np.abs(np.diag(R))))


@dataclass
class ExperimentOutcome:
    """Result of one run: sampled sites, POVM outcomes and the remaining system.

    The remainder is held as a purification: ``joint`` has shape
    ``(d**n, d**m)`` with rows indexed by the unmeasured sites and columns by
    the measured ones (which play the role of a traced-out environment).
    """

    t: SubsetIndex
    q: np.ndarray
    joint: np.ndarray
    d: int
    prob: float

    @property
    def n(self):
        return self.t.N - self.t.m

    @property
    def is_pure(self):
        s = np.linalg.svd(self.joint, compute_uv=False)
        return bool(s.size < 2 or s[1] < 1e-9 * s[0])

    @property
    def post_state(self):
        """The unmeasured sites as a :class:`PureState` (raises if they are mixed)."""
        U, s, _ = np.linalg.svd(self.joint, full_matrices=False)
        if s.size > 1 and s[1] > 1e-9 * s[0]:
            raise ValueError("post-measurement state is mixed; use distribution()")
        return PureState(U[:, 0], self.d, self.n)

    def distribution(self, basis):
        """Outcome distribution of measuring every unmeasured site in ``basis``."""
        return measured_distribution(self.joint, self.d, self.n, basis)

    def density_matrix(self):
        return self.joint @ self.joint.conj().T


def _apply_site(tensor, op, site):
    # contract op (d x d) into axis `site` of tensor
    out = np.tensordot(op, tensor, axes=([1], [site]))
    return np.moveaxis(out, 0, site)


def measured_distribution(amplitudes, d, k, basis):
    """Born distribution over d**k outcomes when each of the first k sites is measured in ``basis``.

    ``amplitudes`` may carry an extra trailing purifying axis (shape
    ``(d**k, r)``), whose probabilities are summed out.
    """
    _guard(d, k)
    B = np.asarray(getattr(basis, "vectors", basis))
    psi = np.asarray(amplitudes, dtype=complex).reshape((d,) * k + (-1,))
    adj = B.conj().T
    for site in range(k):
        psi = _apply_site(psi, adj, site)
    probs = np.sum(np.abs(psi.reshape(d**k, -1)) ** 2, axis=1)
    return probs


def run_experiment(state, m, x0=None, rng=None, t=None):
    """Sample m sites uniformly and measure each with {|x0><x0|, I - |x0><x0|}.

    Sites are measured one at a time in ascending order with Born-rule
    sampling and renormalisation after every outcome. Passing ``t`` fixes
    the subset instead of drawing it.
    """
    d, k = state.d, state.k
    if not 1 <= m < k:
        raise ValueError(f"need 1 <= m < k, got m={m}, k={k}")
    gen = make_rng(rng)
    if x0 is None:
        x0 = np.full(d, d**-0.5, dtype=complex)
    x0 = np.asarray(x0, dtype=complex)
    x0 = x0 / np.linalg.norm(x0)
    x0c = x0.conj()

    if t is None:
        t = sample_subset(k, m, gen)
    elif t.N != k or t.m != m:
        raise ValueError("fixed subset does not match the state")
    psi = state.amplitudes.copy()
    q = np.zeros(m, dtype=np.int8)
    prob = 1.0
    for j, site in enumerate(t.indices):
        # view the measured site as the middle axis; Lambda_0 is rank one
        view = psi.reshape(d**site, d, -1)
        c = np.einsum("j,ajb->ab", x0c, view)
        branch0 = x0[None, :, None] * c[:, None, :]
        p0 = min(max(float(np.vdot(c, c).real), 0.0), 1.0)
        if gen.random() < p0:
            outcome, new, p = 0, branch0, p0
        else:
            outcome, new, p = 1, view - branch0, 1.0 - p0
        psi = new.reshape(-1) / math.sqrt(p)
        q[j] = outcome
        prob *= p
    psi = psi.reshape((d,) * k)
    kept = t.complement()
    joint = np.transpose(psi, kept + t.indices).reshape(d ** len(kept), d**m)
    return ExperimentOutcome(t, q, joint, d, prob)


def path_probability(state, t, q, x0=None):
    """Probability ``||(Lambda_q on t) psi||^2`` of outcome ``q`` given subset ``t``."""
    d = state.d
    x0 = fourier_basis(d)[0] if x0 is None else np.asarray(x0, dtype=complex)
    proj0 = np.outer(x0, x0.conj())
    projectors = (proj0, np.eye(d) - proj0)
    psi = state.tensor()
    for site, outcome in zip(t.indices, q):
        psi = _apply_site(psi, projectors[int(outcome)], site)
    return float(np.vdot(psi, psi).real)


def min_entropy_classical(dist, tol=1e-9):
    """``-log2 max_x p_x`` of a probability vector."""
    p = np.asarray(dist, dtype=float).reshape(-1)
    if p.size == 0 or np.any(p < -tol) or abs(p.sum() - 1.0) > tol:
        raise ValueError("not a probability distribution")
    return float(-math.log2(p.max()))


def min_entropy_measured(state, basis):
    """Min-entropy of the outcome of measuring every site of ``state`` in ``basis``."""
    return min_entropy_classical(measured_distribution(state.amplitudes, state.d, state.k, basis))


def cq_min_entropy(joint):
    """Min-entropy ``H(A|C)`` of a classical joint distribution ``P[a, c]``.

    For classical C the operator definition
    ``sup_sigma max{lam : 2^-lam I (x) sigma_C >= rho_AC}`` is attained at
    ``sigma(c) ~ max_a P[a, c]``, giving ``-log2 sum_c max_a P[a, c]``.
    """
    P = np.asarray(joint, dtype=float)
    return float(-math.log2(np.sum(P.max(axis=0))))


def check_lemma1(weights, X, ancilla_states, tol=1e-9):
    """Both sides of the superposition-vs-mixture min-entropy inequality.

    Builds ``psi = sum_i alpha_i |i>|phi_i>`` on ``C^D (x) C^E`` and the
    mixture ``rho = sum_i |alpha_i|^2 |i><i| (x) |phi_i><phi_i|``, measures
    the first register in basis ``X`` and treats E as a classical register
    read out in its computational basis. Returns
    ``(H(X|E)_psi, H(X|E)_rho - log2 |J|)``.
    """
    alpha = np.asarray(weights, dtype=complex).reshape(-1)
    J = alpha.size
    if J > 64:
        raise ResourceError("index set larger than 64")
    if abs(np.linalg.norm(alpha) - 1.0) > tol:
        raise ValueError("amplitudes must be normalised")
    X = np.asarray(getattr(X, "vectors", X), dtype=complex)
    if X.shape[0] < J:
        raise ValueError("basis dimension smaller than the index set")
    phis = np.asarray(ancilla_states, dtype=complex)
    if phis.ndim == 1:
        phis = phis.reshape(J, -1)
    if phis.shape[0] != J or not np.allclose(np.linalg.norm(phis, axis=1), 1.0, atol=tol):
        raise ValueError("need one normalised ancilla state per index")
    # <x_b|i> for i in J (first J computational vectors)
    overlap = X.conj().T[:, :J]
    amp = np.einsum("bi,i,ie->be", overlap, alpha, phis)
    p_psi = np.abs(amp) ** 2
    p_rho = np.einsum("bi,i,ie->be", np.abs(overlap) ** 2, np.abs(alpha) ** 2, np.abs(phis) ** 2)
    return cq_min_entropy(p_psi), cq_min_entropy(p_rho) - math.log2(J)


def cl_ent_check(joint):
    """Both sides of ``H(A|C) >= min_c H(A | C = c)`` for a list of ``(p_c, dist_c)``."""
    if not joint:
        raise ValueError("empty joint distribution")
    pcs = np.array([float(pc) for pc, _ in joint])
    dists = [np.asarray(dist, dtype=float) for _, dist in joint]
    if np.any(pcs < 0) or abs(pcs.sum() - 1.0) > 1e-9:
        raise ValueError("p_c is not a distribution")
    rhs = min(min_entropy_classical(dist) for dist in dists)
    P = np.column_stack([pc * dist for pc, dist in zip(pcs, dists)])
    return cq_min_entropy(P), rhs


@dataclass
class BoundCheck:
    satisfaction_frequency: float
    trials: int
    eps_fail: float
    records: list
    label: str = "one-sided check: non-smoothed H_min lower-bounds the smoothed quantity"

    @property
    def passed(self):
        return self.satisfaction_frequency >= 1.0 - self.eps_fail


def entropy_bound(n, gamma, w_q, delta, d):
    """Lower bound ``n gamma - n Hbar_d(w(q) + delta) log2 d`` on the remainder's min-entropy."""
    return n * gamma - n * extended_dary_entropy(w_q + delta, d) * math.log2(d)


def check_theorem1(state, p, Z=None, X=None, trials=100, rng=None):
    """Run the experiment ``trials`` times and test the min-entropy bound on each outcome.

    Only trivial side information is supported. Each record is
    ``(w(q), bound, entropy)`` with the entropy of the (possibly mixed)
    remainder measured in ``Z``.
    """
    if not isinstance(p, SamplingParams):
        raise TypeError("p must be SamplingParams")
    if state.k != p.m + p.n or state.d != p.d:
        raise ValueError("state does not match the sampling parameters")
    Z = computational_basis(p.d) if Z is None else Z
    X = fourier_basis(p.d) if X is None else X
    gamma = gamma_overlap(Z, X)
    delta = p.delta
    _, eps_fail = p.epsilons
    gen = make_rng(rng)
    records = []
    hits = 0
    for _ in range(trials):
        out = run_experiment(state, p.m, X[0], gen)
        wq = relative_weight(out.q)
        bound = entropy_bound(p.n, gamma, wq, delta, p.d)
        dist = out.distribution(Z)
        h = min_entropy_classical(dist / dist.sum())
        hits += h >= bound - 1e-9
        records.append((wq, bound, h))
    return BoundCheck(hits / trials, trials, eps_fail, records)
