"""Sampling-based min-entropy bounds and key-length analysis for a source-independent QRNG."""

from .entmath import (dary_entropy, extended_dary_entropy, log_binomial, log_gamma,
                      log_gamma_ratio, relative_weight)
from .extractor import ToeplitzSeed, extract, pa_distance_bound, toeplitz_hash
from .qsim import (Basis, ExperimentOutcome, PureState, check_lemma1, check_theorem1,
                   cl_ent_check, fourier_basis, honest_state, min_entropy_classical,
                   min_entropy_measured, run_experiment)
from .rates import (NoiseObservables, ProtocolParams, RatePoint, depolarizing_observables,
                    ell_one, ell_ours, ell_two, gamma_fn, gamma_overlap, sweep)
from .sampling import (SamplingParams, SubsetIndex, delta_from_epsilon,
                       estimate_error_probability, in_B_set, lemma2_bound, pa_epsilon,
                       sample_subset, theorem1_epsilons, worst_case_error_estimate)

__version__ = "0.1.0"
