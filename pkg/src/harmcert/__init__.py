"""harmcert: harmonic inversion of short-time autocorrelation signals with
certainty bounds on the frequency-extraction error.

The library synthesizes K-phasor autocorrelation series, recovers mode
counts, frequencies, and amplitudes via a Prony-type generalized
eigenvalue method, and evaluates the upper bound on the frequency error
together with all of its ingredients (lambda_min, condition number,
effective frequency distance, Vandermonde Gram determinants), validated
by Monte Carlo experiments.
"""

from .bounds import (
    CertaintyBound,
    certainty_bound,
    condition_number,
    effective_delta,
    lambda_min_analytic,
    lambda_min_analytic_general,
    lambda_min_analytic_k2,
    lambda_min_char_poly_estimate,
    lambda_min_exact,
    lambda_min_exact_hp,
)
from .errors import AdmissibilityError, ConfigError, HarmcertError, InversionError
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    TrialRecord,
    run_analytic_vs_exact,
    run_bound_validation,
    run_experiment,
    run_lambda_scaling,
    run_two_level,
    run_vandermonde_check,
    trial_seed,
)
from .inversion import (
    HarmonicInversion,
    InversionConfig,
    InversionResult,
    detect_rank,
    extract_frequencies,
    harmonic_invert,
    recover_amplitudes,
    solve_reduced_eigenproblem,
    truncate_subspace,
)
from .matrices import (
    SpectralData,
    build_overlap,
    build_shifted,
    hermitian_spectrum,
    state_gram,
    state_matrix,
    vandermonde_gram_det_approx,
    vandermonde_gram_det_exact,
    vandermonde_matrix,
)
from .signals import (
    AutocorrSeries,
    FrequencyModel,
    NoiseSpec,
    SamplingGrid,
    apply_noise,
    synthesize_autocorrelation,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "AutocorrSeries",
    "CertaintyBound",
    "ConfigError",
    "ExperimentConfig",
    "ExperimentReport",
    "FrequencyModel",
    "HarmcertError",
    "HarmonicInversion",
    "InversionConfig",
    "InversionError",
    "InversionResult",
    "NoiseSpec",
    "SamplingGrid",
    "SpectralData",
    "TrialRecord",
    "apply_noise",
    "build_overlap",
    "build_shifted",
    "certainty_bound",
    "condition_number",
    "detect_rank",
    "effective_delta",
    "extract_frequencies",
    "harmonic_invert",
    "hermitian_spectrum",
    "lambda_min_analytic",
    "lambda_min_analytic_general",
    "lambda_min_analytic_k2",
    "lambda_min_char_poly_estimate",
    "lambda_min_exact",
    "lambda_min_exact_hp",
    "recover_amplitudes",
    "run_analytic_vs_exact",
    "run_bound_validation",
    "run_experiment",
    "run_lambda_scaling",
    "run_two_level",
    "run_vandermonde_check",
    "solve_reduced_eigenproblem",
    "state_gram",
    "state_matrix",
    "synthesize_autocorrelation",
    "trial_seed",
    "truncate_subspace",
    "vandermonde_gram_det_approx",
    "vandermonde_gram_det_exact",
    "vandermonde_matrix",
]
