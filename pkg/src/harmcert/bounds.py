"""Frequency-error upper bounds and their ingredient quantities.

For a K-mode signal sampled N+1 times with noise ceiling eta_max, the
recovered frequencies obey (in the short-time regime)

    per step:   |w~_k - w_k| * delta_t <= kappa * K (N+1) * eta_max / lambda_min
    total time: |w~_k - w_k| * T       <= K N (N+1) sqrt(Tr S) / lambda_min^{3/2} * eta_max

where lambda_min is the smallest positive eigenvalue of the overlap matrix
and kappa = sqrt(lambda_1 / lambda_min) is the condition number of the
state matrix.  The total-time form equals N times the per-step form with
kappa replaced by its trace upper bound sqrt(Tr S / lambda_min).

lambda_min itself admits a closed-form short-time estimate; both the
eigensolve value and the analytic estimate are exposed, selectable as the
bound's lambda source.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import mpmath as mp
import numpy as np
from scipy.special import logsumexp

from .matrices import (
    _det_working_dps,
    _mp_state_gram,
    build_overlap,
    hermitian_spectrum,
    state_gram,
    state_gram_spectrum_mp,
)
from .signals import AutocorrSeries, FrequencyModel, SamplingGrid
from .validation import as_float_array, check_nonnegative

SHORT_TIME_ADVISORY = 0.1  # warn when T * delta_omega_max exceeds this

LAMBDA_SOURCES = ("exact", "analytic")


@dataclass(frozen=True)
class CertaintyBound:
    """All ingredients of the frequency-error bound for one configuration.

    ``bound_per_step`` bounds |w~ - w| * delta_t, ``bound_total`` bounds
    |w~ - w| * T.  ``admissible`` records whether the noise ceiling permits
    rank detection (eta_max < lambda_min / 2N).  ``lambda_min_analytic``
    and ``delta_eff`` are NaN when no ground-truth model is available
    (series input) or when K = 1 (no frequency gap).
    """

    k: int
    n_steps: int
    delta_t: float
    eta_max: float
    lambda_min_exact: float
    lambda_min_analytic: float
    lambda_1: float
    trace_s: float
    kappa: float
    kappa_upper: float
    delta_eff: float
    bound_per_step: float
    bound_total: float
    admissible: bool
    lambda_source: str

    def as_dict(self) -> dict:
        return asdict(self)


def condition_number(eigenvalues, k: int) -> tuple[float, float]:
    """(kappa, kappa_upper) from a descending eigenvalue array of S.

    kappa = sqrt(lambda_1 / lambda_K); kappa_upper replaces lambda_1 by the
    trace (the sum of the supplied eigenvalues).
    """
    w = as_float_array(eigenvalues, "eigenvalues")
    if not 1 <= k <= w.size:
        raise ValueError(f"k: must be in 1..{w.size}, got {k}")
    lam_min = w[k - 1]
    if lam_min <= 0:
        raise ValueError(f"eigenvalues: lambda_min must be positive, got {lam_min!r}")
    kappa = math.sqrt(w[0] / lam_min)
    kappa_upper = math.sqrt(w.sum() / lam_min)
    return kappa, kappa_upper


# ---------------------------------------------------------------------------
# lambda_min: closed forms, eigensolves, characteristic-polynomial estimate


def _check_short_time(model: FrequencyModel, grid: SamplingGrid) -> None:
    if model.k > 1 and grid.total_time * model.delta_omega_max > SHORT_TIME_ADVISORY:
        warnings.warn(
            f"T * delta_omega_max = {grid.total_time * model.delta_omega_max:.3g} "
            "exceeds the short-time regime; the analytic lambda_min estimate degrades",
            stacklevel=3,
        )


def _log_gap_sum(model: FrequencyModel) -> float:
    """log sum_k [d_k prod_{j != k} (omega_k - omega_j)^2]^(-1)."""
    omegas = model.omegas
    logs = np.empty(model.k)
    for k in range(model.k):
        term = math.log(model.amps[k])
        for j in range(model.k):
            if j != k:
                term += 2.0 * math.log(abs(omegas[k] - omegas[j]))
        logs[k] = -term
    return float(logsumexp(logs))


def _log_lambda_min_general(model: FrequencyModel, grid: SamplingGrid) -> float:
    n, k = grid.n_steps, model.k
    log_pref = (
        math.lgamma(n + k)
        - math.lgamma(n - k + 1)
        - math.log(2 * k - 1)
        + 2.0 * (math.lgamma(k) - math.lgamma(2 * k - 1))
    )
    return log_pref + 2 * (k - 1) * math.log(grid.delta_t) - _log_gap_sum(model)


def lambda_min_analytic_general(model: FrequencyModel, grid: SamplingGrid) -> float:
    """General-K short-time estimate of lambda_min,

        (N+K-1)! / ((N-K)! (2K-1)) * [(K-1)!/(2K-2)!]^2
            * delta_t^{2(K-1)} / sum_k [d_k prod_{j!=k} (w_k - w_j)^2]^(-1),

    evaluated in log space (log-gamma) so factorials and the delta_t power
    neither overflow nor underflow.
    """
    if model.k < 2:
        raise ValueError(f"omegas: general formula needs K >= 2, got K={model.k}")
    if grid.n_steps < model.k:
        raise ValueError(f"n_steps: need at least K={model.k} steps, got {grid.n_steps}")
    return math.exp(_log_lambda_min_general(model, grid))


def lambda_min_analytic_k2(model: FrequencyModel, grid: SamplingGrid) -> float:
    """Dedicated two-mode estimate (N - 1/N)/12 * (w1-w2)^2 / (1/d1 + 1/d2) * (N dt)^2."""
    if model.k != 2:
        raise ValueError(f"omegas: two-mode formula needs K = 2, got K={model.k}")
    n = grid.n_steps
    gap2 = (model.omegas[0] - model.omegas[1]) ** 2
    weight = 1.0 / (1.0 / model.amps[0] + 1.0 / model.amps[1])
    return (n - 1.0 / n) / 12.0 * gap2 * weight * grid.total_time**2


def lambda_min_analytic(model: FrequencyModel, grid: SamplingGrid) -> float:
    """Short-time analytic estimate of the smallest positive eigenvalue of S.

    Dispatches to the dedicated K=2 form (identical to the general formula
    at K=2), the general form for K > 2, and the trivial path
    lambda_min = Tr(S) = N d_1 for a single mode.  Warns outside the
    short-time regime.
    """
    if model.k == 1:
        return grid.n_steps * float(model.amps[0])
    if grid.n_steps < model.k:
        raise ValueError(f"n_steps: need at least K={model.k} steps, got {grid.n_steps}")
    _check_short_time(model, grid)
    if model.k == 2:
        return lambda_min_analytic_k2(model, grid)
    return lambda_min_analytic_general(model, grid)


def lambda_min_exact(model: FrequencyModel, grid: SamplingGrid) -> float:
    """Smallest positive eigenvalue of S via the K x K Gram P P^H (float64).

    Subject to the double-precision floor near lambda_min/Tr(S) ~ 1e-16;
    use :func:`lambda_min_exact_hp` below that.
    """
    if grid.n_steps < model.k:
        raise ValueError(f"n_steps: need at least K={model.k} steps, got {grid.n_steps}")
    return float(np.linalg.eigvalsh(state_gram(model, grid))[0])


def lambda_min_exact_hp(model: FrequencyModel, grid: SamplingGrid, dps: int | None = None) -> float:
    """High-precision eigensolve of lambda_min, unaffected by conditioning.

    The working precision defaults to enough digits to separate lambda_min
    (estimated from the analytic formula) from the trace, plus headroom.
    """
    if grid.n_steps < model.k:
        raise ValueError(f"n_steps: need at least K={model.k} steps, got {grid.n_steps}")
    if model.k == 1:
        return grid.n_steps * float(model.amps[0])
    if dps is None:
        log_est = _log_lambda_min_general(model, grid)
        trace = grid.n_steps * model.total_weight
        digits = (math.log(trace) - log_est) / math.log(10.0)
        dps = int(min(max(30, math.ceil(digits) + 25), 300))
    return float(state_gram_spectrum_mp(model, grid, dps=dps)[-1])


def lambda_min_char_poly_estimate(
    model: FrequencyModel, grid: SamplingGrid, dps: int | None = None
) -> float:
    """Characteristic-polynomial estimate -a0/a1 = det(PP^H) / sum_k Minor_kk(PP^H).

    Valid when lambda_min is far below the other eigenvalues (short-time
    regime).  Determinant and principal minors are evaluated from the
    explicit K x K matrix with mpmath; the cancellation involved puts them
    far below double precision in the regimes of interest.
    """
    if model.k < 2:
        raise ValueError(f"omegas: estimate needs K >= 2, got K={model.k}")
    if grid.n_steps < model.k:
        raise ValueError(f"n_steps: need at least K={model.k} steps, got {grid.n_steps}")
    if dps is None:
        dps = _det_working_dps(model.omegas, grid) + 10
    with mp.workdps(dps):
        gram = _mp_state_gram(model, grid)
        k = model.k
        a0 = mp.det(gram)
        minor_sum = mp.mpf(0)
        for drop in range(k):
            keep = [i for i in range(k) if i != drop]
            sub = mp.matrix(k - 1, k - 1)
            for i, ii in enumerate(keep):
                for j, jj in enumerate(keep):
                    sub[i, j] = gram[ii, jj]
            minor_sum += mp.re(mp.det(sub))
        if minor_sum <= 0:
            raise ValueError("minors: nonpositive minor sum, Gram matrix is singular")
        return float(mp.re(a0) / minor_sum)


# ---------------------------------------------------------------------------
# Effective frequency distance


def effective_delta(model: FrequencyModel) -> float:
    """Amplitude-weighted aggregate frequency gap that sets lambda_min's scale.

    K = 2: 1/Delta^2 = (1/2) / (d1 d2 (w1 - w2)^2).
    K > 2: 1/Delta^{2(K-1)} = (1/K) sum_k (sum d) / (d_k prod_{j!=k} (w_k - w_j)^2),
    evaluated in log space.
    """
    if model.k < 2:
        raise ValueError(f"omegas: effective distance needs K >= 2, got K={model.k}")
    if model.k == 2:
        d1, d2 = model.amps
        return math.sqrt(2.0 * d1 * d2) * abs(model.omegas[1] - model.omegas[0])
    log_inv = math.log(model.total_weight) - math.log(model.k) + _log_gap_sum(model)
    return math.exp(-log_inv / (2.0 * (model.k - 1)))


# ---------------------------------------------------------------------------
# The bound itself


def certainty_bound(
    source: FrequencyModel | AutocorrSeries,
    grid: SamplingGrid | None = None,
    *,
    eta_max: float,
    lambda_source: str = "exact",
    k: int | None = None,
) -> CertaintyBound:
    """Assemble the per-step and total-time frequency-error bounds.

    ``source`` may be a ground-truth model (with ``grid``) or a measured
    series; with a series the mode count is taken from ``k`` or detected
    from the spectrum at the given noise ceiling, and the analytic lambda
    and effective distance are unavailable (NaN).
    """
    eta_max = check_nonnegative(eta_max, "eta_max")
    if lambda_source not in LAMBDA_SOURCES:
        raise ValueError(f"lambda_source: must be one of {LAMBDA_SOURCES}, got {lambda_source!r}")

    lam_analytic = math.nan
    delta_eff = math.nan
    if isinstance(source, FrequencyModel):
        if grid is None:
            raise ValueError("grid: required when bounding from a model")
        model = source
        eigenvalues = np.sort(np.linalg.eigvalsh(state_gram(model, grid)))[::-1]
        k = model.k
        trace = grid.n_steps * model.total_weight
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            lam_analytic = lambda_min_analytic(model, grid)
        if model.k >= 2:
            delta_eff = effective_delta(model)
    elif isinstance(source, AutocorrSeries):
        series = source
        grid = series.grid
        spectrum = hermitian_spectrum(build_overlap(series))
        if k is None:
            from .inversion import detect_rank

            k = detect_rank(spectrum, eta_max, grid.n_steps)
        eigenvalues = spectrum.eigenvalues
        trace = spectrum.trace
        if lambda_source == "analytic":
            raise ValueError("lambda_source: 'analytic' requires a frequency model, not a series")
    else:
        raise TypeError(f"source: expected FrequencyModel or AutocorrSeries, got {type(source)!r}")

    lam_exact = float(eigenvalues[k - 1])
    if lam_exact <= 0:
        raise ValueError(f"eigenvalues: lambda_min must be positive, got {lam_exact!r}")
    kappa, kappa_upper = condition_number(eigenvalues, k)

    lam_used = lam_exact if lambda_source == "exact" else lam_analytic
    if not lam_used > 0:
        raise ValueError(f"lambda_source: {lambda_source} lambda_min is not positive")

    n = grid.n_steps
    bound_per_step = kappa * k * (n + 1) * eta_max / lam_used
    bound_total = k * n * (n + 1) * math.sqrt(trace) / lam_used**1.5 * eta_max
    admissible = eta_max < lam_exact / (2.0 * n)

    return CertaintyBound(
        k=k,
        n_steps=n,
        delta_t=grid.delta_t,
        eta_max=eta_max,
        lambda_min_exact=lam_exact,
        lambda_min_analytic=lam_analytic,
        lambda_1=float(eigenvalues[0]),
        trace_s=float(trace),
        kappa=kappa,
        kappa_upper=kappa_upper,
        delta_eff=delta_eff,
        bound_per_step=bound_per_step,
        bound_total=bound_total,
        admissible=admissible,
        lambda_source=lambda_source,
    )
