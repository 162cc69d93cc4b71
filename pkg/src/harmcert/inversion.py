"""Recovery of mode count, frequencies, and amplitudes from a sampled series.

Pipeline: build the overlap and shifted matrices, eigendecompose the
overlap, detect the rank from the spectral gap, truncate to the signal
subspace, solve the reduced K x K eigenproblem whose eigenvalues are the
one-step phase factors exp(-i omega_k delta_t), read the frequencies off
the principal branch of the phase, and recover the amplitudes by least
squares on the original samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .errors import InversionError
from .matrices import SpectralData, build_overlap, build_shifted, hermitian_spectrum
from .signals import AutocorrSeries, SamplingGrid
from .validation import as_complex_series, as_float_array, check_nonnegative

_ZERO_NOISE_FLOOR_RTOL = 1e-10  # rank threshold relative to Tr(S) when eta_max == 0


@dataclass(frozen=True)
class InversionConfig:
    """Knobs for one inversion.

    ``eta_max`` is the assumed noise ceiling driving the default rank
    threshold N * eta_max.  ``forced_rank`` bypasses detection entirely;
    ``rank_threshold`` overrides the default threshold.  At most one of the
    two overrides may be set.
    """

    eta_max: float = 0.0
    forced_rank: int | None = None
    rank_threshold: float | None = None

    def __post_init__(self):
        check_nonnegative(self.eta_max, "eta_max")
        if self.forced_rank is not None and self.rank_threshold is not None:
            raise ValueError("forced_rank: cannot be combined with rank_threshold")
        if self.forced_rank is not None and self.forced_rank < 1:
            raise ValueError(f"forced_rank: must be >= 1, got {self.forced_rank}")


@dataclass(frozen=True, eq=False)
class InversionResult:
    """Detected rank with per-mode estimates, sorted by ascending frequency.

    ``eigen_moduli`` are |mu_k| for the reduced-problem eigenvalues, a
    unit-circle diagnostic aligned with ``omegas``.  ``residual`` is the
    RMS misfit of the reconstructed series against the input samples.
    """

    k_detected: int
    omegas: np.ndarray
    amps: np.ndarray
    eigen_moduli: np.ndarray
    residual: float
    amps_clamped: bool


class AmplitudeFit(NamedTuple):
    amps: np.ndarray
    residual: float
    clamped: bool


def detect_rank(
    spectrum: SpectralData,
    eta_max: float,
    n_steps: int,
    threshold: float | None = None,
) -> int:
    """Count eigenvalues above the noise threshold tau = N * eta_max.

    True eigenvalues sink at most N * eta_max under the noise and spurious
    ones rise at most as much, so tau separates them exactly when
    eta_max < lambda_min / 2N.  With eta_max = 0 a relative floor
    1e-10 * Tr(S) is used instead.  A count of 0 or N means there is no
    spectral gap and inversion is impossible.
    """
    w = spectrum.eigenvalues
    if threshold is not None:
        tau = float(threshold)
    elif eta_max > 0:
        tau = n_steps * eta_max
    else:
        tau = _ZERO_NOISE_FLOOR_RTOL * spectrum.trace
    k_hat = int(np.sum(w > tau))
    if k_hat == 0 or k_hat == w.size:
        raise ValueError(
            f"no spectral gap at threshold {tau:.3e} (detected rank {k_hat} of {w.size})"
        )
    return k_hat


def truncate_subspace(spectrum: SpectralData, k_hat: int) -> tuple[np.ndarray, np.ndarray]:
    """Leading-k eigenvector block Q (N x k, orthonormal columns) and eigenvalues."""
    w = spectrum.eigenvalues
    if not 1 <= k_hat <= w.size:
        raise ValueError(f"k_hat: must be in 1..{w.size}, got {k_hat}")
    if w[k_hat - 1] <= 0:
        raise ValueError(
            f"nonpositive eigenvalue {w[k_hat - 1]:.3e} among the leading {k_hat}"
        )
    return spectrum.eigenvectors[:, :k_hat], w[:k_hat].copy()


def solve_reduced_eigenproblem(shifted: np.ndarray, q: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Eigenvalues of D^{-1} Q^H U' Q, expected near the unit circle.

    No ordering is guaranteed; callers sort by extracted frequency.
    """
    if np.any(d <= 0):
        raise ValueError("d: truncated eigenvalues must be positive")
    reduced = (q.conj().T @ shifted @ q) / d[:, None]
    try:
        return np.linalg.eigvals(reduced)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"reduced eigensolver failed to converge: {exc}") from exc


def extract_frequencies(mus, delta_t: float) -> np.ndarray:
    """Frequencies -arg(mu)/delta_t on the principal branch, sorted ascending.

    The phase lives in (-pi, pi], so frequencies are recovered modulo
    2 pi / delta_t; a mode beyond the Nyquist branch aliases to its
    principal-branch image.
    """
    if delta_t <= 0:
        raise ValueError(f"delta_t: must be positive, got {delta_t}")
    mus = np.asarray(mus, dtype=complex)
    return np.sort(-np.angle(mus) / delta_t)


def recover_amplitudes(series: AutocorrSeries, omegas_est) -> AmplitudeFit:
    """Least-squares weights for c_n ~ sum_k d_k exp(-i w_k n delta_t).

    Solved over the complex field on all N+1 samples, then real parts
    taken; negative weights are clamped to zero with ``clamped`` set.
    """
    omegas_est = as_float_array(omegas_est, "omegas_est")
    if omegas_est.size != np.unique(omegas_est).size:
        raise ValueError("omegas_est: duplicate frequency estimates")
    n = np.arange(series.grid.n_samples)
    design = np.exp(-1j * np.outer(n, omegas_est) * series.grid.delta_t)
    solution, _, rank, _ = np.linalg.lstsq(design, series.values, rcond=None)
    if rank < omegas_est.size:
        raise ValueError("omegas_est: near-coincident estimates make the fit rank deficient")
    amps = solution.real
    clamped = bool(np.any(amps < 0))
    amps = np.maximum(amps, 0.0)
    residual = float(np.sqrt(np.mean(np.abs(series.values - design @ amps) ** 2)))
    return AmplitudeFit(amps, residual, clamped)


def harmonic_invert(series: AutocorrSeries, config: InversionConfig | None = None) -> InversionResult:
    """Full pipeline from samples to modes; deterministic for fixed input.

    With no config the series' own noise ceiling drives rank detection.
    Component failures propagate as :class:`InversionError` labelled with
    the stage that failed.
    """
    cfg = config if config is not None else InversionConfig(eta_max=series.eta_max)
    n_steps = series.grid.n_steps

    def stage(name, fn, *args):
        try:
            return fn(*args)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise InversionError(name, str(exc)) from exc

    overlap = stage("overlap", build_overlap, series)
    shifted = stage("shifted", build_shifted, series)
    spectrum = stage("spectrum", hermitian_spectrum, overlap)
    if cfg.forced_rank is not None:
        k_hat = cfg.forced_rank
        if k_hat > n_steps:
            raise InversionError("rank", f"forced_rank {k_hat} exceeds matrix size {n_steps}")
    else:
        k_hat = stage("rank", detect_rank, spectrum, cfg.eta_max, n_steps, cfg.rank_threshold)
    q, d = stage("truncate", truncate_subspace, spectrum, k_hat)
    mus = stage("reduced-eigenproblem", solve_reduced_eigenproblem, shifted, q, d)
    order = np.argsort(-np.angle(mus) / series.grid.delta_t)
    omegas = stage("frequencies", extract_frequencies, mus, series.grid.delta_t)
    fit = stage("amplitudes", recover_amplitudes, series, omegas)
    return InversionResult(
        k_detected=int(k_hat),
        omegas=omegas,
        amps=fit.amps,
        eigen_moduli=np.abs(mus)[order],
        residual=fit.residual,
        amps_clamped=fit.clamped,
    )


class HarmonicInversion(BaseEstimator):
    """Prony-type frequency and amplitude estimator with a scikit-learn API.

    Parameters
    ----------
    delta_t : float
        Sampling time step of the series passed to :meth:`fit`.
    eta_max : float
        Assumed noise ceiling; drives the rank-detection threshold.
    forced_rank : int, optional
        Bypass rank detection with a known mode count.
    rank_threshold : float, optional
        Override the default detection threshold N * eta_max.

    Attributes (after ``fit``)
    --------------------------
    k_detected_, omegas_, amps_, eigen_moduli_, residual_, amps_clamped_
        Fields of the underlying :class:`InversionResult` (also stored
        whole as ``result_``).
    """

    def __init__(
        self,
        delta_t: float = 1.0,
        eta_max: float = 0.0,
        forced_rank: int | None = None,
        rank_threshold: float | None = None,
    ):
        self.delta_t = delta_t
        self.eta_max = eta_max
        self.forced_rank = forced_rank
        self.rank_threshold = rank_threshold

    def fit(self, X, y=None):
        """Estimate modes from a 1-D complex series c_0..c_N sampled at delta_t."""
        values = as_complex_series(X, "X")
        series = AutocorrSeries(
            values, SamplingGrid(self.delta_t, values.size - 1), eta_max=self.eta_max
        )
        config = InversionConfig(
            eta_max=self.eta_max,
            forced_rank=self.forced_rank,
            rank_threshold=self.rank_threshold,
        )
        result = harmonic_invert(series, config)
        self.result_ = result
        self.k_detected_ = result.k_detected
        self.omegas_ = result.omegas
        self.amps_ = result.amps
        self.eigen_moduli_ = result.eigen_moduli
        self.residual_ = result.residual
        self.amps_clamped_ = result.amps_clamped
        return self

    def predict(self, n):
        """Reconstructed series values at integer sample indices ``n``."""
        check_is_fitted(self, "omegas_")
        idx = np.asarray(n)
        phasors = np.exp(-1j * np.outer(idx, self.omegas_) * self.delta_t)
        return phasors @ self.amps_
