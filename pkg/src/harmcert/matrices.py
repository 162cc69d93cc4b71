"""Method matrices and Vandermonde Gram determinants.

Builds the N x N Hermitian Toeplitz overlap matrix S[m, n] = c_{n-m}, the
shifted Toeplitz matrix U'[m, n] = c_{n-m+1}, and the K x N state matrix
P[k, n] = sqrt(d_k) exp(-i omega_k n delta_t) with S = P^H P.

The determinant of the Vandermonde Gram matrix V V^H shrinks like
delta_t^{K(K-1)} in the short-time regime, far below what double-precision
cancellation can resolve, so the exact determinant (and the related
high-precision spectra) are evaluated with mpmath at an adaptively chosen
working precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np
from scipy.linalg import toeplitz

from .signals import AutocorrSeries, FrequencyModel, SamplingGrid
from .validation import as_float_array

_HERMITIAN_RTOL = 1e-12
_RANK_FLOOR_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending.

    Eigenvector columns are phase-normalized so that the first component
    with nonnegligible modulus is real and positive, making the
    decomposition reproducible bit-for-bit.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def trace(self) -> float:
        return float(self.eigenvalues.sum())


def build_overlap(series: AutocorrSeries) -> np.ndarray:
    """Overlap matrix S[m, n] = c_{n-m}, Hermitian by construction.

    Negative shifts use the conjugate extension.  The diagonal takes the
    real part of c_0 so that a noisy series (where c_0 picks up a complex
    perturbation) still yields a Hermitian matrix; |Re eta| <= |eta| keeps
    the perturbation within the noise ceiling.
    """
    n = series.grid.n_steps
    c = series.values
    col = np.conj(c[:n])
    col[0] = c[0].real
    return toeplitz(col, c[:n])


def build_shifted(series: AutocorrSeries) -> np.ndarray:
    """Shifted matrix U'[m, n] = c_{n-m+1} (Toeplitz, generally non-Hermitian)."""
    n = series.grid.n_steps
    c = series.values
    col = np.empty(n, dtype=complex)
    col[0] = c[1]
    col[1:] = np.conj(c[: n - 1])
    return toeplitz(col, c[1 : n + 1])


def vandermonde_matrix(omegas, grid: SamplingGrid) -> np.ndarray:
    """K x N matrix V[k, n] = exp(-i omega_k n delta_t), n = 0..N-1."""
    omegas = as_float_array(omegas, "omegas")
    n = np.arange(grid.n_steps)
    return np.exp(-1j * np.outer(omegas, n) * grid.delta_t)


def state_matrix(model: FrequencyModel, grid: SamplingGrid) -> np.ndarray:
    """State matrix P = diag(sqrt(d)) V with P^H P equal to the overlap matrix."""
    return np.sqrt(model.amps)[:, None] * vandermonde_matrix(model.omegas, grid)


def state_gram(model: FrequencyModel, grid: SamplingGrid) -> np.ndarray:
    """K x K Gram matrix P P^H; its eigenvalues are the nonzero eigenvalues of S."""
    p = state_matrix(model, grid)
    return p @ p.conj().T


def hermitian_spectrum(matrix) -> SpectralData:
    """Eigen-decomposition of a Hermitian matrix with deterministic ordering.

    Eigenvalues are sorted descending; eigenvector phases are fixed (first
    nonnegligible component real positive).  A non-convergent eigensolve
    surfaces as an explicit error.
    """
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix: expected a square matrix, got shape {a.shape}")
    scale = np.abs(a).max() or 1.0
    if np.abs(a - a.conj().T).max() > _HERMITIAN_RTOL * scale:
        raise ValueError("matrix: input is not Hermitian within tolerance")
    try:
        w, q = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"Hermitian eigensolver failed to converge: {exc}") from exc
    w = w[::-1].copy()
    q = q[:, ::-1].copy()
    _fix_eigenvector_phases(q)
    w.flags.writeable = False
    q.flags.writeable = False
    return SpectralData(w, q)


def _fix_eigenvector_phases(q: np.ndarray) -> None:
    """Rotate each column so its first nonnegligible component is real positive."""
    for j in range(q.shape[1]):
        col = q[:, j]
        mags = np.abs(col)
        idx = int(np.argmax(mags > 1e-12 * mags.max()))
        pivot = col[idx]
        if pivot != 0:
            col *= np.conj(pivot) / abs(pivot)


def rank_from_spectrum(spectrum: SpectralData) -> int:
    """Count of eigenvalues above the relative floor 1e-10 * Tr(S)."""
    return int(np.sum(spectrum.eigenvalues > _RANK_FLOOR_RTOL * spectrum.trace))


# ---------------------------------------------------------------------------
# High-precision helpers (mpmath)


def _mp_geometric_sum(phi: mp.mpf, n: int) -> mp.mpc:
    """sum_{j=0}^{n-1} exp(-i phi j), robust at phi == 0."""
    q = mp.exp(mp.mpc(0, -phi))
    if q == 1:
        return mp.mpc(n)
    return (1 - q**n) / (1 - q)


def _mp_vandermonde_gram(omegas, delta_t: float, n_steps: int) -> mp.matrix:
    """Gram matrix of unit phasor rows, entries sum_n exp(-i (w_j - w_k) n dt)."""
    k = len(omegas)
    gram = mp.matrix(k, k)
    for i in range(k):
        gram[i, i] = mp.mpf(n_steps)
        for j in range(i + 1, k):
            phi = (mp.mpf(omegas[i]) - mp.mpf(omegas[j])) * mp.mpf(delta_t)
            s = _mp_geometric_sum(phi, n_steps)
            gram[i, j] = s
            gram[j, i] = mp.conj(s)
    return gram


def _mp_state_gram(model: FrequencyModel, grid: SamplingGrid) -> mp.matrix:
    gram = _mp_vandermonde_gram(model.omegas, grid.delta_t, grid.n_steps)
    roots = [mp.sqrt(mp.mpf(a)) for a in model.amps]
    k = model.k
    for i in range(k):
        for j in range(k):
            gram[i, j] *= roots[i] * roots[j]
    return gram


def state_gram_spectrum_mp(model: FrequencyModel, grid: SamplingGrid, dps: int = 60) -> np.ndarray:
    """Eigenvalues of P P^H (descending), computed at ``dps`` decimal digits.

    This resolves eigenvalues far below the double-precision floor of
    roughly 1e-16 * Tr(S); the result is rounded back to float64.
    """
    with mp.workdps(dps):
        gram = _mp_state_gram(model, grid)
        eigs, _ = mp.eighe(gram)
        vals = sorted((float(eigs[i]) for i in range(model.k)), reverse=True)
    return np.array(vals)


# ---------------------------------------------------------------------------
# Vandermonde Gram determinants


def log_vandermonde_gram_det_approx(omegas, grid: SamplingGrid) -> float:
    """Natural log of the short-time approximation of det(V V^H).

    The approximation is

        (N/K)^K * prod_{j=1}^{K-1} ((N^2 - j^2)/(K^2 - j^2))^{K-j}
               * delta_t^{K(K-1)} * prod_{i<j} (omega_j - omega_i)^2.

    Returns -inf when two frequencies coincide.
    """
    omegas = as_float_array(omegas, "omegas")
    k = omegas.size
    n = grid.n_steps
    if n < k:
        raise ValueError(f"n_steps: need at least K={k} steps, got {n}")
    if k == 1:
        return math.log(n)
    total = k * math.log(n / k)
    for j in range(1, k):
        total += (k - j) * math.log((n * n - j * j) / (k * k - j * j))
    total += k * (k - 1) * math.log(grid.delta_t)
    for i in range(k):
        for j in range(i + 1, k):
            gap = abs(omegas[j] - omegas[i])
            if gap == 0.0:
                return -math.inf
            total += 2.0 * math.log(gap)
    return total


def vandermonde_gram_det_approx(omegas, grid: SamplingGrid) -> float:
    """Short-time approximation of det(V V^H); N by convention for K = 1."""
    log_det = log_vandermonde_gram_det_approx(omegas, grid)
    if log_det == -math.inf:
        return 0.0
    return math.exp(log_det)


def _det_working_dps(omegas, grid: SamplingGrid) -> int:
    """Digits needed to survive the cancellation from entries O(N) down to det."""
    k = len(omegas)
    log_approx = log_vandermonde_gram_det_approx(omegas, grid)
    if not math.isfinite(log_approx):
        return 40
    digits_lost = k * math.log10(grid.n_steps) - log_approx / math.log(10.0)
    return int(min(max(30, math.ceil(digits_lost) + 25), 300))


def vandermonde_gram_det_exact(omegas, grid: SamplingGrid, dps: int | None = None) -> float:
    """det(V V^H) from the explicitly constructed K x K Gram matrix.

    Evaluated with mpmath at a working precision chosen to absorb the
    cancellation (the determinant can be dozens of orders of magnitude
    below the matrix entries).  The imaginary part of the determinant is
    checked to be negligible and the real part returned.
    """
    omegas = as_float_array(omegas, "omegas")
    k = omegas.size
    n = grid.n_steps
    if n < k:
        raise ValueError(f"n_steps: need at least K={k} steps, got {n}")
    if dps is None:
        dps = _det_working_dps(omegas, grid)
    with mp.workdps(dps):
        gram = _mp_vandermonde_gram(omegas, grid.delta_t, n)
        det = mp.det(gram)
        re = float(mp.re(det))
        im = float(mp.im(det))
        # residual scale of the LU at this precision, used when re is ~0
        floor = float(mp.mpf(10) ** (k * mp.log10(mp.mpf(n)) - dps + 5))
    if abs(im) > 1e-10 * max(abs(re), floor):
        raise ValueError(f"determinant has non-negligible imaginary part {im:.3e}")
    return re
