"""Hidden frequency models, sampling grids, and autocorrelation series.

The signal under study is a sum of K complex phasors with positive real
weights, sampled on a uniform time grid:

    c_n = sum_k d_k * exp(-i * omega_k * n * delta_t),   n = 0..N.

Because the weights are real, the series extends to negative indices by
conjugation, c_{-j} = conj(c_j).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import (
    as_complex_series,
    as_float_array,
    check_distinct,
    check_integer,
    check_nonnegative,
    check_positive,
)

NOISE_KINDS = ("uniform-disk", "truncated-gaussian")


@dataclass(frozen=True, eq=False)
class FrequencyModel:
    """Ground-truth mode list: angular frequencies and positive weights.

    Frequencies are stored sorted ascending (weights permuted alongside),
    which removes matching ambiguity downstream.  ``normalized=True``
    asserts that the weights sum to one.
    """

    omegas: np.ndarray
    amps: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        omegas = as_float_array(self.omegas, "omegas")
        amps = as_float_array(self.amps, "amps")
        if omegas.size < 1:
            raise ValueError("omegas: need at least one mode")
        if amps.size != omegas.size:
            raise ValueError(
                f"amps: length {amps.size} does not match omegas length {omegas.size}"
            )
        check_distinct(omegas, "omegas")
        if np.any(amps <= 0):
            raise ValueError("amps: all weights must be strictly positive")
        order = np.argsort(omegas)
        omegas = omegas[order]
        amps = amps[order]
        if self.normalized and abs(amps.sum() - 1.0) > 1e-9:
            raise ValueError(f"amps: normalized model must sum to 1, got {amps.sum()!r}")
        omegas.flags.writeable = False
        amps.flags.writeable = False
        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "amps", amps)

    @property
    def k(self) -> int:
        """Number of modes."""
        return int(self.omegas.size)

    @property
    def total_weight(self) -> float:
        return float(self.amps.sum())

    @property
    def delta_omega_max(self) -> float:
        """Largest pairwise frequency difference (0 for a single mode)."""
        return float(self.omegas[-1] - self.omegas[0]) if self.k > 1 else 0.0

    @property
    def min_gap(self) -> float:
        """Smallest adjacent frequency gap (0 for a single mode)."""
        return float(np.diff(self.omegas).min()) if self.k > 1 else 0.0


@dataclass(frozen=True)
class SamplingGrid:
    """Uniform grid t = n * delta_t, n = 0..n_steps (n_steps + 1 samples).

    The sample at index N is required because the shifted matrix reaches
    c_N in its top-right corner.
    """

    delta_t: float
    n_steps: int

    def __post_init__(self):
        object.__setattr__(self, "delta_t", check_positive(self.delta_t, "delta_t"))
        object.__setattr__(self, "n_steps", check_integer(self.n_steps, "n_steps", minimum=1))

    @property
    def total_time(self) -> float:
        return self.n_steps * self.delta_t

    @property
    def n_samples(self) -> int:
        return self.n_steps + 1

    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.delta_t


@dataclass(frozen=True, eq=False)
class AutocorrSeries:
    """Sampled values c_0..c_N with the grid and the known noise ceiling.

    ``eta_max`` is the ceiling on the modulus of the additive noise on each
    sample; it is 0 for an exact series.
    """

    values: np.ndarray
    grid: SamplingGrid
    eta_max: float = 0.0

    def __post_init__(self):
        values = as_complex_series(self.values, "values")
        if values.size != self.grid.n_samples:
            raise ValueError(
                f"values: expected {self.grid.n_samples} samples for n_steps="
                f"{self.grid.n_steps}, got {values.size}"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "eta_max", check_nonnegative(self.eta_max, "eta_max"))

    @property
    def c0(self) -> complex:
        return complex(self.values[0])

    def value(self, j: int) -> complex:
        """c_j for j >= 0, conj(c_{-j}) for j < 0; |j| must not exceed N."""
        j = int(j)
        if abs(j) > self.grid.n_steps:
            raise IndexError(f"index {j} outside [-{self.grid.n_steps}, {self.grid.n_steps}]")
        return complex(self.values[j]) if j >= 0 else complex(np.conj(self.values[-j]))

    def values_at(self, indices) -> np.ndarray:
        """Vectorized :meth:`value`."""
        idx = np.asarray(indices, dtype=int)
        if np.any(np.abs(idx) > self.grid.n_steps):
            raise IndexError(f"index outside [-{self.grid.n_steps}, {self.grid.n_steps}]")
        out = self.values[np.abs(idx)]
        return np.where(idx >= 0, out, np.conj(out))


@dataclass(frozen=True)
class NoiseSpec:
    """Additive complex noise with a hard modulus ceiling.

    ``copies`` models repeated measurements: the effective ceiling is
    eta_max / sqrt(copies).
    """

    eta_max: float
    kind: str = "uniform-disk"
    seed: int = 0
    copies: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "eta_max", check_positive(self.eta_max, "eta_max"))
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"kind: must be one of {NOISE_KINDS}, got {self.kind!r}")
        object.__setattr__(self, "seed", check_integer(self.seed, "seed", minimum=0))
        if self.copies is not None:
            object.__setattr__(self, "copies", check_integer(self.copies, "copies", minimum=1))

    @property
    def effective_eta_max(self) -> float:
        if self.copies is None:
            return self.eta_max
        return self.eta_max / np.sqrt(self.copies)


def synthesize_autocorrelation(model: FrequencyModel, grid: SamplingGrid) -> AutocorrSeries:
    """Exact series c_n = sum_k d_k exp(-i omega_k n delta_t), n = 0..N.

    Rejects grids with fewer steps than modes; the overlap matrix would be
    rank deficient downstream.
    """
    if grid.n_steps < model.k:
        raise ValueError(f"n_steps: need at least K={model.k} steps, got {grid.n_steps}")
    n = np.arange(grid.n_samples)
    phasors = np.exp(-1j * np.outer(n, model.omegas) * grid.delta_t)
    return AutocorrSeries(phasors @ model.amps, grid, eta_max=0.0)


def apply_noise(series: AutocorrSeries, noise: NoiseSpec) -> AutocorrSeries:
    """Add an independent complex noise draw to every sample.

    The draw is a pure function of ``noise.seed``.  Every sample satisfies
    |eta_n| <= noise.effective_eta_max.
    """
    if series.eta_max != 0.0:
        raise ValueError("apply_noise requires an exact series (eta_max == 0)")
    rng = np.random.default_rng(noise.seed)
    eta = _draw_noise(rng, series.grid.n_samples, noise.effective_eta_max, noise.kind)
    return AutocorrSeries(series.values + eta, series.grid, eta_max=noise.effective_eta_max)


def _draw_noise(rng: np.random.Generator, n: int, eta_max: float, kind: str) -> np.ndarray:
    if kind == "uniform-disk":
        radius = eta_max * np.sqrt(rng.random(n))
        angle = 2.0 * np.pi * rng.random(n)
        return radius * np.exp(1j * angle)
    # truncated gaussian: sigma = eta_max/3, resample anything outside the disk
    sigma = eta_max / 3.0
    z = sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    outside = np.abs(z) > eta_max
    while np.any(outside):
        m = int(outside.sum())
        z[outside] = sigma * (rng.standard_normal(m) + 1j * rng.standard_normal(m))
        outside = np.abs(z) > eta_max
    return z
