"""Overlap/shifted/state matrices, spectra, and Vandermonde determinants."""

import numpy as np
import pytest

import mpmath as mp

from harmcert import (
    FrequencyModel,
    NoiseSpec,
    SamplingGrid,
    apply_noise,
    build_overlap,
    build_shifted,
    hermitian_spectrum,
    state_gram,
    state_matrix,
    synthesize_autocorrelation,
    vandermonde_gram_det_approx,
    vandermonde_gram_det_exact,
    vandermonde_matrix,
)
from harmcert.matrices import rank_from_spectrum, state_gram_spectrum_mp


def _series(omegas, amps, dt, n):
    return synthesize_autocorrelation(FrequencyModel(omegas, amps), SamplingGrid(dt, n))


class TestBuildOverlap:
    def test_single_mode_rank_one_projector(self):
        omega, dt = 1.3, 0.2
        series = _series([omega], [1.0], dt, 2)
        s = build_overlap(series)
        assert s[0, 0] == pytest.approx(1.0)
        assert s[0, 1] == pytest.approx(np.exp(-1j * omega * dt))
        assert s[1, 0] == pytest.approx(np.exp(1j * omega * dt))
        eigs = np.sort(np.linalg.eigvalsh(s))
        assert eigs == pytest.approx([0.0, 2.0], abs=1e-14)

    def test_normalized_series_diagonal_and_trace(self):
        series = synthesize_autocorrelation(
            FrequencyModel([0.5, 2.0], [0.4, 0.6], normalized=True), SamplingGrid(0.1, 8)
        )
        s = build_overlap(series)
        assert np.allclose(np.diag(s), 1.0)
        assert np.trace(s).real == pytest.approx(8.0)

    def test_hermitian_and_psd_for_exact_series(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            k = int(rng.integers(1, 4))
            series = _series(
                np.sort(rng.uniform(0, 4, k) + np.arange(k) * 5),
                rng.uniform(0.1, 1, k),
                float(rng.uniform(0.01, 0.3)),
                10,
            )
            s = build_overlap(series)
            assert np.allclose(s, s.conj().T)
            eigs = np.linalg.eigvalsh(s)
            assert eigs.min() >= -1e-12 * np.trace(s).real

    def test_noisy_series_still_hermitian(self):
        series = apply_noise(_series([0.0, 1.0], [0.5, 0.5], 0.05, 10), NoiseSpec(1e-3, seed=9))
        s = build_overlap(series)
        assert np.allclose(s, s.conj().T)

    def test_short_time_smallest_eigenvalue_matches_analytic(self):
        # two equal modes, unit gap: lambda_min ~ (N - 1/N)/12 * (N dt)^2 / 4
        series = _series([0.0, 1.0], [0.5, 0.5], 1e-3, 10)
        eigs = np.sort(np.linalg.eigvalsh(build_overlap(series)))[::-1]
        assert eigs[1] == pytest.approx(2.0625e-5, rel=1e-4)


class TestBuildShifted:
    def test_single_mode_is_phase_times_overlap(self):
        omega, dt = 0.9, 0.15
        series = _series([omega], [1.0], dt, 6)
        u = build_shifted(series)
        s = build_overlap(series)
        assert np.allclose(u, np.exp(-1j * omega * dt) * s)

    def test_one_by_one_case(self):
        series = _series([1.1], [0.8], 0.2, 1)
        u = build_shifted(series)
        assert u.shape == (1, 1)
        assert u[0, 0] == pytest.approx(series.value(1))

    def test_toeplitz_structure_and_corners(self):
        series = _series([0.4, 1.9, 3.0], [0.2, 0.3, 0.5], 0.08, 7)
        u = build_shifted(series)
        for offset in range(-6, 7):
            diag = np.diag(u, offset)
            assert np.allclose(diag, diag[0])
        assert u[0, 6] == pytest.approx(series.value(7))
        assert u[6, 0] == pytest.approx(series.value(-5))


class TestStateMatrix:
    def test_gram_of_columns_reproduces_overlap(self):
        rng = np.random.default_rng(17)
        model = FrequencyModel(np.sort(rng.uniform(0, 3, 3)), rng.uniform(0.2, 1, 3))
        grid = SamplingGrid(0.11, 9)
        p = state_matrix(model, grid)
        s = build_overlap(synthesize_autocorrelation(model, grid))
        assert np.abs(p.conj().T @ p - s).max() < 1e-12

    def test_row_gram_diagonal_is_n_times_weight(self):
        model = FrequencyModel([0.3, 1.2, 2.8], [0.25, 0.5, 0.25])
        grid = SamplingGrid(0.07, 11)
        gram = state_gram(model, grid)
        assert np.allclose(np.diag(gram).real, 11 * model.amps)

    def test_single_mode_row_modulus(self):
        p = state_matrix(FrequencyModel([2.2], [0.49]), SamplingGrid(0.1, 5))
        assert np.allclose(np.abs(p), 0.7)

    def test_factorization_amplitudes_times_vandermonde(self):
        model = FrequencyModel([0.5, 1.5], [0.36, 0.64])
        grid = SamplingGrid(0.09, 6)
        v = vandermonde_matrix(model.omegas, grid)
        assert np.allclose(state_matrix(model, grid), np.sqrt(model.amps)[:, None] * v)

    def test_nonzero_spectra_of_both_grams_agree(self):
        model = FrequencyModel([0.2, 1.1, 2.9], [0.3, 0.4, 0.3])
        grid = SamplingGrid(0.13, 10)
        s_eigs = np.sort(np.linalg.eigvalsh(
            build_overlap(synthesize_autocorrelation(model, grid))
        ))[::-1][:3]
        g_eigs = np.sort(np.linalg.eigvalsh(state_gram(model, grid)))[::-1]
        assert np.allclose(s_eigs, g_eigs, rtol=1e-10, atol=1e-12)


class TestHermitianSpectrum:
    def test_identity(self):
        spec = hermitian_spectrum(np.eye(5))
        assert np.allclose(spec.eigenvalues, 1.0)
        assert np.allclose(spec.eigenvectors @ spec.eigenvectors.conj().T, np.eye(5))

    def test_rank_one_exact_series(self):
        series = _series([1.7], [0.6], 0.1, 4)
        spec = hermitian_spectrum(build_overlap(series))
        assert spec.eigenvalues == pytest.approx([2.4, 0, 0, 0], abs=1e-12)

    def test_descending_order_and_reconstruction(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        h = a + a.conj().T
        spec = hermitian_spectrum(h)
        assert np.all(np.diff(spec.eigenvalues) <= 0)
        recon = spec.eigenvectors @ np.diag(spec.eigenvalues) @ spec.eigenvectors.conj().T
        assert np.linalg.norm(h - recon) <= 1e-10 * np.linalg.norm(h)

    def test_matches_independent_high_precision_solver(self):
        rng = np.random.default_rng(23)
        a = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        h = a + a.conj().T
        spec = hermitian_spectrum(h)
        with mp.workdps(40):
            hm = mp.matrix(8, 8)
            for i in range(8):
                for j in range(8):
                    hm[i, j] = mp.mpc(h[i, j].real, h[i, j].imag)
            oracle = sorted((float(e) for e in mp.eighe(hm, eigvals_only=True)), reverse=True)
        assert np.allclose(spec.eigenvalues, oracle, rtol=1e-10, atol=1e-10)

    def test_phase_convention_is_deterministic(self):
        rng = np.random.default_rng(31)
        a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        h = a + a.conj().T
        spec = hermitian_spectrum(h)
        for j in range(6):
            col = spec.eigenvectors[:, j]
            idx = np.argmax(np.abs(col) > 1e-12 * np.abs(col).max())
            assert col[idx].imag == pytest.approx(0.0, abs=1e-12)
            assert col[idx].real > 0

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            hermitian_spectrum(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_rank_floor_counts_modes(self):
        series = _series([0.2, 1.4, 3.3], [0.2, 0.5, 0.3], 0.15, 9)
        spec = hermitian_spectrum(build_overlap(series))
        assert rank_from_spectrum(spec) == 3

    def test_largest_eigenvalue_approaches_trace_for_small_steps(self):
        model = FrequencyModel([0.0, 1.0], [0.5, 0.5])
        ratios = []
        for dt in (0.5, 0.1, 0.02, 0.004):
            spec = hermitian_spectrum(
                build_overlap(synthesize_autocorrelation(model, SamplingGrid(dt, 8)))
            )
            assert spec.eigenvalues[0] <= spec.trace + 1e-12
            ratios.append(spec.eigenvalues[0] / spec.trace)
        assert np.all(np.diff(ratios) > 0)
        assert ratios[-1] > 0.999


class TestStateGramHighPrecision:
    def test_matches_double_precision_when_well_conditioned(self):
        model = FrequencyModel([0.0, 1.0, 2.4], [0.3, 0.3, 0.4])
        grid = SamplingGrid(0.2, 10)
        dbl = np.sort(np.linalg.eigvalsh(state_gram(model, grid)))[::-1]
        hp = state_gram_spectrum_mp(model, grid, dps=40)
        assert np.allclose(dbl, hp, rtol=1e-10)


class TestVandermondeDeterminants:
    def test_single_mode_convention(self):
        grid = SamplingGrid(0.1, 7)
        assert vandermonde_gram_det_exact([1.0], grid) == pytest.approx(7.0)
        assert vandermonde_gram_det_approx([1.0], grid) == pytest.approx(7.0)

    def test_two_mode_closed_form(self):
        # det = N^2 - |sum_n exp(-i gap n dt)|^2, evaluated independently
        gap, dt, n = 1.0, 0.02, 5
        grid = SamplingGrid(dt, n)
        phased = np.exp(-1j * gap * dt * np.arange(n)).sum()
        expected = n * n - abs(phased) ** 2
        assert vandermonde_gram_det_exact([0.0, gap], grid) == pytest.approx(expected, rel=1e-9)

    def test_two_mode_small_step_limit(self):
        # K=2, N=3: det -> 6 (gap * dt)^2
        grid = SamplingGrid(1e-4, 3)
        det = vandermonde_gram_det_exact([0.0, 1.0], grid)
        assert det == pytest.approx(6e-8, rel=1e-4)

    def test_forced_equal_frequencies_give_zero(self):
        grid = SamplingGrid(0.05, 6)
        assert vandermonde_gram_det_exact([1.0, 1.0], grid) == pytest.approx(0.0, abs=1e-20)
        assert vandermonde_gram_det_approx([1.0, 1.0], grid) == 0.0

    def test_approx_prefactor_k2_n3(self):
        # (3/2)^2 * (8/3) = 6 exactly
        dt = 2e-3
        det = vandermonde_gram_det_approx([0.0, 1.0], SamplingGrid(dt, 3))
        assert det == pytest.approx(6.0 * dt**2, rel=1e-12)

    def test_approx_value_k2_n10(self):
        det = vandermonde_gram_det_approx([0.0, 1.0], SamplingGrid(1e-3, 10))
        assert det == pytest.approx(8.25e-4, rel=1e-12)

    def test_approx_step_doubling_power_law(self):
        for k in (2, 3, 4):
            omegas = np.arange(k, dtype=float)
            a = vandermonde_gram_det_approx(omegas, SamplingGrid(1e-3, 10))
            b = vandermonde_gram_det_approx(omegas, SamplingGrid(2e-3, 10))
            assert b / a == pytest.approx(2.0 ** (k * (k - 1)), rel=1e-12)

    @pytest.mark.parametrize("k, n", [(2, 5), (3, 8), (4, 12)])
    def test_ratio_approaches_one_for_small_steps(self, k, n):
        omegas = np.arange(k, dtype=float)
        devs = []
        for x in (3e-2, 1e-2, 3e-3, 1e-3):
            dt = x / (k - 1)
            grid = SamplingGrid(dt, n)
            ratio = vandermonde_gram_det_exact(omegas, grid) / vandermonde_gram_det_approx(
                omegas, grid
            )
            devs.append(abs(ratio - 1.0))
        assert all(b < a for a, b in zip(devs, devs[1:]))
        assert devs[-1] < 1e-4

    def test_rejects_underdetermined_grid(self):
        with pytest.raises(ValueError, match="n_steps"):
            vandermonde_gram_det_exact([0.0, 1.0, 2.0], SamplingGrid(0.1, 2))
