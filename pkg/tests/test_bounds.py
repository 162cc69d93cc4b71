"""Condition numbers, lambda_min estimates, effective distance, and bounds."""

import math

import numpy as np
import pytest

from harmcert import (
    FrequencyModel,
    NoiseSpec,
    SamplingGrid,
    apply_noise,
    certainty_bound,
    condition_number,
    effective_delta,
    lambda_min_analytic,
    lambda_min_analytic_general,
    lambda_min_analytic_k2,
    lambda_min_char_poly_estimate,
    lambda_min_exact,
    lambda_min_exact_hp,
    state_gram,
    synthesize_autocorrelation,
)

K2_MODEL = FrequencyModel([0.0, 1.0], [0.5, 0.5], normalized=True)
K2_GRID = SamplingGrid(1e-3, 10)


def _gram_eigs(model, grid):
    return np.sort(np.linalg.eigvalsh(state_gram(model, grid)))[::-1]


class TestConditionNumber:
    def test_single_mode_is_one(self):
        model = FrequencyModel([1.5], [0.8])
        grid = SamplingGrid(0.1, 6)
        kappa, kappa_upper = condition_number(_gram_eigs(model, grid), 1)
        assert kappa == pytest.approx(1.0)
        assert kappa_upper == pytest.approx(1.0)

    def test_orthogonal_rows_equal_weights(self):
        # gap of 2 pi / (N dt) makes the phasor rows orthogonal
        n, dt = 8, 0.05
        model = FrequencyModel([0.0, 2 * np.pi / (n * dt)], [0.3, 0.3])
        kappa, kappa_upper = condition_number(_gram_eigs(model, SamplingGrid(dt, n)), 2)
        assert kappa == pytest.approx(1.0, abs=1e-12)
        assert kappa_upper == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_short_time_value_from_eigensolve(self):
        eigs = _gram_eigs(K2_MODEL, K2_GRID)
        kappa, kappa_upper = condition_number(eigs, 2)
        assert kappa == pytest.approx(math.sqrt(eigs[0] / 2.0625e-5), rel=1e-3)
        assert kappa <= kappa_upper

    def test_rejects_nonpositive_lambda_min(self):
        with pytest.raises(ValueError, match="lambda_min"):
            condition_number([2.0, 0.0], 2)


class TestLambdaMinAnalytic:
    def test_k2_reference_value(self):
        # (9.9/12) * (1/4) * 1e-4
        assert lambda_min_analytic(K2_MODEL, K2_GRID) == pytest.approx(2.0625e-5, rel=1e-12)

    def test_k2_and_general_formulas_agree(self):
        rng = np.random.default_rng(2)
        for n in range(3, 21):
            omegas = np.sort(rng.uniform(0, 2, 2))
            amps = rng.uniform(0.1, 1, 2)
            model = FrequencyModel(omegas, amps)
            grid = SamplingGrid(1e-3, n)
            k2 = lambda_min_analytic_k2(model, grid)
            general = lambda_min_analytic_general(model, grid)
            assert general == pytest.approx(k2, rel=1e-12)

    def test_single_mode_trivial_path(self):
        assert lambda_min_analytic(FrequencyModel([2.0], [0.7]), SamplingGrid(0.1, 9)) == pytest.approx(6.3)

    def test_homogeneous_in_weights(self):
        model = FrequencyModel([0.1, 0.9, 2.0], [0.2, 0.3, 0.5])
        doubled = FrequencyModel(model.omegas, 2 * model.amps)
        grid = SamplingGrid(2e-3, 8)
        assert lambda_min_analytic(doubled, grid) == pytest.approx(
            2 * lambda_min_analytic(model, grid), rel=1e-12
        )

    def test_warns_outside_short_time_regime(self):
        with pytest.warns(UserWarning, match="short-time"):
            lambda_min_analytic(K2_MODEL, SamplingGrid(0.05, 10))

    def test_formula_dispatch_validates_k(self):
        with pytest.raises(ValueError, match="K = 2"):
            lambda_min_analytic_k2(FrequencyModel([0, 1, 2], [1, 1, 1]), K2_GRID)
        with pytest.raises(ValueError, match="K >= 2"):
            lambda_min_analytic_general(FrequencyModel([1.0], [1.0]), K2_GRID)

    def test_fixed_total_time_growth_in_step_count(self):
        # at fixed T, lambda/T^2 = (N - 1/N)/12 * gap^2/(1/d1 + 1/d2):
        # increasing in N and asymptotically linear
        total_time = 0.01
        values = []
        for n in (2, 5, 10, 20, 40):
            grid = SamplingGrid(total_time / n, n)
            values.append(lambda_min_analytic_k2(K2_MODEL, grid) / total_time**2)
        assert all(b > a for a, b in zip(values, values[1:]))
        assert values[-1] / values[-2] == pytest.approx(2.0, rel=0.02)  # ~linear in N


class TestLambdaMinExact:
    def test_double_and_high_precision_agree_when_resolved(self):
        lam = lambda_min_exact(K2_MODEL, K2_GRID)
        lam_hp = lambda_min_exact_hp(K2_MODEL, K2_GRID)
        assert lam == pytest.approx(lam_hp, rel=1e-8)
        assert lam == pytest.approx(2.0625e-5, rel=1e-4)

    def test_high_precision_resolves_below_double_floor(self):
        # K=4 in the deep short-time regime: lambda_min/Tr(S) ~ 1e-17
        model = FrequencyModel([0.0, 1.0, 2.0, 3.0], [0.25] * 4, normalized=True)
        grid = SamplingGrid(0.05 / (8 * 3.0), 8)
        lam = lambda_min_exact_hp(model, grid)
        analytic = lambda_min_analytic(model, grid)
        assert lam == pytest.approx(analytic, rel=1e-3)
        assert lam / (8 * 1.0) < 1e-14  # genuinely below the double floor

    def test_analytic_converges_to_exact(self):
        devs = []
        for dt in (5e-3, 2e-3, 1e-3, 5e-4):
            grid = SamplingGrid(dt, 10)
            ratio = lambda_min_exact_hp(K2_MODEL, grid) / lambda_min_analytic(K2_MODEL, grid)
            devs.append(abs(ratio - 1.0))
        assert all(b < a for a, b in zip(devs, devs[1:]))
        assert devs[-1] < 1e-5


class TestCharPolyEstimate:
    def test_two_mode_identity(self):
        # -a0/a1 = lam1 lam2 / (lam1 + lam2) for a 2x2 matrix
        eigs = _gram_eigs(K2_MODEL, K2_GRID)
        expected = eigs[0] * eigs[1] / (eigs[0] + eigs[1])
        est = lambda_min_char_poly_estimate(K2_MODEL, K2_GRID)
        assert est == pytest.approx(expected, rel=1e-6)
        assert est == pytest.approx(2.06e-5, rel=1e-2)

    def test_three_mode_short_time_agreement(self):
        model = FrequencyModel([0.0, 1.0, 2.3], [0.3, 0.4, 0.3], normalized=True)
        grid = SamplingGrid(0.05 / (9 * 2.3), 9)  # T * domega_max = 0.05
        est = lambda_min_char_poly_estimate(model, grid)
        lam = lambda_min_exact_hp(model, grid)
        assert est == pytest.approx(lam, rel=0.05)

    def test_requires_two_modes(self):
        with pytest.raises(ValueError, match="K >= 2"):
            lambda_min_char_poly_estimate(FrequencyModel([1.0], [1.0]), SamplingGrid(0.1, 4))


class TestEffectiveDelta:
    def test_two_mode_value(self):
        assert effective_delta(K2_MODEL) == pytest.approx(1 / math.sqrt(2), rel=1e-12)

    def test_scales_with_frequency_gaps(self):
        model = FrequencyModel([0.0, 0.7, 1.9], [0.2, 0.3, 0.5])
        scaled = FrequencyModel(3.0 * model.omegas, model.amps)
        assert effective_delta(scaled) == pytest.approx(3.0 * effective_delta(model), rel=1e-12)

    def test_three_mode_against_defining_sum(self):
        model = FrequencyModel([0.0, 1.0, 2.0], [1 / 3, 1 / 3, 1 / 3], normalized=True)
        total = 0.0
        for k in range(3):
            prod = model.amps[k]
            for j in range(3):
                if j != k:
                    prod *= (model.omegas[k] - model.omegas[j]) ** 2
            total += model.total_weight / prod
        expected = (total / 3.0) ** (-1.0 / 4.0)
        assert effective_delta(model) == pytest.approx(expected, rel=1e-12)

    def test_requires_two_modes(self):
        with pytest.raises(ValueError, match="K >= 2"):
            effective_delta(FrequencyModel([1.0], [1.0]))


class TestCertaintyBound:
    def test_zero_noise_gives_zero_bounds(self):
        bound = certainty_bound(K2_MODEL, K2_GRID, eta_max=0.0)
        assert bound.bound_per_step == 0.0
        assert bound.bound_total == 0.0
        assert bound.admissible

    def test_reference_scenario_total_bound(self):
        # K N (N+1) sqrt(Tr S) / lambda_min^1.5 * eta, lambda_min ~ 2.0625e-5
        bound = certainty_bound(K2_MODEL, K2_GRID, eta_max=1e-7)
        assert bound.bound_total == pytest.approx(742.73, rel=1e-4)
        assert bound.lambda_min_exact == pytest.approx(2.0625e-5, rel=1e-4)
        assert bound.trace_s == pytest.approx(10.0)
        assert bound.delta_eff == pytest.approx(1 / math.sqrt(2))
        assert bound.admissible  # 1e-7 < 2.06e-5 / 20

    def test_total_equals_n_times_per_step_with_upper_kappa(self):
        bound = certainty_bound(K2_MODEL, K2_GRID, eta_max=3e-7)
        per_step_upper = (
            bound.kappa_upper * bound.k * (bound.n_steps + 1) * bound.eta_max / bound.lambda_min_exact
        )
        assert bound.bound_total == pytest.approx(bound.n_steps * per_step_upper, rel=1e-12)

    def test_linear_in_eta(self):
        b1 = certainty_bound(K2_MODEL, K2_GRID, eta_max=1e-7)
        b2 = certainty_bound(K2_MODEL, K2_GRID, eta_max=2e-7)
        assert b2.bound_total == pytest.approx(2 * b1.bound_total, rel=1e-15)
        assert b2.bound_per_step == pytest.approx(2 * b1.bound_per_step, rel=1e-15)

    def test_decreasing_in_lambda_min(self):
        tight = FrequencyModel([0.0, 0.5], [0.5, 0.5])  # smaller gap, smaller lambda
        b_small_gap = certainty_bound(tight, K2_GRID, eta_max=1e-7)
        b_unit_gap = certainty_bound(K2_MODEL, K2_GRID, eta_max=1e-7)
        assert b_small_gap.lambda_min_exact < b_unit_gap.lambda_min_exact
        assert b_small_gap.bound_total > b_unit_gap.bound_total

    def test_admissibility_threshold(self):
        lam = lambda_min_exact(K2_MODEL, K2_GRID)
        n = K2_GRID.n_steps
        assert certainty_bound(K2_MODEL, K2_GRID, eta_max=0.99 * lam / (2 * n)).admissible
        assert not certainty_bound(K2_MODEL, K2_GRID, eta_max=1.01 * lam / (2 * n)).admissible

    def test_analytic_lambda_source(self):
        bound = certainty_bound(K2_MODEL, K2_GRID, eta_max=1e-7, lambda_source="analytic")
        lam = bound.lambda_min_analytic
        expected = 2 * 10 * 11 * math.sqrt(10.0) / lam**1.5 * 1e-7
        assert bound.bound_total == pytest.approx(expected, rel=1e-12)

    def test_series_route_matches_model_route(self):
        series = synthesize_autocorrelation(K2_MODEL, K2_GRID)
        b_series = certainty_bound(series, eta_max=1e-7, k=2)
        b_model = certainty_bound(K2_MODEL, K2_GRID, eta_max=1e-7)
        assert b_series.bound_total == pytest.approx(b_model.bound_total, rel=1e-6)
        assert math.isnan(b_series.lambda_min_analytic)
        assert math.isnan(b_series.delta_eff)

    def test_series_route_detects_rank(self):
        series = apply_noise(
            synthesize_autocorrelation(K2_MODEL, K2_GRID), NoiseSpec(1e-7, seed=4)
        )
        bound = certainty_bound(series, eta_max=1e-7)
        assert bound.k == 2

    def test_series_route_rejects_analytic_source(self):
        series = synthesize_autocorrelation(K2_MODEL, K2_GRID)
        with pytest.raises(ValueError, match="analytic"):
            certainty_bound(series, eta_max=1e-7, k=2, lambda_source="analytic")

    def test_ingredient_dict_is_complete(self):
        d = certainty_bound(K2_MODEL, K2_GRID, eta_max=1e-7).as_dict()
        for key in (
            "lambda_min_exact", "lambda_min_analytic", "lambda_1", "trace_s",
            "kappa", "kappa_upper", "delta_eff", "bound_per_step", "bound_total",
            "eta_max", "admissible",
        ):
            assert key in d
