"""Density, spectrum, and canonical summary estimators against analytic and
brute-force oracles."""

from __future__ import annotations

import numpy as np
import pytest

from fhnabc.distances import Curve, iae, spectral_weight, structure_distance
from fhnabc.errors import DegenerateDataError, InsufficientDataError
from fhnabc.model import ModelParams, State, simulate_paths_batch
from fhnabc.summaries import (
    autocorrelation,
    canonical_summary,
    default_smoothing_spans,
    estimate_density,
    estimate_spectrum,
    structure_summary,
)

THETA = ModelParams(0.1, 1.5, 0.8, 0.3)
THETA_OFF = ModelParams(0.1, 1.6, 0.8, 0.4)


def _paths(thetas, n, seed):
    rng = np.random.default_rng(seed)
    arr = np.array([t.as_array() for t in thetas])
    noise = rng.standard_normal((len(thetas), n, 2))
    V, _ = simulate_paths_batch(arr, State(0, 0), 0.02, n, noise, keep_u=False)
    return V


class TestDensity:
    def test_standard_normal_value_at_zero(self):
        x = np.random.default_rng(0).standard_normal(100_000)
        d = estimate_density(x, 1000)
        nearest = np.argmin(np.abs(d.grid))
        assert d.values[nearest] == pytest.approx(1.0 / np.sqrt(2 * np.pi), abs=0.01)

    def test_integral_close_to_one(self):
        rng = np.random.default_rng(1)
        for x in (rng.standard_normal(5000), rng.uniform(-1, 4, 2000),
                  rng.exponential(2.0, 3000)):
            d = estimate_density(x, 1000)
            integral = float(d.values[:-1] @ np.diff(d.grid))
            assert integral == pytest.approx(1.0, abs=1e-3)
            assert np.all(d.values >= 0.0)

    def test_translation_equivariance(self):
        x = np.random.default_rng(2).standard_normal(4000)
        a = estimate_density(x, 500)
        b = estimate_density(x + 3.7, 500)
        np.testing.assert_allclose(b.grid - 3.7, a.grid, rtol=0, atol=1e-12)
        np.testing.assert_allclose(b.values, a.values, rtol=1e-9, atol=1e-12)
        assert b.bandwidth == pytest.approx(a.bandwidth, rel=1e-12)

    def test_matches_direct_kernel_sum(self):
        """Binned FFT evaluation equals the brute-force kernel sum."""
        x = np.random.default_rng(3).standard_normal(800)
        d = estimate_density(x, 400)
        sub = slice(0, 400, 40)
        direct = np.array([
            np.mean(np.exp(-0.5 * ((g - x) / d.bandwidth) ** 2))
            / (d.bandwidth * np.sqrt(2 * np.pi))
            for g in d.grid[sub]
        ])
        np.testing.assert_allclose(d.values[sub], direct, rtol=0, atol=1e-4)

    def test_grid_span_and_size(self):
        x = np.random.default_rng(4).uniform(2.0, 5.0, 1000)
        d = estimate_density(x, 777)
        assert d.grid.size == 777 and d.values.size == 777
        assert d.grid[0] == pytest.approx(x.min() - 3 * d.bandwidth)
        assert d.grid[-1] == pytest.approx(x.max() + 3 * d.bandwidth)

    def test_bandwidth_reference_rule(self):
        x = np.random.default_rng(5).standard_normal(2500)
        d = estimate_density(x)
        sd = np.std(x, ddof=1)
        iqr = np.percentile(x, 75) - np.percentile(x, 25)
        expected = 0.9 * min(sd, iqr / 1.34) * x.size ** (-0.2)
        assert d.bandwidth == pytest.approx(expected, rel=1e-12)

    def test_degenerate_and_short_inputs(self):
        with pytest.raises(DegenerateDataError):
            estimate_density(np.full(100, 2.5))
        with pytest.raises(InsufficientDataError):
            estimate_density(np.array([1.0]))


class TestSpectrum:
    def test_values_nonnegative_and_nyquist_bounded(self):
        x = np.random.default_rng(0).standard_normal(501)
        s = estimate_spectrum(x)
        assert np.all(s.values >= 0.0)
        assert np.all(s.frequencies > 0.0)
        assert s.frequencies[-1] <= 0.5
        assert np.all(np.diff(s.frequencies) > 0)

    def test_sinusoid_peaks_at_its_frequency(self):
        n, k0 = 256, 32
        x = np.sin(2 * np.pi * k0 * np.arange(n) / n)
        s = estimate_spectrum(x, smoothing_spans=())
        assert s.frequencies[np.argmax(s.values)] == pytest.approx(k0 / n)

    def test_unsmoothed_matches_direct_dft(self):
        """Raw periodogram equals an explicit DFT oracle of the same
        detrended, tapered series."""
        rng = np.random.default_rng(6)
        x = rng.standard_normal(64)
        s = estimate_spectrum(x, smoothing_spans=())

        n = x.size
        t = np.arange(n)
        coef = np.polyfit(t, x, 1)
        y = x - np.polyval(coef, t)
        m = int(np.floor(0.1 * n))
        w = np.ones(n)
        ramp = 0.5 * (1 - np.cos(np.pi * (np.arange(1, m + 1) - 0.5) / m))
        w[:m], w[-m:] = ramp, ramp[::-1]
        y = y * w
        u2 = np.mean(w**2)
        ks = np.arange(1, n // 2 + 1)
        dft = np.array([np.sum(y * np.exp(-2j * np.pi * k * t / n)) for k in ks])
        oracle = np.abs(dft) ** 2 / (n * u2)
        np.testing.assert_allclose(s.values, oracle, rtol=1e-9, atol=1e-12)

    def test_white_noise_is_flat_after_smoothing(self):
        x = np.random.default_rng(7).standard_normal(10_000)
        s = estimate_spectrum(x)
        cv = s.values.std() / s.values.mean()
        assert cv < 0.5
        assert s.values.mean() == pytest.approx(1.0, abs=0.1)

    def test_default_span_scale(self):
        assert default_smoothing_spans(10_000) == (101,)
        assert default_smoothing_spans(625) == (25,)

    def test_too_short_series(self):
        with pytest.raises(InsufficientDataError):
            estimate_spectrum(np.arange(7.0))


class TestStructureSummary:
    def test_deterministic(self):
        x = np.random.default_rng(8).standard_normal(600)
        a, b = structure_summary(x), structure_summary(x)
        np.testing.assert_array_equal(a.density.values, b.density.values)
        np.testing.assert_array_equal(a.spectrum.values, b.spectrum.values)

    def test_same_theta_robust_across_seeds(self):
        """Seed-to-seed variation of the summaries stays within the
        calibrated tolerances (density IAE < 0.25, spectrum IAE < 0.45*area)."""
        V = _paths([THETA, THETA], 10_000, seed=9)
        s1, s2 = structure_summary(V[0]), structure_summary(V[1])
        alpha = spectral_weight(s1.spectrum)
        d_dens = iae(Curve.from_density(s1.density), Curve.from_density(s2.density))
        d_spec = iae(Curve.from_spectrum(s1.spectrum), Curve.from_spectrum(s2.spectrum))
        assert d_dens < 0.25
        assert d_spec < 0.45 * alpha

    def test_cross_theta_separation(self):
        V = _paths([THETA, THETA, THETA_OFF], 10_000, seed=10)
        s_ref, s_same, s_off = map(structure_summary, V)
        alpha = spectral_weight(s_ref.spectrum)
        assert structure_distance(s_ref, s_off, alpha) > structure_distance(
            s_ref, s_same, alpha
        )

    def test_sensitivity_ordering_over_replications(self):
        """Cross-parameter distances dominate same-parameter distances in at
        least 95 of 100 seeded replications."""
        wins = 0
        for rep in range(100):
            V = _paths([THETA, THETA, THETA_OFF], 10_000, seed=1000 + rep)
            s_ref, s_same, s_off = map(structure_summary, V)
            alpha = spectral_weight(s_ref.spectrum)
            wins += structure_distance(s_ref, s_off, alpha) > structure_distance(
                s_ref, s_same, alpha
            )
        assert wins >= 95

    def test_initial_segment_insensitivity(self):
        """Dropping the first 10% of a long path moves the summaries by less
        than twice a typical seed-to-seed difference."""
        ratios = []
        for seed in (21, 22, 23):
            V = _paths([THETA, THETA], 10_000, seed=seed)
            full, other = structure_summary(V[0]), structure_summary(V[1])
            trimmed = structure_summary(V[0][1000:])
            alpha = spectral_weight(full.spectrum)
            d_trim = structure_distance(full, trimmed, alpha)
            d_seed = structure_distance(full, other, alpha)
            ratios.append(d_trim / d_seed)
        assert np.mean(ratios) < 2.0


class TestCanonicalSummary:
    def test_arithmetic_progression(self):
        c = canonical_summary(np.arange(1.0, 9.0))
        assert c.values.shape == (18,)
        assert c.values[0] == pytest.approx(4.5)
        # constant differences: scale statistics of the second block vanish
        assert c.values[9] == pytest.approx(1.0)
        np.testing.assert_allclose(c.values[10:], 0.0, atol=1e-15)

    def test_white_noise_moments_and_acf(self):
        x = np.random.default_rng(11).standard_normal(10_000)
        c = canonical_summary(x)
        assert np.all(np.abs(c.values[4:9]) < 0.05)
        assert c.values[1] == pytest.approx(1.0, abs=0.05)  # variance
        assert c.values[3] == pytest.approx(3.0, abs=0.2)  # kurtosis
        # differencing white noise yields an MA(1): acf -0.5 at lag 1, then 0
        assert c.values[10] == pytest.approx(2.0, abs=0.1)  # diff variance
        assert c.values[13] == pytest.approx(-0.5, abs=0.05)
        assert np.all(np.abs(c.values[14:18]) < 0.05)

    def test_shift_changes_only_the_mean(self):
        x = np.random.default_rng(12).standard_normal(500)
        a, b = canonical_summary(x), canonical_summary(x + 5.0)
        assert b.values[0] == pytest.approx(a.values[0] + 5.0)
        np.testing.assert_allclose(b.values[1:], a.values[1:], rtol=1e-9, atol=1e-12)

    def test_acf_entries_bounded(self):
        x = np.random.default_rng(13).standard_normal(300)
        c = canonical_summary(x)
        for idx in (*range(4, 9), *range(13, 18)):
            assert -1.0 <= c.values[idx] <= 1.0

    def test_errors(self):
        with pytest.raises(InsufficientDataError):
            canonical_summary(np.arange(6.0))
        with pytest.raises(DegenerateDataError):
            canonical_summary(np.full(50, 1.0))


class TestAutocorrelation:
    def test_lag_zero_normalization(self):
        x = np.random.default_rng(14).standard_normal(200)
        xc = x - x.mean()
        c0 = xc @ xc / x.size
        assert c0 / c0 == 1.0
        acf = autocorrelation(x, 3)
        assert acf.shape == (3,)

    def test_ar1_matches_analytic(self):
        rng = np.random.default_rng(15)
        n, phi = 100_000, 0.8
        x = np.empty(n)
        x[0] = rng.standard_normal()
        eps = rng.standard_normal(n)
        for i in range(1, n):
            x[i] = phi * x[i - 1] + eps[i]
        acf = autocorrelation(x, 5)
        np.testing.assert_allclose(acf, phi ** np.arange(1, 6), rtol=0, atol=0.02)

    def test_reversal_invariance(self):
        x = np.random.default_rng(16).standard_normal(400)
        np.testing.assert_allclose(
            autocorrelation(x, 5), autocorrelation(x[::-1], 5), rtol=0, atol=1e-12
        )

    def test_zero_variance_rejected(self):
        with pytest.raises(DegenerateDataError):
            autocorrelation(np.ones(50), 2)
