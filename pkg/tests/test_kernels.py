"""Population algebra: weighted scatter, locally adapted covariances,
Gaussian proposals, importance weights, ESS."""

from __future__ import annotations

import numpy as np
import pytest

from fhnabc.errors import EmptyTruncationError
from fhnabc.kernels import (
    Particle,
    Population,
    ess,
    kernel_density,
    olcm_covariance,
    perturb,
    spd_factor,
    update_weights,
    weighted_covariance,
)
from fhnabc.model import ModelParams
from fhnabc.priors import PriorSpec, prior_density


def _population(thetas, weights, distances, iteration=1, threshold=1.0):
    return Population(np.asarray(thetas, float), np.asarray(weights, float),
                      np.asarray(distances, float), iteration, threshold)


def _spread_population(rng, n, scale=1.0):
    thetas = rng.uniform(0.5, 2.0, (n, 4)) * scale
    w = rng.uniform(0.2, 1.0, n)
    return _population(thetas, w / w.sum(), rng.uniform(0.0, 1.0, n))


class TestPopulation:
    def test_weights_must_normalize(self):
        with pytest.raises(ValueError):
            _population(np.zeros((3, 4)), [0.5, 0.4, 0.2], np.zeros(3))

    def test_particles_round_trip(self):
        rng = np.random.default_rng(0)
        pop = _spread_population(rng, 5)
        rebuilt = Population.from_particles(pop.particles, pop.iteration, pop.threshold)
        np.testing.assert_array_equal(rebuilt.thetas, pop.thetas)
        np.testing.assert_array_equal(rebuilt.weights, pop.weights)
        assert isinstance(pop.particles[0], Particle)


class TestWeightedCovariance:
    def test_identical_particles_give_zero(self):
        pop = _population(np.tile([0.1, 1.5, 0.8, 0.3], (4, 1)), np.full(4, 0.25),
                          np.zeros(4))
        np.testing.assert_array_equal(weighted_covariance(pop), np.zeros((4, 4)))

    def test_two_point_hand_case(self):
        pop = _population([[1, 0, 0, 0], [-1, 0, 0, 0]], [0.5, 0.5], [0, 0])
        cov = weighted_covariance(pop)
        assert cov[0, 0] == 1.0
        assert np.abs(cov).sum() == 1.0

    def test_degenerate_weights_ignore_other_particles(self):
        pop = _population([[1, 2, 3, 4], [9, 9, 9, 9], [5, 5, 5, 5]],
                          [1.0, 0.0, 0.0], [0, 0, 0])
        np.testing.assert_array_equal(weighted_covariance(pop), np.zeros((4, 4)))

    def test_no_bias_correction(self):
        rng = np.random.default_rng(1)
        pop = _spread_population(rng, 6)
        mu = pop.weights @ pop.thetas
        direct = sum(
            w * np.outer(t - mu, t - mu) for w, t in zip(pop.weights, pop.thetas)
        )
        np.testing.assert_allclose(weighted_covariance(pop), direct, atol=1e-14)


class TestOlcmCovariance:
    def test_matches_brute_force_sum(self):
        rng = np.random.default_rng(2)
        pop = _spread_population(rng, 6)
        center = np.array([1.0, 1.2, 0.9, 1.1])
        delta = np.percentile(pop.distances, 80)
        keep = pop.distances < delta
        mu = pop.weights[keep] / pop.weights[keep].sum()
        oracle = sum(
            m * np.outer(t - center, t - center)
            for m, t in zip(mu, pop.thetas[keep])
        )
        np.testing.assert_allclose(
            olcm_covariance(center, pop, delta), oracle, rtol=0, atol=1e-12
        )

    def test_keep_all_center_mean_reduces_to_weighted_covariance(self):
        rng = np.random.default_rng(3)
        pop = _spread_population(rng, 8)
        mu = pop.weights @ pop.thetas
        np.testing.assert_allclose(
            olcm_covariance(mu, pop, delta_r=2.0), weighted_covariance(pop),
            rtol=0, atol=1e-12,
        )

    def test_single_survivor_at_center_still_samples(self):
        thetas = np.tile([0.1, 1.5, 0.8, 0.3], (3, 1))
        pop = _population(thetas, np.full(3, 1 / 3), [0.05, 0.9, 0.9])
        cov = olcm_covariance(ModelParams(0.1, 1.5, 0.8, 0.3), pop, 0.1)
        draw = perturb(ModelParams(0.1, 1.5, 0.8, 0.3), cov, np.random.default_rng(0))
        assert np.all(np.isfinite(draw.as_array()))
        assert np.linalg.eigvalsh(cov).min() > 0.0

    def test_empty_truncation_rejected(self):
        rng = np.random.default_rng(4)
        pop = _spread_population(rng, 4)
        with pytest.raises(EmptyTruncationError):
            olcm_covariance(pop.thetas[0], pop, delta_r=-1.0)


class TestPerturb:
    def test_zero_covariance_returns_mean_exactly(self):
        mean = ModelParams(0.1, 1.5, 0.8, 0.3)
        out = perturb(mean, np.zeros((4, 4)), np.random.default_rng(0))
        assert out == mean

    def test_gaussian_moments(self):
        rng = np.random.default_rng(5)
        mean = np.array([0.1, 1.5, 0.8, 0.3])
        draws = np.array([perturb(mean, np.eye(4), rng).as_array() for _ in range(100_000)])
        np.testing.assert_allclose(draws.mean(axis=0), mean, rtol=0, atol=0.02)
        np.testing.assert_allclose(draws.var(axis=0), 1.0, rtol=0, atol=0.02)

    def test_empirical_covariance_converges(self):
        rng = np.random.default_rng(6)
        cov = np.array([
            [1.0, 0.3, 0.0, 0.1],
            [0.3, 1.5, -0.2, 0.0],
            [0.0, -0.2, 0.8, 0.2],
            [0.1, 0.0, 0.2, 1.2],
        ])
        draws = np.array([
            perturb(np.zeros(4), cov, rng).as_array() for _ in range(100_000)
        ])
        np.testing.assert_allclose(np.cov(draws.T), cov, rtol=0, atol=0.05)

    def test_seeded_determinism(self):
        mean = np.array([0.1, 1.5, 0.8, 0.3])
        a = perturb(mean, np.eye(4) * 0.01, np.random.default_rng(9))
        b = perturb(mean, np.eye(4) * 0.01, np.random.default_rng(9))
        assert a == b


class TestKernelDensity:
    def test_identity_covariance_at_mean(self):
        value = kernel_density(np.zeros(4), np.zeros(4), np.eye(4))
        assert value == pytest.approx((2 * np.pi) ** -2, rel=1e-12)

    def test_symmetry_in_point_and_mean(self):
        rng = np.random.default_rng(7)
        a, b = rng.normal(size=4), rng.normal(size=4)
        cov = np.eye(4) * 0.7
        assert kernel_density(a, b, cov) == pytest.approx(
            kernel_density(b, a, cov), rel=1e-14
        )

    def test_determinant_scaling(self):
        d1 = kernel_density(np.zeros(4), np.zeros(4), np.eye(4))
        d2 = kernel_density(np.zeros(4), np.zeros(4), 2 * np.eye(4))
        assert d1 / d2 == pytest.approx(4.0, rel=1e-12)


class TestUpdateWeights:
    def _setup(self):
        prev = _population(
            [[0.1, 1.5, 0.8, 0.3], [0.12, 1.4, 0.9, 0.25], [0.2, 2.0, 1.0, 0.5]],
            [0.5, 0.3, 0.2], [0.1, 0.2, 0.3],
        )
        new = np.array([
            [0.11, 1.45, 0.85, 0.28],
            [0.15, 1.70, 0.95, 0.40],
            [0.09, 1.30, 0.70, 0.20],
        ])
        return prev, new

    def test_matches_brute_force_shared_covariance(self):
        prev, new = self._setup()
        spec = PriorSpec.uniform_simulation()
        cov = np.eye(4) * 0.01
        w = update_weights(new, prev, cov, spec)
        oracle = np.array([
            prior_density(spec, new[j]) / sum(
                prev.weights[l] * kernel_density(new[j], prev.thetas[l], cov)
                for l in range(3)
            )
            for j in range(3)
        ])
        oracle /= oracle.sum()
        np.testing.assert_allclose(w, oracle, rtol=0, atol=1e-12)
        assert w.sum() == pytest.approx(1.0, abs=1e-12)

    def test_matches_brute_force_per_source_covariances(self):
        prev, new = self._setup()
        spec = PriorSpec.uniform_simulation()
        covs = np.stack([np.eye(4) * s for s in (0.01, 0.02, 0.05)])
        w = update_weights(new, prev, covs, spec)
        oracle = np.array([
            prior_density(spec, new[j]) / sum(
                prev.weights[l] * kernel_density(new[j], prev.thetas[l], covs[l])
                for l in range(3)
            )
            for j in range(3)
        ])
        oracle /= oracle.sum()
        np.testing.assert_allclose(w, oracle, rtol=0, atol=1e-12)

    def test_single_previous_particle_normalizes_to_one(self):
        prev = _population([[0.1, 1.5, 0.8, 0.3]], [1.0], [0.1])
        new = np.array([[0.12, 1.52, 0.81, 0.31]])
        w = update_weights(new, prev, np.eye(4) * 0.01, PriorSpec.uniform_simulation())
        assert w == pytest.approx([1.0])

    def test_invariance_to_constant_prior_rescaling(self):
        """Normalization cancels any constant factor in the unnormalized
        weights; two uniform priors differing only in volume agree."""
        prev, new = self._setup()
        wide = PriorSpec("uniform_conditional", (0.01, 0.5, 6.0, 0.01, 6.0, 0.01, 1.0))
        narrow = PriorSpec("uniform_conditional", (0.01, 0.5, 6.0, 0.01, 6.0, 0.01, 0.5))
        cov = np.eye(4) * 0.01
        np.testing.assert_allclose(
            update_weights(new, prev, cov, wide),
            update_weights(new, prev, cov, narrow),
            rtol=0, atol=1e-12,
        )


class TestEss:
    def test_equal_weights(self):
        assert ess(np.full(10, 0.1)) == pytest.approx(10.0)

    def test_single_atom(self):
        assert ess([1.0, 0.0, 0.0]) == pytest.approx(1.0)

    def test_hand_value(self):
        assert ess([0.5, 0.5, 0.0, 0.0]) == pytest.approx(2.0)


class TestSpdFactor:
    def test_zero_matrix_factors_to_zero(self):
        np.testing.assert_array_equal(spd_factor(np.zeros((4, 4))), np.zeros((4, 4)))

    def test_rank_deficient_gets_jitter(self):
        v = np.array([1.0, 2.0, 3.0, 4.0])
        cov = np.outer(v, v)  # rank 1
        L = spd_factor(cov)
        np.testing.assert_allclose(L @ L.T, cov, rtol=0, atol=1e-7)
