"""Particle populations, Gaussian proposal samplers, and importance weights.

Two proposal covariances are supported.  The ``standard`` sampler perturbs
every particle with twice the weighted covariance of the whole previous
population.  The ``olcm`` sampler builds, per proposal mean, the scatter of
the previous particles that already beat the current threshold (weights
renormalized over that subset), a locally adapted covariance that typically
buys a higher acceptance rate per simulation.

4x4 covariance matrices are plain numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegeneratePopulationError,
    EmptyTruncationError,
    NumericalError,
)
from .model import ModelParams
from .priors import PriorSpec, prior_density_batch

__all__ = [
    "Particle",
    "Population",
    "weighted_covariance",
    "olcm_covariance",
    "perturb",
    "kernel_density",
    "update_weights",
    "ess",
    "spd_factor",
]

_WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Particle:
    params: ModelParams
    weight: float
    distance: float


@dataclass
class Population:
    """N weighted particles kept at one iteration, stored columnwise.

    ``thetas`` is (N, 4) in the order epsilon, gamma, beta, sigma; weights
    must be normalized.
    """

    thetas: np.ndarray
    weights: np.ndarray
    distances: np.ndarray
    iteration: int
    threshold: float

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        self.distances = np.asarray(self.distances, dtype=float)
        n = self.thetas.shape[0]
        if self.thetas.shape != (n, 4):
            raise ValueError("thetas must have shape (N, 4)")
        if self.weights.shape != (n,) or self.distances.shape != (n,):
            raise ValueError("weights/distances must have shape (N,)")
        if abs(self.weights.sum() - 1.0) > _WEIGHT_SUM_TOL:
            raise ValueError("weights must sum to 1")

    def __len__(self) -> int:
        return self.thetas.shape[0]

    @property
    def particles(self) -> tuple[Particle, ...]:
        return tuple(
            Particle(ModelParams.from_array(t), float(w), float(d))
            for t, w, d in zip(self.thetas, self.weights, self.distances)
        )

    @classmethod
    def from_particles(cls, particles, iteration: int, threshold: float) -> "Population":
        return cls(
            thetas=np.array([p.params.as_array() for p in particles]),
            weights=np.array([p.weight for p in particles]),
            distances=np.array([p.distance for p in particles]),
            iteration=iteration,
            threshold=threshold,
        )


def weighted_covariance(pop: Population) -> np.ndarray:
    """Weighted scatter around the weighted mean, no bias correction."""
    mu = pop.weights @ pop.thetas
    centered = pop.thetas - mu
    return (centered * pop.weights[:, None]).T @ centered


def olcm_covariance(center, prev_pop: Population, delta_r: float) -> np.ndarray:
    """Locally adapted proposal covariance around one proposal mean.

    Uses only the previous particles whose distances already beat ``delta_r``
    (weights renormalized over that subset) and takes their scatter around
    ``center``.  When ``delta_r`` is a percentile of the previous accepted
    distances this subset is nonempty by construction.
    """
    if isinstance(center, ModelParams):
        center = center.as_array()
    center = np.asarray(center, dtype=float)
    keep = prev_pop.distances < delta_r
    if not keep.any():
        raise EmptyTruncationError(f"no previous particle has distance < {delta_r}")
    w = prev_pop.weights[keep]
    w = w / w.sum()
    centered = prev_pop.thetas[keep] - center
    cov = (centered * w[:, None]).T @ centered
    return _ensure_spd(cov)


def _ensure_spd(cov: np.ndarray) -> np.ndarray:
    """Return cov, jittered on the diagonal if it fails to factorize."""
    try:
        np.linalg.cholesky(cov)
        return cov
    except np.linalg.LinAlgError:
        jit = 1e-10 * (1.0 + np.trace(cov))
        for _ in range(10):
            try:
                np.linalg.cholesky(cov + jit * np.eye(4))
                return cov + jit * np.eye(4)
            except np.linalg.LinAlgError:
                jit *= 2.0
    raise NumericalError("covariance cannot be made positive definite")


def spd_factor(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor under the shared jitter policy.

    An all-zero matrix factors to zero (a legitimate degenerate proposal that
    reproduces its mean exactly).
    """
    cov = np.asarray(cov, dtype=float)
    if not np.any(cov):
        return np.zeros_like(cov)
    return np.linalg.cholesky(_ensure_spd(cov))


def perturb(mean, cov: np.ndarray, rng: np.random.Generator) -> ModelParams:
    """One multivariate normal draw around ``mean``.

    No truncation or reflection is applied; draws outside the prior support
    or the kappa > 0 regime are for the caller to filter.
    """
    if isinstance(mean, ModelParams):
        mean = mean.as_array()
    L = spd_factor(cov)
    draw = np.asarray(mean, dtype=float) + L @ rng.standard_normal(4)
    return ModelParams.from_array(draw)


def kernel_density(point, mean, cov: np.ndarray) -> float:
    """Density of N(mean, cov) at ``point`` (4-dimensional)."""
    if isinstance(point, ModelParams):
        point = point.as_array()
    if isinstance(mean, ModelParams):
        mean = mean.as_array()
    L = np.linalg.cholesky(_ensure_spd(np.asarray(cov, dtype=float)))
    diff = np.asarray(point, dtype=float) - np.asarray(mean, dtype=float)
    y = np.linalg.solve(L, diff)
    log_det = 2.0 * np.sum(np.log(np.diag(L)))
    log_pdf = -0.5 * (y @ y) - 0.5 * log_det - 2.0 * np.log(2.0 * np.pi)
    return float(np.exp(log_pdf))


def _kernel_density_matrix(points: np.ndarray, means: np.ndarray, covs: np.ndarray) -> np.ndarray:
    """(M, L) matrix of N(means[l], cov_l) densities at points[m].

    ``covs`` is either a single (4, 4) matrix shared by all means or an
    (L, 4, 4) stack with one covariance per mean.
    """
    points = np.asarray(points, dtype=float)
    means = np.asarray(means, dtype=float)
    M, L_n = points.shape[0], means.shape[0]
    out = np.empty((M, L_n))
    covs = np.asarray(covs, dtype=float)
    if covs.ndim == 2:
        chol = np.linalg.cholesky(_ensure_spd(covs))
        log_det = 2.0 * np.sum(np.log(np.diag(chol)))
        inv = np.linalg.inv(chol)
        # quadratic form via the whitened differences, all pairs at once
        diff = points[:, None, :] - means[None, :, :]
        y = diff @ inv.T
        q = np.einsum("mlk,mlk->ml", y, y)
        return np.exp(-0.5 * q - 0.5 * log_det - 2.0 * np.log(2.0 * np.pi))
    for l in range(L_n):
        chol = np.linalg.cholesky(_ensure_spd(covs[l]))
        log_det = 2.0 * np.sum(np.log(np.diag(chol)))
        y = np.linalg.solve(chol, (points - means[l]).T).T
        q = np.einsum("mk,mk->m", y, y)
        out[:, l] = np.exp(-0.5 * q - 0.5 * log_det - 2.0 * np.log(2.0 * np.pi))
    return out


def update_weights(
    new_thetas: np.ndarray,
    prev_pop: Population,
    covs: np.ndarray,
    prior: PriorSpec,
) -> np.ndarray:
    """Normalized importance weights of freshly accepted particles.

    Each unnormalized weight is the prior density at the particle divided by
    the weighted mixture of proposal-kernel densities over the previous
    population; ``covs`` is the shared (4, 4) proposal covariance for the
    standard sampler or the (N_prev, 4, 4) per-source stack for olcm.
    """
    new_thetas = np.asarray(new_thetas, dtype=float)
    numer = prior_density_batch(prior, new_thetas)
    dens = _kernel_density_matrix(new_thetas, prev_pop.thetas, covs)
    denom = dens @ prev_pop.weights
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = np.where(denom > 0.0, numer / np.where(denom > 0.0, denom, 1.0), 0.0)
    total = raw.sum()
    if total <= 0.0:
        raise DegeneratePopulationError("all unnormalized weights are zero")
    return raw / total


def ess(weights) -> float:
    """Effective sample size 1 / sum(w^2) of normalized weights."""
    w = np.asarray(weights, dtype=float)
    return float(1.0 / np.sum(w * w))
