"""Sequential Monte Carlo ABC driver with budget stopping.

The run starts with a pilot study that fixes the initial tolerance as a
percentile of prior-predictive distances.  Iteration 1 is plain
acceptance-rejection from the prior; later iterations resample the previous
weighted population, perturb with the configured Gaussian kernel, filter
proposals by prior support and the weakly damped regime, and accept particles
whose summary distance beats the iteration threshold (the percentile of the
previously accepted distances).  The loop exits after the first completed
iteration at which the cumulative number of model simulations reaches the
budget, so the final iteration may overshoot it.

Randomness is keyed by (iteration, slot): every acceptance slot owns a
private substream derived from the run seed, and its repeat loop reuses that
substream.  Results are therefore reproducible bit for bit no matter how the
slots are batched or distributed.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataio import ObservedSeries
from .distances import Curve, iae, spectral_weight, wasserstein1, weighted_euclidean
from .errors import ConfigError
from .kernels import (
    Population,
    ess,
    olcm_covariance,
    spd_factor,
    update_weights,
    weighted_covariance,
)
from .model import State, simulate_paths_batch
from .priors import PriorSpec, prior_density_batch, prior_sample
from .summaries import CanonicalSummary, canonical_summary, structure_summary

__all__ = [
    "EngineConfig",
    "IterationRecord",
    "RunTrace",
    "PilotResult",
    "percentile_interpolated",
    "next_threshold",
    "pilot_threshold",
    "run_smc_abc",
]

logger = logging.getLogger(__name__)

_SUMMARY_KINDS = ("structure", "canonical")
_DISTANCE_KINDS = ("iae", "iae_wasserstein", "weighted_euclidean")
_KERNEL_KINDS = ("standard", "olcm")
# cap on simultaneous simulation state, in grid points (memory bound)
_BATCH_POINTS = 16_000_000


@dataclass(frozen=True)
class EngineConfig:
    """Full inference configuration.

    ``budget`` counts synthetic dataset simulations (pilot excluded);
    ``sim_horizon`` and ``sim_step`` define the simulation grid, which is
    then subsampled to ``obs_step``.  ``center`` mean-centers both the
    observed and every synthetic series before summarization (real-data
    mode).
    """

    budget: int
    sim_horizon: float
    obs_step: float
    prior: PriorSpec
    n_particles: int = 1000
    percentile: float = 50.0
    sim_step: float = 0.02
    summary_kind: str = "structure"
    distance_kind: str = "iae"
    kernel_kind: str = "standard"
    x0_v: float = 0.0
    x0_u: float = 0.0
    seed: int = 0
    pilot_size: int = 10_000
    center: bool = False
    alpha_mode: str = "area"

    def __post_init__(self):
        if self.n_particles < 1:
            raise ConfigError("n_particles must be >= 1")
        if not 0.0 < self.percentile < 100.0:
            raise ConfigError("percentile must lie in (0, 100)")
        if self.budget < self.n_particles:
            raise ConfigError("budget must be at least n_particles")
        if self.n_particles > self.pilot_size:
            raise ConfigError("n_particles must not exceed pilot_size")
        if self.sim_step <= 0.0 or self.sim_horizon <= 0.0:
            raise ConfigError("sim_step and sim_horizon must be positive")
        factor = self.obs_step / self.sim_step
        if abs(factor - round(factor)) > 1e-9 * max(1.0, factor) or round(factor) < 1:
            raise ConfigError("obs_step must be a positive integer multiple of sim_step")
        if self.summary_kind not in _SUMMARY_KINDS:
            raise ConfigError(f"summary_kind must be one of {_SUMMARY_KINDS}")
        if self.distance_kind not in _DISTANCE_KINDS:
            raise ConfigError(f"distance_kind must be one of {_DISTANCE_KINDS}")
        if self.kernel_kind not in _KERNEL_KINDS:
            raise ConfigError(f"kernel_kind must be one of {_KERNEL_KINDS}")
        if self.summary_kind == "structure" and self.distance_kind == "weighted_euclidean":
            raise ConfigError("weighted_euclidean distance requires canonical summaries")
        if self.summary_kind == "canonical" and self.distance_kind != "weighted_euclidean":
            raise ConfigError("canonical summaries require the weighted_euclidean distance")
        if self.alpha_mode not in ("area", "magnitude"):
            raise ConfigError("alpha_mode must be 'area' or 'magnitude'")

    @property
    def n_steps(self) -> int:
        return int(round(self.sim_horizon / self.sim_step))

    @property
    def subsample_factor(self) -> int:
        return int(round(self.obs_step / self.sim_step))

    @property
    def x0(self) -> State:
        return State(self.x0_v, self.x0_u)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    threshold: float
    cumulative_nsim: int
    acceptance_rate: float
    ess: float
    wall_time: float
    immediate_rejections: int


@dataclass
class RunTrace:
    """Per-iteration diagnostics plus the pilot bookkeeping."""

    records: list[IterationRecord] = field(default_factory=list)
    pilot_nsim: int = 0
    pilot_redraws: int = 0

    def thresholds(self) -> np.ndarray:
        return np.array([rec.threshold for rec in self.records])

    def cumulative_nsim(self) -> np.ndarray:
        return np.array([rec.cumulative_nsim for rec in self.records])


@dataclass(frozen=True)
class PilotResult:
    threshold: float
    distances: np.ndarray
    canonical_weights: np.ndarray | None
    nsim: int
    redraws: int


def percentile_interpolated(values, p: float) -> float:
    """Percentile with linear interpolation between order statistics at rank
    1 + p/100 * (m - 1)."""
    return float(np.percentile(np.asarray(values, dtype=float), p))


def next_threshold(accepted_distances, p: float) -> float:
    """Tolerance for the next iteration: percentile of the accepted distances."""
    d = np.asarray(accepted_distances, dtype=float)
    if d.size == 0:
        raise ValueError("need at least one distance")
    return percentile_interpolated(d, p)


def _slot_rng(seed: int, iteration: int, slot: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(iteration, slot)))


class _DistanceContext:
    """Observed-side summaries plus the distance evaluation for synthetic series."""

    def __init__(self, cfg: EngineConfig, obs_values: np.ndarray):
        self.cfg = cfg
        self.obs_values = obs_values
        self.canonical_weights: np.ndarray | None = None
        if cfg.summary_kind == "structure":
            s = structure_summary(obs_values)
            self.obs_summary = s
            self.obs_density = Curve.from_density(s.density)
            self.obs_spectrum = Curve.from_spectrum(s.spectrum)
            self.alpha = spectral_weight(s.spectrum, cfg.alpha_mode)
        else:
            self.obs_canonical = canonical_summary(obs_values)

    def summarize(self, series: np.ndarray):
        if self.cfg.summary_kind == "structure":
            return structure_summary(series), series
        return canonical_summary(series), series

    def distance(self, summary, series: np.ndarray) -> float:
        cfg = self.cfg
        if cfg.summary_kind == "structure":
            d_spec = iae(self.obs_spectrum, Curve.from_spectrum(summary.spectrum))
            if cfg.distance_kind == "iae":
                d_dens = iae(self.obs_density, Curve.from_density(summary.density))
            else:
                d_dens = wasserstein1(self.obs_values, series)
            return d_spec + self.alpha * d_dens
        if self.canonical_weights is None:
            raise RuntimeError("canonical weights not set; run the pilot first")
        return weighted_euclidean(self.obs_canonical, summary, self.canonical_weights)


def _simulate_chunk(cfg: EngineConfig, thetas: np.ndarray, rngs) -> np.ndarray:
    """Simulate one subsampled (and optionally centered) series per theta.

    The noise of each path comes from its own slot generator.  Blown-up
    paths propagate NaNs into their rows; callers treat those as rejections.
    """
    B, n = thetas.shape[0], cfg.n_steps
    noise = np.empty((B, n, 2))
    for b, rng in enumerate(rngs):
        noise[b] = rng.standard_normal((n, 2))
    V, _ = simulate_paths_batch(thetas, cfg.x0, cfg.sim_step, n, noise, keep_u=False)
    series = V[:, :: cfg.subsample_factor]
    if cfg.center:
        finite = np.isfinite(series).all(axis=1)
        means = np.zeros((series.shape[0], 1))
        if finite.any():
            means[finite, 0] = series[finite].mean(axis=1)
        series = series - means
    return series


def _chunked(indices: list[int], chunk: int):
    for i in range(0, len(indices), chunk):
        yield indices[i : i + chunk]


def simulate_dataset(cfg: EngineConfig, theta, rng: np.random.Generator) -> np.ndarray:
    """One synthetic series at the inference-time settings of ``cfg``.

    Simulates at ``sim_step`` over ``sim_horizon``, subsamples to
    ``obs_step``, and centers when configured.  Rows of NaN indicate a
    blown-up path.
    """
    th = np.asarray(theta, dtype=float).reshape(1, 4)
    return _simulate_chunk(cfg, th, [rng])[0]


def pilot_threshold(cfg: EngineConfig, observed: ObservedSeries) -> PilotResult:
    """Prior-predictive pilot study fixing the initial tolerance.

    Simulates ``cfg.pilot_size`` datasets under prior draws (prior draws with
    kappa <= 0 are redrawn without consuming simulations), computes their
    distances to the observed summary, and returns the configured percentile.
    For canonical summaries the component weights (mean absolute deviations
    over the pilot summaries) are computed first and also returned.  Pilot
    simulations are not charged against the inference budget.
    """
    obs_values = _prepare_observed(cfg, observed)
    ctx = _DistanceContext(cfg, obs_values)
    return _run_pilot(cfg, ctx)


def _run_pilot(cfg: EngineConfig, ctx: _DistanceContext) -> PilotResult:
    m = cfg.pilot_size
    thetas = np.empty((m, 4))
    rngs = []
    redraws = 0
    for j in range(m):
        rng = _slot_rng(cfg.seed, 0, j)
        while True:
            th = prior_sample(cfg.prior, rng).as_array()
            if 4.0 * th[1] / th[0] - 1.0 > 0.0:
                break
            redraws += 1
        thetas[j] = th
        rngs.append(rng)

    chunk = max(1, _BATCH_POINTS // (cfg.n_steps + 1))
    summaries: list = [None] * m
    series_rows: list = [None] * m
    for block in _chunked(list(range(m)), chunk):
        series = _simulate_chunk(cfg, thetas[block], [rngs[j] for j in block])
        for i, j in enumerate(block):
            row = series[i]
            if np.isfinite(row).all():
                summaries[j], series_rows[j] = ctx.summarize(row)
            else:
                summaries[j] = None

    canonical_weights = None
    if cfg.summary_kind == "canonical":
        mat = np.array([s.values for s in summaries if s is not None])
        mad = np.mean(np.abs(mat - mat.mean(axis=0)), axis=0)
        if np.any(mad == 0.0):
            warnings.warn("zero mean absolute deviation in pilot summaries; "
                          "affected components weighted 1")
            mad = np.where(mad == 0.0, 1.0, mad)
        canonical_weights = mad
        ctx.canonical_weights = mad

    distances = np.full(m, np.inf)
    for j in range(m):
        if summaries[j] is not None:
            distances[j] = ctx.distance(summaries[j], series_rows[j])

    threshold = percentile_interpolated(distances, cfg.percentile)
    logger.info("pilot: %d simulations, %d kappa redraws, threshold %.6g",
                m, redraws, threshold)
    return PilotResult(
        threshold=threshold, distances=distances,
        canonical_weights=canonical_weights, nsim=m, redraws=redraws,
    )


def _prepare_observed(cfg: EngineConfig, observed: ObservedSeries) -> np.ndarray:
    if abs(observed.obs_step - cfg.obs_step) > 1e-9 * cfg.obs_step:
        raise ConfigError(
            f"observed obs_step {observed.obs_step} does not match configured {cfg.obs_step}"
        )
    values = observed.values.astype(float)
    if cfg.center:
        values = values - values.mean()
    return values


def _iteration_covariances(cfg: EngineConfig, prev_pop: Population, delta_r: float):
    """Proposal covariance stack and Cholesky factors for iteration r > 1."""
    if cfg.kernel_kind == "standard":
        cov = 2.0 * weighted_covariance(prev_pop)
        factor = spd_factor(cov)
        return cov, [factor] * len(prev_pop)
    covs = np.stack([
        olcm_covariance(prev_pop.thetas[l], prev_pop, delta_r)
        for l in range(len(prev_pop))
    ])
    return covs, [spd_factor(c) for c in covs]


def _run_iteration(cfg, ctx, iteration, delta, prev_pop, factors):
    """Fill all N acceptance slots at tolerance ``delta``.

    Returns accepted parameter rows and distances plus the attempt counters.
    Each slot draws proposals from its own substream until one passes the
    support filter, simulates, and accepts when the distance beats delta.
    """
    N = cfg.n_particles
    rngs = [_slot_rng(cfg.seed, iteration, j) for j in range(N)]
    accepted_theta = np.empty((N, 4))
    accepted_dist = np.full(N, np.nan)
    active = list(range(N))
    attempts = 0
    immediate = 0
    nsim = 0
    if prev_pop is not None:
        cum_weights = np.cumsum(prev_pop.weights)
        cum_weights[-1] = 1.0

    chunk = max(1, _BATCH_POINTS // (cfg.n_steps + 1))
    while active:
        for block in _chunked(active, chunk):
            proposals = np.empty((len(block), 4))
            for i, j in enumerate(block):
                rng = rngs[j]
                while True:
                    attempts += 1
                    if iteration == 1:
                        th = prior_sample(cfg.prior, rng).as_array()
                        if 4.0 * th[1] / th[0] - 1.0 <= 0.0:
                            immediate += 1
                            continue
                    else:
                        src = int(np.searchsorted(cum_weights, rng.random(), side="right"))
                        th = prev_pop.thetas[src] + factors[src] @ rng.standard_normal(4)
                        if (
                            prior_density_batch(cfg.prior, th[None, :])[0] == 0.0
                            or th[0] <= 0.0
                            or 4.0 * th[1] / th[0] - 1.0 <= 0.0
                        ):
                            immediate += 1
                            continue
                    break
                proposals[i] = th

            series = _simulate_chunk(cfg, proposals, [rngs[j] for j in block])
            nsim += len(block)
            for i, j in enumerate(block):
                row = series[i]
                if not np.isfinite(row).all():
                    continue  # blow-up: simulation spent, particle rejected
                summary, raw = ctx.summarize(row)
                d = ctx.distance(summary, raw)
                if d < delta:
                    accepted_theta[j] = proposals[i]
                    accepted_dist[j] = d
        active = [j for j in active if np.isnan(accepted_dist[j])]
    return accepted_theta, accepted_dist, attempts, immediate, nsim


def run_smc_abc(cfg: EngineConfig, observed: ObservedSeries) -> tuple[Population, RunTrace]:
    """Run the full sampler; returns the final population and the trace."""
    obs_values = _prepare_observed(cfg, observed)
    ctx = _DistanceContext(cfg, obs_values)
    pilot = _run_pilot(cfg, ctx)

    trace = RunTrace(pilot_nsim=pilot.nsim, pilot_redraws=pilot.redraws)
    total_nsim = 0
    prev_pop: Population | None = None
    covs = None
    factors = None
    delta = pilot.threshold
    iteration = 0

    while True:
        iteration += 1
        if iteration > 1:
            delta = next_threshold(prev_pop.distances, cfg.percentile)
            covs, factors = _iteration_covariances(cfg, prev_pop, delta)
        tic = time.perf_counter()
        thetas, dists, attempts, immediate, nsim = _run_iteration(
            cfg, ctx, iteration, delta, prev_pop, factors
        )
        total_nsim += nsim
        if iteration == 1:
            weights = np.full(cfg.n_particles, 1.0 / cfg.n_particles)
        else:
            weights = update_weights(thetas, prev_pop, covs, cfg.prior)
        pop = Population(
            thetas=thetas, weights=weights, distances=dists,
            iteration=iteration, threshold=delta,
        )
        record = IterationRecord(
            iteration=iteration,
            threshold=delta,
            cumulative_nsim=total_nsim,
            acceptance_rate=cfg.n_particles / attempts,
            ess=ess(weights),
            wall_time=time.perf_counter() - tic,
            immediate_rejections=immediate,
        )
        trace.records.append(record)
        logger.info(
            "iter %d: threshold %.6g, %d sims (cum %d), acc rate %.3f, ESS %.1f",
            iteration, delta, nsim, total_nsim, record.acceptance_rate, record.ess,
        )
        if total_nsim >= cfg.budget:
            return pop, trace
        prev_pop = pop
