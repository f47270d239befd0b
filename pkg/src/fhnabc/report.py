"""Posterior reporting, result export, and goodness-of-fit curve generation.

All exports are delimited text with a ``# seed = ...`` metadata line; floats
are written with ``repr`` so that reloading reproduces the statistics
exactly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import EngineConfig, RunTrace, simulate_dataset
from .kernels import Population
from .summaries import structure_summary

__all__ = [
    "PARAM_NAMES",
    "PosteriorReport",
    "weighted_quantile",
    "posterior_stats",
    "export_results",
    "load_population",
    "GofResult",
    "gof_curves",
]

logger = logging.getLogger(__name__)

PARAM_NAMES = ("epsilon", "gamma", "beta", "sigma")
_PAIRS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


@dataclass(frozen=True)
class PosteriorReport:
    """Weighted posterior location/scale summary with 90% credible intervals
    (weighted 5%/95% quantiles) and pairwise correlations."""

    means: np.ndarray
    sds: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    correlations: np.ndarray

    def format(self) -> str:
        lines = ["parameter mean sd ci5 ci95"]
        for i, name in enumerate(PARAM_NAMES):
            lines.append(
                f"{name} {float(self.means[i])!r} {float(self.sds[i])!r} "
                f"{float(self.ci_low[i])!r} {float(self.ci_high[i])!r}"
            )
        lines.append("pair correlation")
        for i, j in _PAIRS:
            lines.append(
                f"{PARAM_NAMES[i]},{PARAM_NAMES[j]} {float(self.correlations[i, j])!r}"
            )
        return "\n".join(lines) + "\n"


def weighted_quantile(values, weights, q) -> np.ndarray:
    """Quantiles of a weighted sample (midpoint cumulative-weight convention,
    linear interpolation; reduces to the midpoint empirical quantile for
    equal weights)."""
    x = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order]
    p = np.cumsum(w) - 0.5 * w
    return np.interp(np.asarray(q, dtype=float), p, x)


def posterior_stats(pop: Population) -> PosteriorReport:
    """Weighted means, SDs (no bias correction), 90% CIs, and correlations."""
    w = pop.weights
    mu = w @ pop.thetas
    centered = pop.thetas - mu
    cov = (centered * w[:, None]).T @ centered
    sds = np.sqrt(np.diag(cov))
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = cov / np.outer(sds, sds)
    corr[~np.isfinite(corr)] = 0.0
    np.fill_diagonal(corr, 1.0)
    ci_low = np.empty(4)
    ci_high = np.empty(4)
    for i in range(4):
        ci_low[i], ci_high[i] = weighted_quantile(pop.thetas[:, i], w, [0.05, 0.95])
    return PosteriorReport(means=mu, sds=sds, ci_low=ci_low, ci_high=ci_high,
                           correlations=corr)


def _seed_header(cfg: EngineConfig) -> str:
    return f"# seed = {cfg.seed}\n"


def export_results(pop: Population, trace: RunTrace, cfg: EngineConfig, out_dir) -> dict[str, Path]:
    """Write posterior samples, the iteration trace, a config echo, and the
    posterior report into ``out_dir``; returns the file paths."""
    from .config import format_config  # cycle-free late import

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: dict[str, Path] = {}

    samples = out / "posterior_samples.csv"
    with open(samples, "w") as fh:
        fh.write(_seed_header(cfg))
        fh.write(f"# iteration = {pop.iteration}\n")
        fh.write(f"# threshold = {pop.threshold!r}\n")
        fh.write(",".join(PARAM_NAMES) + ",weight,distance\n")
        for t, w, d in zip(pop.thetas, pop.weights, pop.distances):
            fh.write(",".join(repr(float(v)) for v in (*t, w, d)) + "\n")
    files["samples"] = samples

    trace_path = out / "trace.csv"
    with open(trace_path, "w") as fh:
        fh.write(_seed_header(cfg))
        fh.write(f"# pilot_nsim = {trace.pilot_nsim}\n")
        fh.write(f"# pilot_redraws = {trace.pilot_redraws}\n")
        fh.write("iteration,threshold,cumulative_nsim,acceptance_rate,ess,"
                 "wall_time_s,immediate_rejections\n")
        for rec in trace.records:
            fh.write(
                f"{rec.iteration},{rec.threshold!r},{rec.cumulative_nsim},"
                f"{rec.acceptance_rate!r},{rec.ess!r},{rec.wall_time!r},"
                f"{rec.immediate_rejections}\n"
            )
    files["trace"] = trace_path

    config_path = out / "config.txt"
    with open(config_path, "w") as fh:
        fh.write(_seed_header(cfg))
        fh.write(format_config(cfg))
    files["config"] = config_path

    report_path = out / "posterior_report.txt"
    with open(report_path, "w") as fh:
        fh.write(_seed_header(cfg))
        fh.write(posterior_stats(pop).format())
    files["report"] = report_path
    return files


def load_population(path) -> Population:
    """Rebuild a Population from an exported posterior_samples file."""
    iteration, threshold = 0, float("nan")
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line.lstrip("# ").partition("=")
                key = key.strip()
                if key == "iteration":
                    iteration = int(value)
                elif key == "threshold":
                    threshold = float(value)
                continue
            if line[0].isalpha():
                continue  # header row
            rows.append([float(c) for c in line.split(",")])
    data = np.array(rows)
    return Population(
        thetas=data[:, :4], weights=data[:, 4], distances=data[:, 5],
        iteration=iteration, threshold=threshold,
    )


@dataclass
class GofResult:
    """Per-draw summary curves, their pointwise envelopes, and file paths."""

    density_curves: list
    spectrum_curves: list
    density_envelope: tuple | None
    spectrum_envelope: tuple | None
    skipped: int
    files: dict[str, Path] = field(default_factory=dict)


def _envelope(ref_xs: np.ndarray, curves) -> tuple[np.ndarray, np.ndarray]:
    stack = np.array([
        np.interp(ref_xs, xs, ys, left=0.0, right=0.0) for _, xs, ys in curves
    ])
    return stack.min(axis=0), stack.max(axis=0)


def _write_curves(path: Path, seed: int, curves) -> None:
    with open(path, "w") as fh:
        fh.write(f"# seed = {seed}\n")
        fh.write("label,x,y\n")
        for label, xs, ys in curves:
            for x, y in zip(xs, ys):
                fh.write(f"{label},{float(x)!r},{float(y)!r}\n")


def _write_envelope(path: Path, seed: int, xs, low, high, mean_ys) -> None:
    with open(path, "w") as fh:
        fh.write(f"# seed = {seed}\n")
        fh.write("x,low,high,mean_curve\n")
        for row in zip(xs, low, high, mean_ys):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def gof_curves(pop: Population, cfg: EngineConfig, n_draws: int,
               rng: np.random.Generator, out_dir) -> GofResult:
    """Posterior-predictive summary curves for goodness-of-fit plots.

    Resamples ``n_draws`` parameter values by weight, simulates one dataset
    per draw plus one under the posterior means, and exports the per-draw
    density and spectral curves, their pointwise min/max envelopes on the
    posterior-mean curve grids, and the posterior-mean curves.  Draws whose
    simulation blows up are skipped and counted.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mean_theta = pop.weights @ pop.thetas

    series = simulate_dataset(cfg, mean_theta, rng)
    if not np.isfinite(series).all():
        raise RuntimeError("simulation under the posterior means blew up")
    s_mean = structure_summary(series)
    density_curves = [("mean", s_mean.density.grid, s_mean.density.values)]
    spectrum_curves = [("mean", s_mean.spectrum.frequencies, s_mean.spectrum.values)]

    skipped = 0
    if n_draws > 0:
        idx = rng.choice(len(pop), size=n_draws, p=pop.weights)
        for k, i in enumerate(idx):
            row = simulate_dataset(cfg, pop.thetas[i], rng)
            if not np.isfinite(row).all():
                skipped += 1
                continue
            s = structure_summary(row)
            label = f"draw_{k:03d}"
            density_curves.append((label, s.density.grid, s.density.values))
            spectrum_curves.append((label, s.spectrum.frequencies, s.spectrum.values))

    density_env = spectrum_env = None
    if len(density_curves) > 1:
        d_lo, d_hi = _envelope(s_mean.density.grid, density_curves[1:])
        s_lo, s_hi = _envelope(s_mean.spectrum.frequencies, spectrum_curves[1:])
        density_env = (s_mean.density.grid, d_lo, d_hi, s_mean.density.values)
        spectrum_env = (s_mean.spectrum.frequencies, s_lo, s_hi, s_mean.spectrum.values)

    result = GofResult(
        density_curves=density_curves, spectrum_curves=spectrum_curves,
        density_envelope=density_env, spectrum_envelope=spectrum_env,
        skipped=skipped,
    )

    dc = out / "gof_density_curves.csv"
    sc = out / "gof_spectrum_curves.csv"
    _write_curves(dc, cfg.seed, density_curves)
    _write_curves(sc, cfg.seed, spectrum_curves)
    result.files = {"density_curves": dc, "spectrum_curves": sc}
    if density_env is not None:
        de = out / "gof_density_envelope.csv"
        se = out / "gof_spectrum_envelope.csv"
        _write_envelope(de, cfg.seed, *density_env)
        _write_envelope(se, cfg.seed, *spectrum_env)
        result.files["density_envelope"] = de
        result.files["spectrum_envelope"] = se
    if skipped:
        logger.warning("gof: skipped %d blown-up posterior draws", skipped)
    return result
