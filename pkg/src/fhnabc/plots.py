"""Matplotlib rendering of posterior, trace, and goodness-of-fit figures.

Every function writes a PNG next to the delimited outputs; the data files
remain the primary artifact, the figures are the human-facing view of them.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .engine import RunTrace
from .kernels import Population
from .report import PARAM_NAMES, GofResult
from .summaries import StructureSummary

__all__ = ["render_posterior_figure", "render_trace_figure", "render_gof_figure"]

plt.rcParams["figure.dpi"] = 120
plt.rcParams["savefig.bbox"] = "tight"

_LABELS = {"epsilon": r"$\epsilon$", "gamma": r"$\gamma$", "beta": r"$\beta$",
           "sigma": r"$\sigma$"}


def render_posterior_figure(pop: Population, out_path, true_values=None) -> None:
    """Weighted marginal histograms of the four parameters."""
    fig, axes = plt.subplots(1, 4, figsize=(12, 2.8))
    for i, (ax, name) in enumerate(zip(axes, PARAM_NAMES)):
        ax.hist(pop.thetas[:, i], bins=40, weights=pop.weights,
                density=True, color="0.4")
        if true_values is not None:
            ax.axvline(true_values[i], color="green", lw=1.2)
        ax.set_xlabel(_LABELS[name])
        ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def render_trace_figure(trace: RunTrace, out_path) -> None:
    """Threshold, simulation count, acceptance rate, and ESS per iteration."""
    recs = trace.records
    its = [r.iteration for r in recs]
    fig, axes = plt.subplots(1, 4, figsize=(12, 2.8))
    panels = [
        ("threshold", [r.threshold for r in recs], "log"),
        ("cumulative simulations", [r.cumulative_nsim for r in recs], "linear"),
        ("acceptance rate", [r.acceptance_rate for r in recs], "log"),
        ("ESS", [r.ess for r in recs], "linear"),
    ]
    for ax, (title, ys, scale) in zip(axes, panels):
        ax.plot(its, ys, "k.-")
        ax.set_yscale(scale)
        ax.set_xlabel("iteration")
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def render_gof_figure(result: GofResult, out_path,
                      observed: StructureSummary | None = None) -> None:
    """Posterior-predictive density and spectral-density bands.

    Gray band: pointwise envelope over the posterior draws; dashed red line:
    curves under the posterior means; black line: the observed summaries,
    when given.
    """
    fig, (ax_d, ax_s) = plt.subplots(1, 2, figsize=(9, 3.2))
    for ax, env, curves, xlabel in (
        (ax_d, result.density_envelope, result.density_curves, "v"),
        (ax_s, result.spectrum_envelope, result.spectrum_curves, "frequency"),
    ):
        if env is not None:
            xs, lo, hi, mean_ys = env
            ax.fill_between(xs, lo, hi, color="0.8", label="posterior draws")
            ax.plot(xs, mean_ys, "r--", lw=1.2, label="posterior mean")
        else:
            label, xs, mean_ys = curves[0]
            ax.plot(xs, mean_ys, "r--", lw=1.2, label="posterior mean")
        ax.set_xlabel(xlabel)
    if observed is not None:
        ax_d.plot(observed.density.grid, observed.density.values, "k-",
                  lw=1.0, label="observed")
        ax_s.plot(observed.spectrum.frequencies, observed.spectrum.values,
                  "k-", lw=1.0, label="observed")
    ax_d.set_title("invariant density", fontsize=9)
    ax_s.set_title("spectral density", fontsize=9)
    ax_d.legend(fontsize=7, frameon=False)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
