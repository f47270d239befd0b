"""Distances between summaries.

The structure distance combines the integrated absolute error (IAE) between
spectral density estimates and, weighted by ``alpha``, the IAE between
invariant density estimates.  Curves living on different grids are compared
on the union of their grids, with each curve interpolated linearly inside its
own range and extended by zero outside it; the integral uses left-endpoint
rectangles.  ``alpha`` itself is the area under the observed spectral
density, which puts the two error terms on a comparable scale.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidWeightsError
from .summaries import CanonicalSummary, DensityEstimate, SpectralEstimate, StructureSummary

__all__ = [
    "Curve",
    "iae",
    "spectral_weight",
    "structure_distance",
    "weighted_euclidean",
    "wasserstein1",
]


@dataclass(frozen=True)
class Curve:
    """A sampled real function: strictly increasing xs, matching ys."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.shape != ys.shape or xs.ndim != 1:
            raise ValueError("xs and ys must be 1-d arrays of equal length")
        if xs.size >= 2 and not np.all(np.diff(xs) > 0.0):
            raise ValueError("xs must be strictly increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @classmethod
    def from_density(cls, d: DensityEstimate) -> "Curve":
        return cls(d.grid, d.values)

    @classmethod
    def from_spectrum(cls, s: SpectralEstimate) -> "Curve":
        return cls(s.frequencies, s.values)


def _on_union_grid(g1: Curve, g2: Curve) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if g1.xs.size == g2.xs.size and np.array_equal(g1.xs, g2.xs):
        return g1.xs, g1.ys, g2.ys
    grid = np.union1d(g1.xs, g2.xs)
    y1 = np.interp(grid, g1.xs, g1.ys, left=0.0, right=0.0)
    y2 = np.interp(grid, g2.xs, g2.ys, left=0.0, right=0.0)
    return grid, y1, y2


def iae(g1: Curve, g2: Curve) -> float:
    """Integrated absolute error between two curves (rectangular rule)."""
    if g1.xs.size < 2 or g2.xs.size < 2:
        raise ValueError("curves need at least 2 points")
    grid, y1, y2 = _on_union_grid(g1, g2)
    return float(np.abs(y1 - y2)[:-1] @ np.diff(grid))


def spectral_weight(spectrum: SpectralEstimate, mode: str = "area") -> float:
    """Weight for the density term of the structure distance.

    ``area`` (default) returns the rectangular-rule area under the observed
    spectral density; ``magnitude`` rounds that area to its nearest power of
    ten.  A zero-area spectrum yields 0 with a warning.
    """
    area = float(spectrum.values[:-1] @ np.diff(spectrum.frequencies))
    if area <= 0.0:
        warnings.warn("observed spectrum has zero area; density term unweighted")
        return 0.0
    if mode == "area":
        return area
    if mode == "magnitude":
        return float(10.0 ** np.round(np.log10(area)))
    raise ValueError(f"unknown spectral weight mode {mode!r}")


def structure_distance(s_obs: StructureSummary, s_sim: StructureSummary, alpha: float) -> float:
    """IAE between spectra plus alpha times the IAE between densities."""
    d_spec = iae(Curve.from_spectrum(s_obs.spectrum), Curve.from_spectrum(s_sim.spectrum))
    d_dens = iae(Curve.from_density(s_obs.density), Curve.from_density(s_sim.density))
    return d_spec + alpha * d_dens


def weighted_euclidean(a: CanonicalSummary, b: CanonicalSummary, w) -> float:
    """Euclidean norm of the componentwise quotient (a - b) / w."""
    w = np.asarray(w, dtype=float)
    if w.shape != a.values.shape:
        raise InvalidWeightsError(f"need {a.values.shape[0]} weights")
    if np.min(w) <= 0.0:
        raise InvalidWeightsError("weights must be strictly positive")
    return float(np.linalg.norm((a.values - b.values) / w))


def wasserstein1(y, ysim) -> float:
    """Order-1 Wasserstein distance between two empirical distributions.

    Equal-length samples are matched by order statistics; otherwise the
    larger sample is reduced to the smaller size by evaluating its empirical
    quantile function at midpoint probabilities.
    """
    a = np.sort(np.asarray(y, dtype=float))
    b = np.sort(np.asarray(ysim, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("samples must be nonempty")
    if a.size != b.size:
        m = min(a.size, b.size)
        q = (np.arange(m) + 0.5) / m
        if a.size > m:
            a = np.quantile(a, q)
        else:
            b = np.quantile(b, q)
    return float(np.mean(np.abs(a - b)))
