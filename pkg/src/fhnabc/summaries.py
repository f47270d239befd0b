"""Summary statistics of a single voltage series.

Two families are provided.  Structure-based summaries estimate the invariant
density (Gaussian KDE) and the invariant spectral density (smoothed, tapered
periodogram) of the series, exploiting the ergodicity of the model: a single
long path pins both curves down and repeated simulations under the same
parameters reproduce them closely.  Canonical summaries are the classical
18-vector of moments and autocorrelations of the series and its first
differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateDataError, InsufficientDataError

__all__ = [
    "DensityEstimate",
    "SpectralEstimate",
    "StructureSummary",
    "CanonicalSummary",
    "estimate_density",
    "estimate_spectrum",
    "structure_summary",
    "canonical_summary",
    "autocorrelation",
]

DEFAULT_GRID_SIZE = 1000
TAPER_PROPORTION = 0.1


@dataclass(frozen=True)
class DensityEstimate:
    """Kernel density estimate on a uniform grid."""

    grid: np.ndarray
    values: np.ndarray
    bandwidth: float


@dataclass(frozen=True)
class SpectralEstimate:
    """Spectral density estimate at positive Fourier frequencies.

    Frequencies are in cycles per observation step, so they never exceed the
    Nyquist value 0.5.
    """

    frequencies: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class StructureSummary:
    density: DensityEstimate
    spectrum: SpectralEstimate


@dataclass(frozen=True)
class CanonicalSummary:
    """Fixed-order 18-vector: mean, variance, skewness, kurtosis, acf lags
    1..5 of the series, then the same nine statistics of its first
    differences."""

    values: np.ndarray


def _iqr(x: np.ndarray) -> float:
    """Interquartile range with linear interpolation (one partition pass)."""
    n = x.size
    pos25, pos75 = 0.25 * (n - 1), 0.75 * (n - 1)
    k25, k75 = int(pos25), int(pos75)
    ks = sorted({k25, min(k25 + 1, n - 1), k75, min(k75 + 1, n - 1)})
    part = np.partition(x, ks)
    f25, f75 = pos25 - k25, pos75 - k75
    q25 = part[k25] * (1.0 - f25) + part[min(k25 + 1, n - 1)] * f25
    q75 = part[k75] * (1.0 - f75) + part[min(k75 + 1, n - 1)] * f75
    return float(q75 - q25)


def _reference_bandwidth(x: np.ndarray) -> float:
    """0.9 * min(sd, IQR/1.34) * n^(-1/5), with the IQR leg dropped when it
    degenerates to zero."""
    n = x.size
    sd = float(np.std(x, ddof=1))
    iqr = _iqr(x)
    scale = min(sd, iqr / 1.34) if iqr > 0.0 else sd
    return 0.9 * scale * n ** (-0.2)


def estimate_density(series, grid_size: int = DEFAULT_GRID_SIZE) -> DensityEstimate:
    """Gaussian-kernel density estimate of the series marginal.

    The grid has ``grid_size`` equally spaced points spanning
    [min - 3*bw, max + 3*bw].  The kernel sum is evaluated by linear binning
    onto the grid followed by FFT convolution with the sampled kernel, which
    is exact up to the binning resolution (grid spacing << bandwidth in any
    realistic call).
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise InsufficientDataError("need a 1-d series with at least 2 points")
    if np.ptp(x) == 0.0:
        raise DegenerateDataError("constant series has no density estimate")
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")

    bw = _reference_bandwidth(x)
    lo = float(x.min()) - 3.0 * bw
    hi = float(x.max()) + 3.0 * bw
    grid = np.linspace(lo, hi, grid_size)
    dx = (hi - lo) / (grid_size - 1)

    # linear binning: each point splits its mass between the two bracketing
    # grid nodes
    pos = (x - lo) / dx
    idx = np.minimum(pos.astype(np.int64), grid_size - 2)
    frac = pos - idx
    counts = np.bincount(idx, weights=1.0 - frac, minlength=grid_size)
    counts += np.bincount(idx + 1, weights=frac, minlength=grid_size)

    # kernel sampled on grid offsets, truncated where it is negligible
    half_width = min(int(np.ceil(8.0 * bw / dx)), grid_size - 1)
    offsets = np.arange(-half_width, half_width + 1) * dx
    kern = np.exp(-0.5 * (offsets / bw) ** 2) / (bw * np.sqrt(2.0 * np.pi))

    m = grid_size + 2 * half_width
    fc = np.fft.rfft(counts, m)
    fk = np.fft.rfft(kern, m)
    conv = np.fft.irfft(fc * fk, m)[half_width : half_width + grid_size]
    values = np.maximum(conv / x.size, 0.0)
    return DensityEstimate(grid=grid, values=values, bandwidth=bw)


@lru_cache(maxsize=8)
def _split_cosine_taper(n: int, p: float = TAPER_PROPORTION) -> np.ndarray:
    w = np.ones(n)
    m = int(np.floor(n * p))
    if m > 0:
        ramp = 0.5 * (1.0 - np.cos(np.pi * (np.arange(1, m + 1) - 0.5) / m))
        w[:m] = ramp
        w[-m:] = ramp[::-1]
    w.setflags(write=False)
    return w


def default_smoothing_spans(n: int) -> tuple[int]:
    """Single modified Daniell span on the sqrt(n) scale (odd by design)."""
    return (2 * int(np.sqrt(n) / 2) + 1,)


def _circular_modified_daniell(p: np.ndarray, m: int) -> np.ndarray:
    """One pass of the modified Daniell smoother (half-width m) over a
    circular sequence: interior weights 1/(2m), the two endpoints halved.
    Implemented with sliding window sums so a pass costs O(n)."""
    ext = np.concatenate([p[-m:], p, p[:m]])
    cs = np.concatenate([[0.0], np.cumsum(ext)])
    win = cs[2 * m + 1 :] - cs[: -(2 * m + 1)]
    return (win - 0.5 * ext[: len(p)] - 0.5 * ext[2 * m :]) / (2.0 * m)


def estimate_spectrum(series, smoothing_spans=None) -> SpectralEstimate:
    """Smoothed periodogram of the series on a raw power scale.

    The series is demeaned and linearly detrended, a 10% split-cosine taper is
    applied at each end (with the matching power correction), and the
    periodogram is computed at the Fourier frequencies k/n, k = 1..n//2.
    Smoothing iterates modified Daniell filters over the circularly extended
    periodogram; ``smoothing_spans=None`` selects the sqrt(n)-scale default
    and an empty sequence disables smoothing.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if x.ndim != 1 or n < 8:
        raise InsufficientDataError("need a 1-d series with at least 8 points")

    # demean and linearly detrend (closed-form least squares on the index)
    tc = np.arange(n, dtype=float) - 0.5 * (n - 1)
    slope = float(tc @ x) / (n * (n * n - 1.0) / 12.0)
    x = x - x.mean() - slope * tc
    w = _split_cosine_taper(n)
    x = x * w
    u2 = float(np.mean(w * w))

    fx = np.fft.rfft(x)
    half_pg = (fx.real**2 + fx.imag**2) / (n * u2)
    # full periodogram over k = 0..n-1 by conjugate symmetry
    pgram = np.concatenate([half_pg, half_pg[(n - 1) // 2 : 0 : -1]])
    # the detrended DC ordinate is ~0; patch it with its neighbours so that
    # smoothing across frequency zero is not dragged down
    pgram[0] = 0.5 * (pgram[1] + pgram[-1])

    if smoothing_spans is None:
        smoothing_spans = default_smoothing_spans(n)
    for span in smoothing_spans:
        m = int(span) // 2
        if m < 1:
            continue
        pgram = _circular_modified_daniell(pgram, m)

    half = n // 2
    freqs = np.arange(1, half + 1) / n
    return SpectralEstimate(frequencies=freqs, values=np.maximum(pgram[1 : half + 1], 0.0))


def structure_summary(series) -> StructureSummary:
    """Invariant density and spectral density estimates with module defaults."""
    return StructureSummary(
        density=estimate_density(series, DEFAULT_GRID_SIZE),
        spectrum=estimate_spectrum(series),
    )


def autocorrelation(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelations at lags 1..max_lag (lag-0 normalization)."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if not 0 < max_lag < n:
        raise ValueError("need 0 < max_lag < len(series)")
    xc = x - x.mean()
    c0 = float(xc @ xc) / n
    if c0 == 0.0:
        raise DegenerateDataError("zero-variance series has no autocorrelation")
    return np.array([float(xc[: n - k] @ xc[k:]) / n / c0 for k in range(1, max_lag + 1)])


def _moment_block(x: np.ndarray) -> np.ndarray:
    """mean, variance (denominator n), skewness, kurtosis, acf lags 1..5.

    A zero-variance block reports zeros for the scale-dependent entries; this
    keeps e.g. arithmetic progressions (whose differences are constant)
    summarizable while a fully constant input is still rejected upstream.
    """
    n = x.size
    mean = float(x.mean())
    xc = x - mean
    m2 = float(np.mean(xc**2))
    if m2 == 0.0:
        return np.array([mean, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    skew = float(np.mean(xc**3)) / m2**1.5
    kurt = float(np.mean(xc**4)) / m2**2
    acf = autocorrelation(x, 5)
    return np.concatenate([[mean, m2, skew, kurt], acf])


def canonical_summary(series) -> CanonicalSummary:
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < 7:
        raise InsufficientDataError("need a 1-d series with at least 7 points")
    if np.ptp(x) == 0.0:
        raise DegenerateDataError("constant series has degenerate summaries")
    return CanonicalSummary(values=np.concatenate([_moment_block(x), _moment_block(np.diff(x))]))
