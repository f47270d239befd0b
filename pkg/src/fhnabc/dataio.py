"""Observed-series ingestion and delimited text output.

Files are plain delimited text (comma default, tab accepted), one value per
row in the selected column, with an optional header line.  All exports format
floats with ``repr`` so that a load/export round trip is lossless.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptyColumnError, NonNumericDataError

__all__ = ["ObservedSeries", "load_series", "subsample", "write_series"]


@dataclass(frozen=True)
class ObservedSeries:
    """Equidistant voltage observations with their sampling metadata."""

    values: np.ndarray
    obs_step: float
    centered: bool = False
    source: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        if self.obs_step <= 0.0:
            raise ValueError("obs_step must be positive")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def horizon(self) -> float:
        return (len(self.values) - 1) * self.obs_step


def _split_row(line: str) -> list[str]:
    if "\t" in line:
        return [c.strip() for c in line.split("\t")]
    if "," in line:
        return [c.strip() for c in line.split(",")]
    return line.split()


def load_series(path, column=0, obs_step: float = 1.0, center: bool = False) -> ObservedSeries:
    """Read one numeric column of a delimited text file.

    ``column`` is a zero-based index or a header name; headers are detected
    by the first row failing numeric parsing.  ``center=True`` subtracts the
    empirical mean.  Lines starting with '#' are ignored.
    """
    with open(path) as fh:
        rows = [_split_row(s) for s in (line.strip() for line in fh)
                if s and not s.startswith("#")]
    if not rows:
        raise EmptyColumnError(f"{path}: no data rows")

    header = None
    try:
        float(rows[0][0] if rows[0] else "")
    except ValueError:
        header = rows[0]
        rows = rows[1:]

    if isinstance(column, str):
        if header is None or column not in header:
            raise NonNumericDataError(f"{path}: no column named {column!r}")
        col = header.index(column)
    else:
        col = int(column)

    values = []
    for i, row in enumerate(rows):
        if col >= len(row) or row[col] == "":
            continue
        try:
            values.append(float(row[col]))
        except ValueError:
            raise NonNumericDataError(
                f"{path}: non-numeric cell {row[col]!r} in data row {i}"
            ) from None
    if not values:
        raise EmptyColumnError(f"{path}: column {column!r} has no values")

    values = np.array(values)
    centered = False
    if center:
        values = values - values.mean()
        centered = True
    return ObservedSeries(
        values=values, obs_step=float(obs_step), centered=centered,
        source=os.fspath(path),
    )


def subsample(series: ObservedSeries, factor: int) -> ObservedSeries:
    """Keep every ``factor``-th value starting at index 0."""
    factor = int(factor)
    if factor < 1:
        raise ValueError("factor must be >= 1")
    if factor == 1:
        return series
    return replace(
        series,
        values=series.values[::factor].copy(),
        obs_step=series.obs_step * factor,
    )


def write_series(path, series: ObservedSeries, column_name: str = "v") -> None:
    """Write a series as one-column delimited text with provenance comments."""
    with open(path, "w") as fh:
        fh.write(f"# obs_step = {series.obs_step!r}\n")
        fh.write(f"# centered = {series.centered}\n")
        if series.source:
            fh.write(f"# source = {series.source}\n")
        fh.write(f"{column_name}\n")
        for v in series.values:
            fh.write(f"{float(v)!r}\n")
