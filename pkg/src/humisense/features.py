"""Feature construction: 242 de-noised subcarrier amplitudes plus 7
cross-subcarrier statistics per time sample, and z-score standardization
with training-set statistics.

Feature layout (width 249):
  0..241   subcarrier amplitudes in ascending subcarrier order
  242      mean
  243      standard deviation (population, 1/N)
  244      median absolute deviation (unscaled; unlike the Hampel-internal
           MAD, no 1.4826 factor is applied here)
  245      interquartile range (linear-interpolation quantiles)
  246      maximum
  247      skewness g1 = m3 / m2^1.5 (0 for zero variance)
  248      Shannon entropy, base 2, of a 16-bin histogram over [min, max]
           (0 when max == min)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .denoise import CsiSeries

SUBCARRIER_COUNT = 242
STAT_COUNT = 7
FEATURE_WIDTH = SUBCARRIER_COUNT + STAT_COUNT
ENTROPY_BINS = 16

STAT_NAMES = ("mean", "std", "mad", "iqr", "max", "skewness", "entropy")


class MissingLabels(ValueError):
    """Raised when building a dataset from a series without humidity."""


class TooFewRows(ValueError):
    """Raised when fitting statistics on fewer than two rows."""


def frame_stats(amp: np.ndarray) -> np.ndarray:
    """The 7 cross-subcarrier statistics of one amplitude vector."""
    x = np.asarray(amp, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("amp must be a non-empty one-dimensional vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("amp must be finite")

    mean = x.mean()
    centered = x - mean
    m2 = np.mean(centered ** 2)
    std = np.sqrt(m2)
    mad = np.median(np.abs(x - np.median(x)))
    q1, q3 = np.quantile(x, [0.25, 0.75])
    iqr = q3 - q1
    xmax = x.max()
    skew = np.mean(centered ** 3) / m2 ** 1.5 if m2 > 0 else 0.0

    xmin = x.min()
    if xmax == xmin:
        entropy = 0.0
    else:
        counts, _ = np.histogram(x, bins=ENTROPY_BINS, range=(xmin, xmax))
        p = counts[counts > 0] / x.size
        entropy = float(-(p * np.log2(p)).sum())

    return np.array([mean, std, mad, iqr, xmax, skew, entropy])


@dataclass
class Dataset:
    """Feature matrix with per-row humidity ground truth.

    X         (N, 249) feature rows
    humidity  (N,) relative humidity %
    times     optional (N,) seconds
    """

    X: np.ndarray
    humidity: np.ndarray
    times: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.humidity = np.asarray(self.humidity, dtype=float)
        if self.X.shape[0] != self.humidity.shape[0]:
            raise ValueError("X row count must match humidity length")
        if self.times is not None:
            self.times = np.asarray(self.times, dtype=float)
            if self.times.shape != self.humidity.shape:
                raise ValueError("times must align with humidity")

    def __len__(self) -> int:
        return self.X.shape[0]

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.X[idx], self.humidity[idx],
                       None if self.times is None else self.times[idx])


def build_dataset(series: CsiSeries) -> Dataset:
    """One feature row per time sample of a de-noised series."""
    if series.humidity is None:
        raise MissingLabels("series carries no humidity ground truth")
    if len(series) == 0:
        return Dataset(np.empty((0, FEATURE_WIDTH)), np.empty(0), np.empty(0))
    if series.n_subcarriers != SUBCARRIER_COUNT:
        raise ValueError(
            f"expected {SUBCARRIER_COUNT} subcarrier columns, got {series.n_subcarriers}")
    X = np.empty((len(series), FEATURE_WIDTH))
    X[:, :SUBCARRIER_COUNT] = series.amps
    for i in range(len(series)):
        X[i, SUBCARRIER_COUNT:] = frame_stats(series.amps[i])
    return Dataset(X, series.humidity.copy(), series.times.copy())


@dataclass
class Standardizer:
    """Per-feature z-score transform fitted on a training split.

    Features with zero spread are flagged degenerate and map to 0.
    """

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=float)
        self.std = np.asarray(self.std, dtype=float)
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise ValueError("mean and std must be one-dimensional and aligned")
        if np.any(self.std < 0):
            raise ValueError("std entries must be non-negative")

    @property
    def degenerate(self) -> np.ndarray:
        return self.std == 0

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        safe = np.where(self.degenerate, 1.0, self.std)
        out = (X - self.mean) / safe
        return np.where(self.degenerate, 0.0, out)

    def inverse(self, X: np.ndarray) -> np.ndarray:
        """Undo the transform; degenerate features map back to their mean."""
        X = np.asarray(X, dtype=float)
        return X * self.std + self.mean


def fit_standardizer(X: np.ndarray) -> Standardizer:
    """Per-feature mean and population std over the provided training rows."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 2:
        raise TooFewRows("standardizer needs at least 2 rows")
    return Standardizer(X.mean(axis=0), X.std(axis=0))


def apply_standardizer(standardizer: Standardizer, row: np.ndarray) -> np.ndarray:
    """Standardize a row (or matrix of rows) with fitted statistics."""
    return standardizer.transform(row)
