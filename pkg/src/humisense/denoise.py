"""Three-stage CSI de-noising: block downsampling, Hampel outlier removal,
and trailing moving average, applied per subcarrier column.

Stage order matters and is fixed: ``downsample -> hampel -> moving average``.
Downsampling first shortens the series so the Hampel window stays small, and
the moving average last removes the residual high-frequency noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

# Consistency constant making the median absolute deviation an unbiased
# estimate of sigma for Gaussian data; the Hampel threshold is therefore
# expressed in Gaussian-sigma units.
MAD_SCALE = 1.4826


class EmptySeries(ValueError):
    """Raised when a series operation receives zero rows."""


@dataclass
class DenoiseConfig:
    """Parameters of the de-noising pipeline.

    downsample_window   frames averaged into one output sample
    hampel_half_window  samples on each side of the Hampel window
    hampel_threshold    outlier threshold in scaled-MAD (sigma) units
    ma_window           trailing moving-average length in samples
    """

    downsample_window: int = 8
    hampel_half_window: int = 30
    hampel_threshold: float = 3.0
    ma_window: int = 10

    def validate(self) -> None:
        if self.downsample_window < 1:
            raise ValueError("downsample_window must be >= 1")
        if self.hampel_half_window < 1:
            raise ValueError("hampel_half_window must be >= 1")
        if not self.hampel_threshold > 0:
            raise ValueError("hampel_threshold must be > 0")
        if self.ma_window < 1:
            raise ValueError("ma_window must be >= 1")


@dataclass
class CsiSeries:
    """Time-ordered amplitude matrix with optional humidity ground truth.

    times     (T,) seconds, strictly increasing
    amps      (T, S) non-negative amplitudes, one column per subcarrier
    humidity  optional (T,) relative humidity %, aligned to times
    """

    times: np.ndarray
    amps: np.ndarray
    humidity: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.amps = np.atleast_2d(np.asarray(self.amps, dtype=float))
        if self.humidity is not None:
            self.humidity = np.asarray(self.humidity, dtype=float)
        if self.times.ndim != 1:
            raise ValueError("times must be one-dimensional")
        if self.amps.shape[0] != self.times.shape[0]:
            raise ValueError("amps row count must match times length")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        if self.humidity is not None and self.humidity.shape != self.times.shape:
            raise ValueError("humidity must align with times")

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def n_subcarriers(self) -> int:
        return self.amps.shape[1]

    def mean_trace(self) -> np.ndarray:
        """Mean amplitude across subcarriers, one value per time sample."""
        return self.amps.mean(axis=1)


def downsample(series: CsiSeries, window: int) -> CsiSeries:
    """Average consecutive non-overlapping blocks of ``window`` frames.

    Output timestamps are block-mean timestamps; a trailing partial block is
    averaged as-is. Humidity, when present, is averaged identically.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if len(series) == 0:
        raise EmptySeries("cannot downsample an empty series")
    if window == 1:
        return CsiSeries(series.times.copy(), series.amps.copy(),
                         None if series.humidity is None else series.humidity.copy())

    n = len(series)
    starts = np.arange(0, n, window)
    counts = np.minimum(starts + window, n) - starts
    amps = np.add.reduceat(series.amps, starts, axis=0) / counts[:, None]
    times = np.add.reduceat(series.times, starts) / counts
    humidity = None
    if series.humidity is not None:
        humidity = np.add.reduceat(series.humidity, starts) / counts
    return CsiSeries(times, amps, humidity)


def _window_bounds(n: int, half_window: int, i: int) -> tuple[int, int]:
    return max(0, i - half_window), min(n, i + half_window + 1)


def hampel_filter(column: np.ndarray, half_window: int, threshold: float) -> np.ndarray:
    """Replace outliers with the local window median.

    For each index the window spans up to ``half_window`` samples on each
    side (truncated at the edges). A sample is replaced by the window median
    ``m`` when ``|x - m| > threshold * MAD_SCALE * median(|window - m|)``.
    With a zero-MAD window any sample strictly different from the median is
    replaced (constant-plus-spike windows).
    """
    x = np.asarray(column, dtype=float)
    if x.ndim != 1:
        raise ValueError("column must be one-dimensional")
    n = x.shape[0]
    if n < 1:
        raise EmptySeries("cannot filter an empty column")

    med = np.empty(n)
    mad = np.empty(n)
    full = 2 * half_window + 1
    if n >= full:
        windows = sliding_window_view(x, full)
        med[half_window:n - half_window] = np.median(windows, axis=1)
        mad[half_window:n - half_window] = np.median(
            np.abs(windows - med[half_window:n - half_window, None]), axis=1)
        edge_idx = list(range(half_window)) + list(range(n - half_window, n))
    else:
        edge_idx = range(n)
    for i in edge_idx:
        lo, hi = _window_bounds(n, half_window, i)
        m = np.median(x[lo:hi])
        med[i] = m
        mad[i] = np.median(np.abs(x[lo:hi] - m))

    with np.errstate(invalid="ignore"):  # threshold=inf with MAD=0 -> nan -> keep
        replace = np.abs(x - med) > threshold * MAD_SCALE * mad
    return np.where(replace, med, x)


def moving_average(column: np.ndarray, window: int) -> np.ndarray:
    """Trailing mean over the most recent ``min(i+1, window)`` samples."""
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(column, dtype=float)
    if x.ndim != 1:
        raise ValueError("column must be one-dimensional")
    n = x.shape[0]
    out = np.empty(n)
    head = min(window, n)
    out[:head] = np.cumsum(x[:head]) / np.arange(1, head + 1)
    if n > window:
        out[window:] = sliding_window_view(x, window)[1:].mean(axis=1)
    return out


def denoise_pipeline(series: CsiSeries, cfg: DenoiseConfig) -> CsiSeries:
    """Run the full pipeline: downsample, then per-column Hampel, then
    per-column moving average.

    Humidity is averaged by the downsampling stage and then smoothed with
    the same trailing moving average as the amplitude columns, so the label
    stream stays registered with the (equally lagged) filtered feature
    stream. It is not Hampel-filtered.
    """
    cfg.validate()
    out = downsample(series, cfg.downsample_window)
    amps = np.empty_like(out.amps)
    for s in range(out.amps.shape[1]):
        col = hampel_filter(out.amps[:, s], cfg.hampel_half_window, cfg.hampel_threshold)
        amps[:, s] = moving_average(col, cfg.ma_window)
    humidity = out.humidity
    if humidity is not None:
        humidity = moving_average(humidity, cfg.ma_window)
    return CsiSeries(out.times, amps, humidity)
