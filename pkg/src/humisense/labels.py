"""Humidity binning: map continuous relative-humidity readings to class labels.

A label is the bin center ``n * round(h / n)`` for bin size ``n`` (in %RH).
Ties at half-bin boundaries round away from zero, so e.g. ``h=47, n=2``
gives 48, not 46.
"""

from __future__ import annotations

import numpy as np


class EmptyDataset(ValueError):
    """Raised when a label operation receives no rows."""


def _check_resolution(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"resolution must be a positive integer, got {n!r}")


def bin_humidity(h, n: int):
    """Bin humidity value(s) ``h`` (%RH) to the nearest multiple of ``n``.

    Accepts a scalar or an array; returns an int scalar or int array.
    Rounding is half-away-from-zero.
    """
    _check_resolution(n)
    q = np.asarray(h, dtype=float) / n
    rounded = np.sign(q) * np.floor(np.abs(q) + 0.5)
    out = (n * rounded).astype(int)
    if np.isscalar(h) or np.ndim(h) == 0:
        return int(out)
    return out


def class_set(humidity, n: int) -> list[int]:
    """Sorted unique labels present in ``humidity`` at resolution ``n``."""
    values = np.asarray(humidity, dtype=float)
    if values.size == 0:
        raise EmptyDataset("cannot derive a class set from an empty dataset")
    return sorted(int(v) for v in np.unique(bin_humidity(values, n)))
