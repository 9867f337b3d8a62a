"""CSV interchange formats.

All stages exchange plain CSV so any intermediate artifact can be
inspected or swapped. Floats are written with ``repr`` (shortest
round-trip form), so file-composed pipelines match in-memory pipelines
bit-exactly.

Formats:
  frames CSV   t,seq,a000..a241           (capture parse output)
  series CSV   t,a000..a241[,humidity]    (de-noising input/output)
  dataset CSV  t,f000..f248,humidity      (feature rows)
"""

from __future__ import annotations

import csv

import numpy as np

from .denoise import CsiSeries
from .features import FEATURE_WIDTH, Dataset
from .ingest import CsiFrame, SUBCARRIER_COUNT, extract_amplitude

_AMP_COLUMNS = [f"a{i:03d}" for i in range(SUBCARRIER_COUNT)]
_FEATURE_COLUMNS = [f"f{i:03d}" for i in range(FEATURE_WIDTH)]


def _fmt(value: float) -> str:
    return repr(float(value))


def write_frames_csv(frames: list[CsiFrame], path) -> None:
    """One row per frame: timestamp, sequence number, 242 amplitudes."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "seq"] + _AMP_COLUMNS)
        for frame in frames:
            amp = extract_amplitude(frame).amp
            writer.writerow([_fmt(frame.timestamp), frame.seq_no]
                            + [_fmt(a) for a in amp])


def write_series_csv(series: CsiSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["t"] + _AMP_COLUMNS
        if series.humidity is not None:
            header.append("humidity")
        writer.writerow(header)
        for i in range(len(series)):
            row = [_fmt(series.times[i])] + [_fmt(a) for a in series.amps[i]]
            if series.humidity is not None:
                row.append(_fmt(series.humidity[i]))
            writer.writerow(row)


def read_series_csv(path) -> CsiSeries:
    """Read a series CSV. A ``seq`` column (frames CSV) is tolerated and
    dropped; a ``humidity`` column is optional."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty CSV")
        cols = {name: i for i, name in enumerate(header)}
        if "t" not in cols:
            raise ValueError(f"{path}: missing 't' column")
        amp_idx = [cols[c] for c in _AMP_COLUMNS if c in cols]
        if len(amp_idx) != SUBCARRIER_COUNT:
            raise ValueError(
                f"{path}: expected {SUBCARRIER_COUNT} amplitude columns, "
                f"found {len(amp_idx)}")
        hum_idx = cols.get("humidity")
        times, amps, humidity = [], [], []
        for row in reader:
            times.append(float(row[cols["t"]]))
            amps.append([float(row[i]) for i in amp_idx])
            if hum_idx is not None:
                humidity.append(float(row[hum_idx]))
    return CsiSeries(np.array(times),
                     np.array(amps).reshape(len(times), SUBCARRIER_COUNT),
                     np.array(humidity) if hum_idx is not None else None)


def write_dataset_csv(dataset: Dataset, path) -> None:
    times = dataset.times
    if times is None:
        times = np.arange(len(dataset), dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + _FEATURE_COLUMNS + ["humidity"])
        for i in range(len(dataset)):
            writer.writerow([_fmt(times[i])] + [_fmt(v) for v in dataset.X[i]]
                            + [_fmt(dataset.humidity[i])])


def read_dataset_csv(path) -> Dataset:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["t"] + _FEATURE_COLUMNS + ["humidity"]
        if header != expected:
            raise ValueError(f"{path}: not a dataset CSV (unexpected header)")
        times, X, humidity = [], [], []
        for row in reader:
            times.append(float(row[0]))
            X.append([float(v) for v in row[1:1 + FEATURE_WIDTH]])
            humidity.append(float(row[-1]))
    return Dataset(np.array(X).reshape(len(times), FEATURE_WIDTH),
                   np.array(humidity), np.array(times))
