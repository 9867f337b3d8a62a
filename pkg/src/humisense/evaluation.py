"""Evaluation protocol: repeated random 50/50 splits, confusion matrices,
per-round accuracies, and the resolution sweep.

Standardization statistics are fitted on each round's training split only;
evaluation rows never touch them. The default split is row-wise i.i.d.;
``split_mode='block'`` holds out one contiguous time block instead, for an
honest temporal evaluation, and is off by default.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classify import fit_model, predict_model
from .features import Dataset, TooFewRows
from .labels import bin_humidity

SPLIT_MODES = ("random", "block")


def split(dataset: Dataset, fraction: float = 0.5, seed: int = 0,
          mode: str = "random") -> tuple[Dataset, Dataset]:
    """Deterministic seeded split into disjoint, exhaustive train/test
    parts with sizes within one row of ``fraction``."""
    n = len(dataset)
    if n < 2:
        raise TooFewRows("need at least 2 rows to split")
    if not 0 < fraction < 1:
        raise ValueError("fraction must be in (0, 1)")
    if mode not in SPLIT_MODES:
        raise ValueError(f"split mode must be one of {SPLIT_MODES}")
    n_train = min(max(int(round(n * fraction)), 1), n - 1)
    rng = np.random.default_rng(seed)
    if mode == "random":
        perm = rng.permutation(n)
        train_idx = np.sort(perm[:n_train])
        test_idx = np.sort(perm[n_train:])
    else:
        start = int(rng.integers(n))
        test_idx = np.sort((start + np.arange(n - n_train)) % n)
        train_idx = np.setdiff1d(np.arange(n), test_idx)
    return dataset.subset(train_idx), dataset.subset(test_idx)


@dataclass
class EvalReport:
    """Aggregated outcome of repeated holdout rounds for one algorithm at
    one resolution. ``confusion`` is summed over rounds (rows true,
    columns predicted, indexed by ``classes``)."""

    algorithm: str
    resolution: int
    rounds: int
    seed: int
    split_mode: str
    classes: list[int]
    confusion: np.ndarray
    accuracy_per_round: list[float]
    hyper: dict = field(default_factory=dict)

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracy_per_round))

    @property
    def accuracy_span(self) -> tuple[float, float]:
        return (float(min(self.accuracy_per_round)),
                float(max(self.accuracy_per_round)))

    @property
    def pooled_accuracy(self) -> float:
        """Trace over total of the pooled confusion matrix."""
        total = self.confusion.sum()
        return float(np.trace(self.confusion) / total) if total else 0.0

    def to_dict(self) -> dict:
        lo, hi = self.accuracy_span
        return {
            "algorithm": self.algorithm,
            "resolution": self.resolution,
            "rounds": self.rounds,
            "seed": self.seed,
            "split_mode": self.split_mode,
            "hyper": self.hyper,
            "classes": self.classes,
            "confusion": self.confusion.tolist(),
            "accuracy_per_round": self.accuracy_per_round,
            "mean_accuracy": self.mean_accuracy,
            "accuracy_span": [lo, hi],
            "pooled_accuracy": self.pooled_accuracy,
        }


def evaluate(dataset: Dataset, algorithm: str, resolution: int,
             rounds: int = 10, seed: int = 42, hyper: dict | None = None,
             split_mode: str = "random") -> EvalReport:
    """Run ``rounds`` seeded splits (seeds seed+0 .. seed+rounds-1); per
    round fit the standardizer and model on the training half and score the
    held-out half."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    hyper = dict(hyper or {})
    classes = sorted(int(c) for c in
                     np.unique(bin_humidity(dataset.humidity, resolution)))
    class_arr = np.asarray(classes)
    confusion = np.zeros((len(classes), len(classes)), dtype=int)
    accuracies = []
    for r in range(rounds):
        train, test = split(dataset, 0.5, seed + r, split_mode)
        model = fit_model(train, algorithm, resolution, **hyper)
        pred = np.asarray(predict_model(model, test.X))
        true = bin_humidity(test.humidity, resolution)
        np.add.at(confusion, (np.searchsorted(class_arr, true),
                              np.searchsorted(class_arr, pred)), 1)
        accuracies.append(float(np.mean(pred == true)))
    return EvalReport(algorithm.strip().upper(), resolution, rounds, seed,
                      split_mode, classes, confusion, accuracies, hyper)


@dataclass
class SweepReport:
    """Grid of EvalReports over algorithms x resolutions."""

    reports: list[EvalReport]
    rounds: int
    seed: int

    def find(self, algorithm: str, resolution: int) -> EvalReport:
        name = algorithm.strip().upper()
        for report in self.reports:
            if report.algorithm == name and report.resolution == resolution:
                return report
        raise KeyError(f"no report for {algorithm} at resolution {resolution}")

    def table(self) -> tuple[list[str], list[list]]:
        """Plot-ready tabular view: one row per (algorithm, resolution)."""
        header = ["algorithm", "resolution", "mean_accuracy",
                  "min_accuracy", "max_accuracy", "pooled_accuracy"]
        rows = []
        for report in self.reports:
            lo, hi = report.accuracy_span
            rows.append([report.algorithm, report.resolution,
                         report.mean_accuracy, lo, hi, report.pooled_accuracy])
        return header, rows

    def to_dict(self) -> dict:
        return {"rounds": self.rounds, "seed": self.seed,
                "reports": [r.to_dict() for r in self.reports]}


def resolution_sweep(dataset: Dataset, algorithms=("knn", "lsvm", "qsvm"),
                     resolutions=(2, 5, 10), rounds: int = 10,
                     seed: int = 42, split_mode: str = "random") -> SweepReport:
    """Evaluate every algorithm at every resolution with shared seeds."""
    reports = [evaluate(dataset, algorithm, resolution, rounds, seed,
                        split_mode=split_mode)
               for algorithm in algorithms for resolution in resolutions]
    return SweepReport(reports, rounds, seed)
