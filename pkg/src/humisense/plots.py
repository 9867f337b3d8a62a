"""Figure rendering for the report path. Figures are written to files
next to the delimited output; no interactive backend is ever used."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import EvalReport, SweepReport

_ALGO_STYLE = {"KNN": "tab:blue", "QSVM": "tab:orange", "LSVM": "tab:green"}


def plot_confusion(report: EvalReport, path) -> None:
    """Pooled confusion matrix heatmap with per-cell counts."""
    conf = report.confusion
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(conf, cmap="Blues")
    ax.set_xticks(range(len(report.classes)), [str(c) for c in report.classes])
    ax.set_yticks(range(len(report.classes)), [str(c) for c in report.classes])
    ax.set_xlabel("predicted humidity class (%RH)")
    ax.set_ylabel("true humidity class (%RH)")
    ax.set_title(f"{report.algorithm}, resolution {report.resolution}% "
                 f"(pooled accuracy {report.pooled_accuracy:.3f})")
    threshold = conf.max() / 2 if conf.size else 0
    for i in range(conf.shape[0]):
        for j in range(conf.shape[1]):
            if conf[i, j]:
                ax.text(j, i, str(conf[i, j]), ha="center", va="center",
                        fontsize=8,
                        color="white" if conf[i, j] > threshold else "black")
    fig.colorbar(im, ax=ax, label="count")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_accuracy_rounds(report: EvalReport, path) -> None:
    """Per-round accuracies with the mean and min-max span."""
    fig, ax = plt.subplots(figsize=(6, 4))
    rounds = np.arange(1, report.rounds + 1)
    ax.plot(rounds, report.accuracy_per_round, "o-", color="tab:blue",
            label="per-round accuracy")
    ax.axhline(report.mean_accuracy, color="tab:red", linestyle="--",
               label=f"mean {report.mean_accuracy:.3f}")
    lo, hi = report.accuracy_span
    ax.fill_between(rounds, lo, hi, alpha=0.12, color="tab:red")
    ax.set_xlabel("round")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0, 1.02)
    ax.set_title(f"{report.algorithm}, resolution {report.resolution}%")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_algorithm_spread(reports: list[EvalReport], path) -> None:
    """Mean accuracy per algorithm with min-max variation bars (one
    resolution)."""
    fig, ax = plt.subplots(figsize=(6, 4))
    names = [r.algorithm for r in reports]
    means = [r.mean_accuracy for r in reports]
    spans = np.array([[r.mean_accuracy - r.accuracy_span[0],
                       r.accuracy_span[1] - r.mean_accuracy] for r in reports]).T
    x = np.arange(len(reports))
    ax.bar(x, means, color=[_ALGO_STYLE.get(n, "gray") for n in names],
           alpha=0.75, width=0.6)
    ax.errorbar(x, means, yerr=spans, fmt="none", ecolor="tab:red", capsize=6)
    ax.set_xticks(x, names)
    ax.set_ylabel("accuracy")
    ax.set_ylim(0, 1.02)
    resolution = reports[0].resolution if reports else "?"
    ax.set_title(f"mean accuracy and variation, resolution {resolution}%")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_resolution_sweep(sweep: SweepReport, path) -> None:
    """Mean accuracy versus resolution, one line per algorithm."""
    fig, ax = plt.subplots(figsize=(6, 4))
    by_algo: dict[str, list[EvalReport]] = {}
    for report in sweep.reports:
        by_algo.setdefault(report.algorithm, []).append(report)
    for name, reports in by_algo.items():
        reports = sorted(reports, key=lambda r: r.resolution)
        ax.plot([r.resolution for r in reports],
                [r.mean_accuracy for r in reports],
                "o-", color=_ALGO_STYLE.get(name, "gray"), label=name)
    ax.set_xlabel("resolution (%RH)")
    ax.set_ylabel("mean accuracy")
    ax.set_ylim(0, 1.02)
    ax.set_title("prediction accuracy vs humidity resolution")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
