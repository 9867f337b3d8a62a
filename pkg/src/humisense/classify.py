"""Classifiers: brute-force KNN and SMO-trained SVMs (linear and
inhomogeneous quadratic kernels), with one-vs-one multiclass handling and
versioned JSON persistence.

All tie-breaks are deterministic and documented:
* KNN distance ties keep the earlier training index; vote ties pick the
  smallest class label.
* Each one-vs-one pair (lo, hi) treats ``hi`` as the positive class; a
  decision value of exactly 0 votes for the positive class. Multiclass
  vote ties pick the smallest class label.

Training is seed-free and fully deterministic: the SMO working-set
heuristic is the largest error difference with first-index tie-break,
never a random draw.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .features import Standardizer
from .labels import bin_humidity

SCHEMA_VERSION = 1

KNN_DEFAULT_K = 10
SVM_DEFAULT_C = 1.0
SVM_DEFAULT_TOL = 1e-3
SMO_MAX_PASSES = 1_000_000

ALGORITHMS = ("KNN", "LSVM", "QSVM")


class BadK(ValueError):
    """KNN neighbour count outside [1, training size]."""


class SolverNotConverged(RuntimeError):
    """SMO hit its pass cap; the message names the binary problem."""


class SchemaVersionMismatch(ValueError):
    """Model file written by an incompatible schema version."""


class CorruptFile(ValueError):
    """Model file is truncated or structurally invalid."""


@dataclass(frozen=True)
class KernelSpec:
    """Kernel function: 'linear' is x.y, 'poly2' is (x.y + 1)^2."""

    kind: str

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "poly2"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")

    def matrix(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        G = np.atleast_2d(X) @ np.atleast_2d(Y).T
        if self.kind == "poly2":
            return (G + 1.0) ** 2
        return G


LINEAR_KERNEL = KernelSpec("linear")
POLY2_KERNEL = KernelSpec("poly2")


@dataclass
class KnnParams:
    X: np.ndarray  # standardized training rows, stored verbatim
    y: np.ndarray  # int labels
    k: int


@dataclass
class BinaryProblem:
    """One trained one-vs-one sub-problem; ``hi`` is the positive class."""

    lo: int
    hi: int
    sv: np.ndarray      # support vectors (rows with alpha > 0)
    sv_y: np.ndarray    # +/-1 targets of the support vectors
    alpha: np.ndarray
    bias: float

    def decision(self, rows: np.ndarray, kernel: KernelSpec) -> np.ndarray:
        if self.sv.shape[0] == 0:
            return np.full(np.atleast_2d(rows).shape[0], self.bias)
        return kernel.matrix(rows, self.sv) @ (self.alpha * self.sv_y) + self.bias


@dataclass
class SvmParams:
    kernel: KernelSpec
    C: float
    tol: float
    problems: list[BinaryProblem]


@dataclass
class TrainedModel:
    """A classifier plus the standardization statistics and binning
    resolution baked in."""

    algorithm: str
    classes: list[int]
    params: KnnParams | SvmParams
    standardizer: Standardizer | None = None
    resolution: int | None = None


# --- KNN ----------------------------------------------------------------

def train_knn(rows: np.ndarray, labels: np.ndarray, k: int = KNN_DEFAULT_K, *,
              standardizer: Standardizer | None = None,
              resolution: int | None = None) -> TrainedModel:
    """Store standardized rows, labels and k verbatim (lazy learner)."""
    X = np.atleast_2d(np.asarray(rows, dtype=float))
    y = np.asarray(labels, dtype=int)
    if y.shape[0] != X.shape[0]:
        raise ValueError("labels must align with rows")
    if not 1 <= k <= X.shape[0]:
        raise BadK(f"k={k} outside [1, {X.shape[0]}]")
    classes = sorted(int(c) for c in np.unique(y))
    return TrainedModel("KNN", classes, KnnParams(X.copy(), y.copy(), int(k)),
                        standardizer, resolution)


def _vote(candidate_labels: np.ndarray, classes: list[int]) -> np.ndarray:
    """Majority vote per row; ties resolve to the smallest class label."""
    class_arr = np.asarray(classes)
    idx = np.searchsorted(class_arr, candidate_labels)
    counts = np.zeros((candidate_labels.shape[0], class_arr.size), dtype=int)
    rows = np.repeat(np.arange(candidate_labels.shape[0]), candidate_labels.shape[1])
    np.add.at(counts, (rows, idx.ravel()), 1)
    return class_arr[np.argmax(counts, axis=1)]  # argmax picks the first max


def predict_knn(model: TrainedModel, rows: np.ndarray):
    """Majority label among the k nearest training rows (Euclidean).

    Equal distances rank by training index (stable sort); vote ties pick
    the smallest class label.
    """
    params = model.params
    Q = np.atleast_2d(np.asarray(rows, dtype=float))
    d2 = (np.sum(Q ** 2, axis=1)[:, None]
          + np.sum(params.X ** 2, axis=1)[None, :]
          - 2.0 * Q @ params.X.T)
    order = np.argsort(d2, axis=1, kind="stable")[:, :params.k]
    pred = _vote(params.y[order], model.classes)
    if np.ndim(rows) == 1:
        return int(pred[0])
    return pred


# --- SVM ----------------------------------------------------------------

def _smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float,
               max_passes: int, problem_name: str) -> tuple[np.ndarray, float]:
    """Sequential minimal optimization on one binary dual problem.

    Terminates when a full sweep finds no KKT violation beyond ``tol``.
    The paired updates keep sum(alpha*y) at zero by construction.
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    b = 0.0
    E = -y.astype(float)  # f(x) - y with f identically zero at the start
    eps = 1e-12

    def take_step(i: int, j: int) -> bool:
        nonlocal b
        if i == j:
            return False
        ai, aj = alpha[i], alpha[j]
        yi, yj = y[i], y[j]
        s = yi * yj
        if s > 0:
            L, H = max(0.0, ai + aj - C), min(C, ai + aj)
        else:
            L, H = max(0.0, aj - ai), min(C, C + aj - ai)
        if H - L < eps:
            return False
        Ei, Ej = E[i], E[j]
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta > 0:
            aj_new = aj + yj * (Ei - Ej) / eta
            aj_new = min(H, max(L, aj_new))
        else:
            # Flat or concave direction (e.g. duplicate rows): evaluate the
            # dual objective at both clip ends and take the better one.
            fi = yi * (Ei + b) - ai * K[i, i] - s * aj * K[i, j]
            fj = yj * (Ej + b) - s * ai * K[i, j] - aj * K[j, j]
            Li = ai + s * (aj - L)
            Hi = ai + s * (aj - H)
            obj_L = (Li * fi + L * fj + 0.5 * Li * Li * K[i, i]
                     + 0.5 * L * L * K[j, j] + s * L * Li * K[i, j])
            obj_H = (Hi * fi + H * fj + 0.5 * Hi * Hi * K[i, i]
                     + 0.5 * H * H * K[j, j] + s * H * Hi * K[i, j])
            if obj_L < obj_H - eps:
                aj_new = L
            elif obj_L > obj_H + eps:
                aj_new = H
            else:
                return False
        if abs(aj_new - aj) < eps * (aj_new + aj + eps):
            return False
        ai_new = ai + s * (aj - aj_new)

        b_old = b
        b1 = b - Ei - yi * (ai_new - ai) * K[i, i] - yj * (aj_new - aj) * K[i, j]
        b2 = b - Ej - yi * (ai_new - ai) * K[i, j] - yj * (aj_new - aj) * K[j, j]
        if 0.0 < ai_new < C:
            b = b1
        elif 0.0 < aj_new < C:
            b = b2
        else:
            b = 0.5 * (b1 + b2)
        alpha[i], alpha[j] = ai_new, aj_new
        E[:] = E + (yi * (ai_new - ai)) * K[i] + (yj * (aj_new - aj)) * K[j] + (b - b_old)
        return True

    def examine(i: int) -> bool:
        r = E[i] * y[i]
        if not ((r < -tol and alpha[i] < C) or (r > tol and alpha[i] > 0)):
            return False
        nonbound = np.nonzero((alpha > 0) & (alpha < C))[0]
        if nonbound.size > 1:
            j = int(nonbound[np.argmax(np.abs(E[i] - E[nonbound]))])
            if take_step(i, j):
                return True
        for j in nonbound:
            if take_step(i, int(j)):
                return True
        for j in range(n):
            if take_step(i, j):
                return True
        return False

    passes = 0
    examine_all = True
    while True:
        passes += 1
        if passes > max_passes:
            raise SolverNotConverged(
                f"SMO pass cap {max_passes} reached on binary problem {problem_name}")
        if examine_all:
            changed = sum(examine(i) for i in range(n))
            if changed == 0:
                break
            examine_all = False
        else:
            nonbound = np.nonzero((alpha > 0) & (alpha < C))[0]
            changed = sum(examine(int(i)) for i in nonbound)
            if changed == 0:
                examine_all = True
    return alpha, b


def train_binary_svm(rows: np.ndarray, y: np.ndarray, kernel: KernelSpec,
                     C: float = SVM_DEFAULT_C, tol: float = SVM_DEFAULT_TOL,
                     max_passes: int = SMO_MAX_PASSES,
                     problem_name: str = "binary") -> tuple[np.ndarray, float]:
    """Solve one +/-1 problem; returns the full (unpruned) alphas and bias."""
    X = np.atleast_2d(np.asarray(rows, dtype=float))
    y = np.asarray(y, dtype=float)
    if set(np.unique(y)) - {-1.0, 1.0}:
        raise ValueError("binary targets must be +/-1")
    if C <= 0:
        raise ValueError("C must be positive")
    K = kernel.matrix(X, X)
    return _smo_solve(K, y, C, tol, max_passes, problem_name)


def kkt_violation(rows: np.ndarray, y: np.ndarray, alpha: np.ndarray, bias: float,
                  kernel: KernelSpec, C: float) -> float:
    """Largest KKT violation of a binary solution, recomputed from scratch."""
    X = np.atleast_2d(np.asarray(rows, dtype=float))
    f = kernel.matrix(X, X) @ (alpha * y) + bias
    margin = y * f
    viol = np.zeros_like(margin)
    free = (alpha > 0) & (alpha < C)
    viol[alpha <= 0] = np.maximum(0.0, 1.0 - margin[alpha <= 0])
    viol[free] = np.abs(1.0 - margin[free])
    viol[alpha >= C] = np.maximum(0.0, margin[alpha >= C] - 1.0)
    return float(viol.max()) if viol.size else 0.0


def train_svm(rows: np.ndarray, labels: np.ndarray, kernel: KernelSpec,
              C: float = SVM_DEFAULT_C, tol: float = SVM_DEFAULT_TOL, *,
              max_passes: int = SMO_MAX_PASSES,
              standardizer: Standardizer | None = None,
              resolution: int | None = None) -> TrainedModel:
    """One-vs-one SVMs trained by SMO; multiclass by majority vote."""
    X = np.atleast_2d(np.asarray(rows, dtype=float))
    y = np.asarray(labels, dtype=int)
    if y.shape[0] != X.shape[0]:
        raise ValueError("labels must align with rows")
    classes = sorted(int(c) for c in np.unique(y))
    if len(classes) < 2:
        raise ValueError("SVM training needs at least two classes")

    problems = []
    for lo, hi in itertools.combinations(classes, 2):
        mask = (y == lo) | (y == hi)
        Xp = X[mask]
        yp = np.where(y[mask] == hi, 1.0, -1.0)
        alpha, bias = train_binary_svm(Xp, yp, kernel, C, tol, max_passes,
                                       problem_name=f"{lo} vs {hi}")
        keep = alpha > 1e-14
        problems.append(BinaryProblem(lo, hi, Xp[keep], yp[keep], alpha[keep], bias))

    algorithm = "LSVM" if kernel.kind == "linear" else "QSVM"
    return TrainedModel(algorithm, classes, SvmParams(kernel, C, tol, problems),
                        standardizer, resolution)


def predict_svm(model: TrainedModel, rows: np.ndarray):
    """One-vs-one vote over the pairwise decisions; f >= 0 votes the
    positive (larger) class of the pair."""
    params = model.params
    Q = np.atleast_2d(np.asarray(rows, dtype=float))
    class_arr = np.asarray(model.classes)
    votes = np.zeros((Q.shape[0], class_arr.size), dtype=int)
    for problem in params.problems:
        f = problem.decision(Q, params.kernel)
        winner = np.where(f >= 0, np.searchsorted(class_arr, problem.hi),
                          np.searchsorted(class_arr, problem.lo))
        np.add.at(votes, (np.arange(Q.shape[0]), winner), 1)
    pred = class_arr[np.argmax(votes, axis=1)]
    if np.ndim(rows) == 1:
        return int(pred[0])
    return pred


# --- pipeline-level fit/predict ------------------------------------------

def fit_model(dataset, algorithm: str, resolution: int, **hyper) -> TrainedModel:
    """Fit a standardizer on the dataset, bin its labels at ``resolution``
    and train the requested algorithm ('knn', 'lsvm' or 'qsvm')."""
    from .features import fit_standardizer

    name = algorithm.strip().upper()
    if name not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of "
                         f"{', '.join(a.lower() for a in ALGORITHMS)}")
    standardizer = fit_standardizer(dataset.X)
    X = standardizer.transform(dataset.X)
    y = bin_humidity(dataset.humidity, resolution)
    if name == "KNN":
        k = int(hyper.pop("k", KNN_DEFAULT_K))
        _reject_extra(hyper)
        return train_knn(X, y, k, standardizer=standardizer, resolution=resolution)
    kernel = LINEAR_KERNEL if name == "LSVM" else POLY2_KERNEL
    C = float(hyper.pop("C", SVM_DEFAULT_C))
    tol = float(hyper.pop("tol", SVM_DEFAULT_TOL))
    max_passes = int(hyper.pop("max_passes", SMO_MAX_PASSES))
    _reject_extra(hyper)
    return train_svm(X, y, kernel, C, tol, max_passes=max_passes,
                     standardizer=standardizer, resolution=resolution)


def _reject_extra(hyper: dict) -> None:
    if hyper:
        raise ValueError(f"unknown hyperparameters: {sorted(hyper)}")


def predict_model(model: TrainedModel, rows: np.ndarray):
    """Standardize raw feature rows with the model's standardizer (when
    present) and predict."""
    X = np.asarray(rows, dtype=float)
    if model.standardizer is not None:
        X = model.standardizer.transform(X)
    if model.algorithm == "KNN":
        return predict_knn(model, X)
    return predict_svm(model, X)


# --- persistence ----------------------------------------------------------

def _feature_width(model: TrainedModel) -> int:
    if isinstance(model.params, KnnParams):
        return int(model.params.X.shape[1])
    for problem in model.params.problems:
        if problem.sv.size:
            return int(problem.sv.shape[1])
    return 0


def save_model(model: TrainedModel, path) -> None:
    """Self-describing versioned JSON; floats keep round-trip precision."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "algorithm": model.algorithm,
        "resolution": model.resolution,
        "classes": model.classes,
        "feature_width": _feature_width(model),
        "standardizer": None if model.standardizer is None else {
            "mean": model.standardizer.mean.tolist(),
            "std": model.standardizer.std.tolist(),
        },
    }
    if isinstance(model.params, KnnParams):
        doc["params"] = {
            "k": model.params.k,
            "rows": model.params.X.tolist(),
            "labels": model.params.y.tolist(),
        }
    else:
        doc["params"] = {
            "kernel": model.params.kernel.kind,
            "C": model.params.C,
            "tol": model.params.tol,
            "problems": [{
                "lo": p.lo, "hi": p.hi, "bias": p.bias,
                "alpha": p.alpha.tolist(),
                "sv_y": p.sv_y.tolist(),
                "sv": p.sv.tolist(),
            } for p in model.params.problems],
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))


def load_model(path) -> TrainedModel:
    """Load a model file; raises CorruptFile on structural damage and
    SchemaVersionMismatch on a foreign schema version."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptFile(f"model file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise CorruptFile(f"model file {path} lacks a schema_version header")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"model schema {doc['schema_version']} != supported {SCHEMA_VERSION}")
    try:
        algorithm = doc["algorithm"]
        std_doc = doc["standardizer"]
        standardizer = None if std_doc is None else Standardizer(
            np.array(std_doc["mean"], dtype=float),
            np.array(std_doc["std"], dtype=float))
        classes = [int(c) for c in doc["classes"]]
        resolution = doc["resolution"]
        payload = doc["params"]
        if algorithm == "KNN":
            params = KnnParams(np.array(payload["rows"], dtype=float),
                               np.array(payload["labels"], dtype=int),
                               int(payload["k"]))
            width = params.X.shape[1] if params.X.size else 0
        elif algorithm in ("LSVM", "QSVM"):
            problems = [BinaryProblem(
                int(p["lo"]), int(p["hi"]),
                np.array(p["sv"], dtype=float).reshape(len(p["alpha"]), -1)
                if p["alpha"] else np.empty((0, doc["feature_width"])),
                np.array(p["sv_y"], dtype=float),
                np.array(p["alpha"], dtype=float),
                float(p["bias"])) for p in payload["problems"]]
            params = SvmParams(KernelSpec(payload["kernel"]), float(payload["C"]),
                               float(payload["tol"]), problems)
            width = next((p.sv.shape[1] for p in problems if p.sv.size), 0)
        else:
            raise CorruptFile(f"unknown algorithm {algorithm!r} in model file")
        if width and width != doc["feature_width"]:
            raise CorruptFile("feature_width header disagrees with stored rows")
        return TrainedModel(algorithm, classes, params, standardizer,
                            None if resolution is None else int(resolution))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (SchemaVersionMismatch, CorruptFile)):
            raise
        raise CorruptFile(f"model file {path} is structurally invalid: {exc}") from exc
