"""Industry classification from embeddings.

One-vs-rest linear SVMs trained by subgradient descent, SMOTE oversampling
of the training split, stratified k-fold / hold-out evaluation and
per-class precision / recall / F1 reports.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, ValidationError


@dataclass(frozen=True)
class Dataset:
    """Feature rows with integer class labels.

    After :func:`smote`, the first ``n_original`` rows are the input rows in
    their original order and ``synthetic_parents[k]`` holds the two original
    row indices the k-th synthetic row was interpolated between.
    """

    features: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]
    synthetic_parents: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValidationError(f"features {X.shape} and labels {y.shape} do not line up")
        if y.size and (y.min() < 0 or y.max() >= len(self.class_names)):
            raise ValidationError("label index out of range for class_names")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    def __len__(self) -> int:
        return self.labels.size

    @property
    def n_synthetic(self) -> int:
        return 0 if self.synthetic_parents is None else len(self.synthetic_parents)

    @property
    def n_original(self) -> int:
        return len(self) - self.n_synthetic

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=len(self.class_names))

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.class_names)

    @classmethod
    def from_labels(cls, features, label_names: Sequence[str], class_names: Sequence[str] | None = None):
        names = tuple(class_names) if class_names is not None else tuple(sorted(set(label_names)))
        pos = {c: i for i, c in enumerate(names)}
        return cls(np.asarray(features), np.array([pos[s] for s in label_names], dtype=np.int64), names)


@dataclass(frozen=True)
class SVMParams:
    reg_lambda: float = 1e-3
    epochs: int = 200
    lr: float = 0.01
    seed: int = 0
    batch_size: int | None = None  # None: full-batch subgradient steps

    def __post_init__(self):
        if not self.reg_lambda > 0 or not self.lr > 0:
            raise ConfigurationError("reg_lambda and lr must be positive")
        if self.epochs < 0:
            raise ConfigurationError("epochs must be >= 0")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigurationError("batch_size must be positive")


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray  # K x D
    biases: np.ndarray  # K
    class_names: tuple[str, ...]
    params: dict = field(default_factory=dict)
    objective_trace: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        W = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.biases, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] < 2 or b.shape != (W.shape[0],) or len(self.class_names) != W.shape[0]:
            raise ValidationError("linear model needs K >= 2 classes with matching weights and biases")
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "biases", b)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def fingerprint(self) -> str:
        blob = json.dumps(self.params, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.weights.shape[1]:
            raise ValidationError(f"expected {self.weights.shape[1]} features, got {X.shape[-1]}")
        return X @ self.weights.T + self.biases


@dataclass(frozen=True)
class ClassMetrics:
    name: str
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassificationReport:
    per_class: tuple[ClassMetrics, ...]
    weighted_avg: tuple[float, float, float]
    accuracy: float
    confusion: np.ndarray = field(compare=False, repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "per_class": [asdict(m) for m in self.per_class],
            "weighted_avg": dict(zip(("precision", "recall", "f1"), self.weighted_avg)),
            "accuracy": self.accuracy,
            "confusion": None if self.confusion is None else self.confusion.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def format_table(self) -> str:
        width = max(len("Weighted Avg"), len("Overall Accuracy"), *(len(m.name) for m in self.per_class))
        head = f"{'Industry Class':<{width}}  {'Precision':>9}  {'Recall':>6}  {'F1-Score':>8}  {'Support':>7}"
        lines = [head, "-" * len(head)]
        for m in self.per_class:
            lines.append(f"{m.name:<{width}}  {m.precision:>9.2f}  {m.recall:>6.2f}  {m.f1:>8.2f}  {m.support:>7d}")
        p, r, f = self.weighted_avg
        total = sum(m.support for m in self.per_class)
        lines += ["-" * len(head),
                  f"{'Weighted Avg':<{width}}  {p:>9.2f}  {r:>6.2f}  {f:>8.2f}  {total:>7d}",
                  f"{'Overall Accuracy':<{width}}  {'':>9}  {'':>6}  {self.accuracy:>8.2f}  {total:>7d}"]
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# SMOTE


def smote(data: Dataset, k_neighbors: int = 5, seed: int = 0) -> Dataset:
    """Oversample every minority class up to the majority count.

    New points are ``x_i + u * (x_nn - x_i)`` with ``u ~ U[0, 1]`` and
    ``x_nn`` drawn from the ``k`` nearest same-class neighbours of ``x_i``.
    Seed points cycle through the class members in order. Classes with no
    samples are left empty.
    """
    if k_neighbors < 1:
        raise ConfigurationError("k_neighbors must be positive")
    if data.n_synthetic:
        raise ValidationError("dataset already contains synthetic rows")
    counts = data.class_counts()
    target = counts.max(initial=0)
    rng = np.random.default_rng(seed)
    X, y = data.features, data.labels
    new_X, new_y, parents = [], [], []
    for c in range(len(data.class_names)):
        need = int(target - counts[c])
        if need == 0 or counts[c] == 0:
            continue
        members = np.flatnonzero(y == c)
        if members.size < 2:
            raise ValidationError(
                f"class {data.class_names[c]!r} has a single sample; SMOTE needs at least 2")
        k = min(k_neighbors, members.size - 1)
        P = X[members]
        d = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=-1)
        np.fill_diagonal(d, np.inf)
        nn = np.argsort(d, axis=1, kind="stable")[:, :k]
        for g in range(need):
            i = g % members.size
            j = nn[i, rng.integers(k)]
            u = rng.random()
            new_X.append(P[i] + u * (P[j] - P[i]))
            new_y.append(c)
            parents.append((members[i], members[j]))
    if not new_X:
        return Dataset(X.copy(), y.copy(), data.class_names)
    return Dataset(
        np.vstack([X, np.array(new_X)]),
        np.concatenate([y, np.array(new_y, dtype=np.int64)]),
        data.class_names,
        synthetic_parents=np.array(parents, dtype=np.int64).reshape(-1, 2),
    )


# ---------------------------------------------------------------------------
# linear SVM


def svm_objective(W, b, X, Y, reg_lambda) -> np.ndarray:
    """Per-class ``lambda * |w|^2 + mean(hinge)``; ``Y`` is the n x K matrix of +-1 targets."""
    margins = Y * (X @ W.T + b)
    return reg_lambda * np.sum(W * W, axis=1) + np.maximum(0.0, 1.0 - margins).mean(axis=0)


def train_linear_svm(data: Dataset, reg_lambda: float = 1e-3, epochs: int = 200, lr: float = 0.01,
                     seed: int = 0, batch_size: int | None = None) -> LinearModel:
    """One-vs-rest hinge-loss classifiers, all K trained side by side.

    With ``batch_size=None`` each epoch is one full-batch subgradient step and
    the result does not depend on ``seed``; otherwise each epoch sweeps
    seeded mini-batches.
    """
    params = SVMParams(reg_lambda, epochs, lr, seed, batch_size)
    present = np.unique(data.labels)
    if present.size < 2:
        raise ValidationError("training data must contain at least two classes")
    if not np.all(np.isfinite(data.features)):
        raise ValidationError("features must be finite")
    X = data.features
    n, D = X.shape
    K = len(data.class_names)
    Y = np.where(data.labels[:, None] == np.arange(K)[None, :], 1.0, -1.0)
    W = np.zeros((K, D))
    b = np.zeros(K)
    rng = np.random.default_rng(seed)
    trace = [svm_objective(W, b, X, Y, reg_lambda)]
    for _ in range(epochs):
        if batch_size is None:
            batches = [slice(None)]
        else:
            perm = rng.permutation(n)
            batches = [perm[s:s + batch_size] for s in range(0, n, batch_size)]
        for bt in batches:
            Xb, Yb = X[bt], Y[bt]
            active = (Yb * (Xb @ W.T + b)) < 1.0
            coef = Yb * active  # n_b x K
            gW = 2.0 * reg_lambda * W - coef.T @ Xb / len(Xb)
            gb = -coef.sum(axis=0) / len(Xb)
            W -= lr * gW
            b -= lr * gb
        trace.append(svm_objective(W, b, X, Y, reg_lambda))
    return LinearModel(W, b, data.class_names, asdict(params), np.array(trace))


def predict(model: LinearModel, x) -> int | np.ndarray:
    """Class index with the highest score (lowest index on ties). Accepts one row or a matrix."""
    scores = model.decision_function(x)
    return np.argmax(scores, axis=-1) if scores.ndim > 1 else int(np.argmax(scores))


def predict_proba(model: LinearModel, x) -> np.ndarray:
    """Softmax over the K one-vs-rest margins."""
    z = model.decision_function(x)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def save_model(path, model: LinearModel) -> None:
    rec = {
        "class_names": list(model.class_names),
        "weights": model.weights.tolist(),
        "biases": model.biases.tolist(),
        "params": model.params,
        "fingerprint": model.fingerprint,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rec, fh, indent=2)


def load_model(path) -> LinearModel:
    with open(path, encoding="utf-8") as fh:
        rec = json.load(fh)
    model = LinearModel(np.array(rec["weights"]), np.array(rec["biases"]), tuple(rec["class_names"]),
                        rec.get("params", {}))
    if rec.get("fingerprint") and rec["fingerprint"] != model.fingerprint:
        raise ValidationError("model file fingerprint does not match its training config")
    return model


# ---------------------------------------------------------------------------
# evaluation


def report_metrics(y_true, y_pred, class_names: Sequence[str]) -> ClassificationReport:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValidationError("y_true and y_pred differ in length")
    if y_true.size == 0:
        raise ValidationError("cannot report on an empty evaluation set")
    K = len(class_names)
    cm = np.zeros((K, K), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    tp = np.diag(cm).astype(float)
    pred_pos = cm.sum(axis=0)
    support = cm.sum(axis=1)
    per_class = []
    for k in range(K):
        p = tp[k] / pred_pos[k] if pred_pos[k] else 0.0
        r = tp[k] / support[k] if support[k] else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        per_class.append(ClassMetrics(class_names[k], float(p), float(r), float(f), int(support[k])))
    weighted = tuple(float(np.dot(support, [getattr(m, a) for m in per_class]) / support.sum())
                     for a in ("precision", "recall", "f1"))
    return ClassificationReport(tuple(per_class), weighted, float(tp.sum() / y_true.size), cm)


class Standardizer:
    """Per-feature centring and scaling fitted on training rows only."""

    def __init__(self, X):
        X = np.asarray(X, dtype=np.float64)
        self.mean = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale = np.where(std > 0, std, 1.0)

    def __call__(self, X):
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale


def stratified_folds(labels, k: int, seed: int = 0) -> np.ndarray:
    """Fold id per row; each class is shuffled and dealt round-robin across folds."""
    labels = np.asarray(labels)
    n = labels.size
    if k < 2:
        raise ConfigurationError(f"need k >= 2 folds, got {k}")
    if k > n:
        raise ConfigurationError(f"k = {k} exceeds the number of samples ({n})")
    rng = np.random.default_rng(seed)
    fold = np.empty(n, dtype=np.int64)
    offset = 0
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        fold[idx] = (offset + np.arange(idx.size)) % k
        offset += idx.size
    return fold


@dataclass(frozen=True)
class FoldRecord:
    validation: np.ndarray  # original row indices
    training: np.ndarray  # original row indices
    synthetic_parents: np.ndarray  # parents of synthetic rows, as original row indices


@dataclass(frozen=True)
class CVResult:
    report: ClassificationReport
    predictions: np.ndarray
    folds: np.ndarray
    records: tuple[FoldRecord, ...]


def _fit_predict(data: Dataset, train_idx, test_idx, use_smote, smote_k, seed, svm_params, standardize):
    train = data.take(train_idx)
    if use_smote:
        train = smote(train, smote_k, seed)
    parents = (np.asarray(train_idx)[train.synthetic_parents] if train.n_synthetic
               else np.empty((0, 2), dtype=np.int64))
    X_test = data.features[test_idx]
    X_train = train.features
    if standardize:
        scale = Standardizer(X_train)
        X_train, X_test = scale(X_train), scale(X_test)
    model = train_linear_svm(Dataset(X_train, train.labels, data.class_names), **asdict(svm_params))
    return predict(model, X_test), parents


def cross_validate(data: Dataset, k: int = 4, use_smote: bool = True, seed: int = 0,
                   svm_params: SVMParams | None = None, smote_k: int = 5,
                   standardize: bool = True) -> CVResult:
    """Stratified k-fold CV with pooled predictions.

    SMOTE (and feature standardisation) are fitted on each training split
    only; validation rows are always untouched original rows.
    """
    svm_params = svm_params or SVMParams(seed=seed)
    if data.n_synthetic:
        raise ValidationError("cross-validation expects a dataset without synthetic rows")
    folds = stratified_folds(data.labels, k, seed)
    pred = np.full(len(data), -1, dtype=np.int64)
    records = []
    for f in range(k):
        val = np.flatnonzero(folds == f)
        tr = np.flatnonzero(folds != f)
        if val.size == 0:
            continue
        pred[val], parents = _fit_predict(data, tr, val, use_smote, smote_k, seed + f, svm_params, standardize)
        records.append(FoldRecord(val, tr, parents))
    return CVResult(report_metrics(data.labels, pred, data.class_names), pred, folds, tuple(records))


def kfold_cv(data: Dataset, k: int = 4, use_smote: bool = True, seed: int = 0,
             svm_params: SVMParams | None = None, **kwargs) -> ClassificationReport:
    return cross_validate(data, k, use_smote, seed, svm_params, **kwargs).report


def stratified_split(labels, test_fraction: float, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    if not 0 < test_fraction < 1:
        raise ConfigurationError(f"test_fraction must be in (0, 1), got {test_fraction}")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    test = []
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        if idx.size < 2:
            raise ValidationError(f"class {c} has fewer than 2 samples; cannot stratify")
        n_test = min(max(1, int(round(test_fraction * idx.size))), idx.size - 1)
        test.extend(idx[:n_test].tolist())
    test = np.sort(np.array(test, dtype=np.int64))
    train = np.setdiff1d(np.arange(labels.size), test)
    return train, test


def holdout_eval(data: Dataset, test_fraction: float = 0.25, seed: int = 0,
                 svm_params: SVMParams | None = None, use_smote: bool = True, smote_k: int = 5,
                 standardize: bool = True) -> ClassificationReport:
    svm_params = svm_params or SVMParams(seed=seed)
    train, test = stratified_split(data.labels, test_fraction, seed)
    pred, _ = _fit_predict(data, train, test, use_smote, smote_k, seed, svm_params, standardize)
    return report_metrics(data.labels[test], pred, data.class_names)
