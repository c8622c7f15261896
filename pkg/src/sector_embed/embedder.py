"""Tied-weight CBOW-style company embeddings.

A single matrix ``W`` (one row per company) is used twice: the context rows
are averaged into a hidden vector ``h`` and the same matrix projects ``h``
back onto the universe before a softmax. Training minimises
``-log softmax(W @ h)[target]`` by per-example SGD.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .contexts import ContextSet
from .errors import ConfigurationError, ParseError, TrainingError, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmbeddingMatrix:
    tickers: tuple[str, ...]
    W: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] != len(self.tickers):
            raise ValidationError(f"embedding matrix shape {W.shape} does not match {len(self.tickers)} tickers")
        if not np.all(np.isfinite(W)):
            raise ValidationError("embedding matrix has non-finite entries")
        W.setflags(write=False)
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "W", W)

    @property
    def dim(self) -> int:
        return self.W.shape[1]

    def __len__(self) -> int:
        return len(self.tickers)

    def row(self, ticker: str) -> np.ndarray:
        return self.W[self.tickers.index(ticker)]


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 20
    learning_rate: float = 0.05
    epochs: int = 25
    seed: int = 0
    init_scale: float | None = None  # None -> 0.5 / dim
    shuffle_each_epoch: bool = True

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigurationError(f"dim must be >= 1, got {self.dim}")
        if not self.learning_rate > 0:
            raise ConfigurationError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 0:
            raise ConfigurationError(f"epochs must be >= 0, got {self.epochs}")
        if self.seed < 0:
            raise ConfigurationError("seed must be unsigned")
        if self.init_scale is not None and self.init_scale < 0:
            raise ConfigurationError("init_scale must be >= 0")

    @property
    def scale(self) -> float:
        return 0.5 / self.dim if self.init_scale is None else float(self.init_scale)


@dataclass(frozen=True)
class TrainResult:
    embeddings: EmbeddingMatrix
    loss_trace: list[float] = field(default_factory=list)


def _tickers_of(universe) -> tuple[str, ...]:
    return tuple(getattr(u, "ticker", u) for u in universe)


def _as_array(W) -> np.ndarray:
    return W.W if isinstance(W, EmbeddingMatrix) else np.asarray(W, dtype=np.float64)


def init_embeddings(universe, cfg: TrainConfig = TrainConfig()) -> EmbeddingMatrix:
    tickers = _tickers_of(universe)
    rng = np.random.default_rng(cfg.seed)
    s = cfg.scale
    W = rng.uniform(-s, s, size=(len(tickers), cfg.dim)) if s > 0 else np.zeros((len(tickers), cfg.dim))
    return EmbeddingMatrix(tickers, W)


def hidden_layer(W, context: Sequence[int]) -> np.ndarray:
    """Mean of the context rows of ``W``."""
    W = _as_array(W)
    idx = list(context)
    if not idx:
        raise ValidationError("context must be nonempty")
    return W[idx].mean(axis=0)


def forward(W, h) -> np.ndarray:
    """``softmax(W @ h)``, shifted by the max logit."""
    z = _as_array(W) @ np.asarray(h, dtype=np.float64)
    z -= z.max()
    e = np.exp(z)
    return e / e.sum()


def _target_and_context(example, context):
    if isinstance(example, ContextSet):
        return example.target, example.context
    return int(example), tuple(context)


def loss_and_gradient(W, example, context=None) -> tuple[float, np.ndarray]:
    """Cross-entropy loss of one example and its gradient w.r.t. every entry of ``W``.

    Called as ``loss_and_gradient(W, context_set)`` or
    ``loss_and_gradient(W, target, context)``.
    """
    W = _as_array(W)
    target, ctx = _target_and_context(example, context)
    ctx = list(ctx)
    h = W[ctx].mean(axis=0)
    z = W @ h
    zmax = z.max()
    e = np.exp(z - zmax)
    total = e.sum()
    loss = float(zmax + math.log(total) - z[target])
    p = e / total
    p[target] -= 1.0
    # output projection: every row j gets (p_j - y_j) * h
    grad = np.outer(p, h)
    # input side: d loss / d h = W^T (p - y), shared equally by the context rows
    grad[ctx] += (W.T @ p) / len(ctx)
    return loss, grad


def train(sets: Sequence[ContextSet], universe, cfg: TrainConfig = TrainConfig(),
          init: EmbeddingMatrix | None = None) -> TrainResult:
    """Per-example SGD over ``sets`` for ``cfg.epochs`` passes.

    Deterministic for a given set order, config and seed. The shuffle stream
    is derived from ``cfg.seed`` but kept separate from the initialisation.
    """
    tickers = _tickers_of(universe)
    n = len(tickers)
    E0 = init if init is not None else init_embeddings(tickers, cfg)
    if E0.tickers != tickers:
        raise ValidationError("initial embeddings do not match the universe")
    W = np.array(E0.W, dtype=np.float64)
    targets = np.fromiter((s.target for s in sets), dtype=np.int64, count=len(sets))
    contexts = [np.asarray(s.context, dtype=np.int64) for s in sets]
    for i, s in enumerate(sets):
        if not 0 <= s.target < n or contexts[i].min() < 0 or contexts[i].max() >= n:
            raise ValidationError(f"context set {i} references a company outside the universe")

    rng = np.random.default_rng([cfg.seed, 1])
    lr = cfg.learning_rate
    order = np.arange(len(sets))
    trace: list[float] = []
    with np.errstate(over="ignore", invalid="ignore"):  # divergence is reported below
        for epoch in range(cfg.epochs):
            if cfg.shuffle_each_epoch:
                order = rng.permutation(len(sets))
            total = 0.0
            for k in order:
                ctx = contexts[k]
                t = targets[k]
                h = W[ctx].mean(axis=0)
                z = W @ h
                zmax = z.max()
                e = np.exp(z - zmax)
                s = e.sum()
                loss = float(zmax + math.log(s) - z[t])
                if not math.isfinite(loss):
                    raise TrainingError(f"non-finite loss in epoch {epoch} at context set {int(k)} "
                                        f"(target {tickers[t]}, context {[tickers[c] for c in ctx]})")
                total += loss
                e /= s
                e[t] -= 1.0
                g_ctx = (W.T @ e) * (lr / len(ctx))
                W -= lr * np.outer(e, h)
                W[ctx] -= g_ctx
            if not np.all(np.isfinite(W)):
                raise TrainingError(f"embeddings became non-finite during epoch {epoch}")
            trace.append(total / len(sets) if len(sets) else 0.0)
            logger.debug("epoch %d mean loss %.6f", epoch, trace[-1])
    return TrainResult(EmbeddingMatrix(tickers, W), trace)


def concat_embeddings(a: EmbeddingMatrix, b: EmbeddingMatrix, normalize: bool = False) -> EmbeddingMatrix:
    """Row-wise ``[a_i | b_i]``. With ``normalize`` each block's rows are scaled to unit length first."""
    if a.tickers != b.tickers:
        diff = sorted(set(a.tickers) ^ set(b.tickers))
        if not diff:
            raise ValidationError("embedding universes list the same tickers in a different order")
        raise ValidationError(f"embedding universes differ: {diff}")
    A, B = a.W, b.W
    if normalize:
        A = A / np.linalg.norm(A, axis=1, keepdims=True)
        B = B / np.linalg.norm(B, axis=1, keepdims=True)
    return EmbeddingMatrix(a.tickers, np.hstack([A, B]))


def write_embeddings(path, E: EmbeddingMatrix) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(["ticker"] + [f"dim{j}" for j in range(E.dim)]) + "\n")
        for t, row in zip(E.tickers, E.W):
            fh.write("\t".join([t] + [format(float(v), ".17g") for v in row]) + "\n")


def read_embeddings(path) -> EmbeddingMatrix:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if not header or header[0] != "ticker":
            raise ParseError("embedding file header must start with 'ticker'", path, 1)
        dim = len(header) - 1
        tickers, rows = [], []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != dim + 1:
                raise ParseError(f"expected {dim + 1} fields, got {len(parts)}", path, lineno)
            try:
                rows.append([float(v) for v in parts[1:]])
            except ValueError:
                raise ParseError("non-numeric embedding value", path, lineno) from None
            tickers.append(parts[0])
    return EmbeddingMatrix(tuple(tickers), np.array(rows).reshape(len(rows), dim))


def write_loss_trace(path, trace: Sequence[float]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "mean_loss"])
        for i, v in enumerate(trace):
            w.writerow([i, format(v, ".17g")])
