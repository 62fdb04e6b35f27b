"""Linear softmax classifier with cross-entropy loss and mini-batch SGD."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 50
    batch_size: int = 64
    seed: int = 0
    l2: float = 0.0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.l2 < 0:
            raise ValueError("l2 must be nonnegative")


@dataclass
class ClassifierModel:
    W: np.ndarray  # (C, D)
    b: np.ndarray  # (C,)
    class_names: list[str]

    @property
    def n_classes(self) -> int:
        return self.W.shape[0]

    @property
    def dim(self) -> int:
        return self.W.shape[1]


@dataclass(frozen=True)
class LabeledExample:
    feature: np.ndarray
    label: int


def init_model(dim: int, class_names: Sequence[str], seed: int) -> ClassifierModel:
    """Uniform(-0.01, 0.01) weights from the given seed, zero biases."""
    names = [str(n) for n in class_names]
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if len(names) < 2:
        raise ValueError("need at least two classes")
    if len(set(names)) != len(names):
        raise ValueError("duplicate class names")
    rng = np.random.default_rng(seed)
    W = rng.uniform(-0.01, 0.01, size=(len(names), dim))
    return ClassifierModel(W=W, b=np.zeros(len(names)), class_names=names)


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=1, keepdims=True)


def forward(model: ClassifierModel, x) -> np.ndarray:
    """Class probabilities softmax(Wx + b), computed with max-subtraction."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.dim,):
        raise ValueError(f"feature dim {x.shape} does not match model dim {model.dim}")
    return _softmax_rows((model.W @ x + model.b)[np.newaxis, :])[0]


def _stack(data: Sequence[LabeledExample], model: ClassifierModel) -> tuple[np.ndarray, np.ndarray]:
    X = np.stack([np.asarray(ex.feature, dtype=float) for ex in data])
    if X.shape[1] != model.dim:
        raise ValueError(f"feature dim {X.shape[1]} does not match model dim {model.dim}")
    y = np.array([ex.label for ex in data], dtype=np.int64)
    if y.min() < 0 or y.max() >= model.n_classes:
        raise ValueError("label out of range")
    return X, y


def _loss_grad(
    W: np.ndarray, b: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float
) -> tuple[float, np.ndarray, np.ndarray]:
    probs = _softmax_rows(X @ W.T + b)
    n = X.shape[0]
    loss = float(-np.log(probs[np.arange(n), y]).mean() + 0.5 * l2 * np.sum(W * W))
    probs[np.arange(n), y] -= 1.0
    probs /= n
    grad_w = probs.T @ X + l2 * W
    grad_b = probs.sum(axis=0)
    return loss, grad_w, grad_b


def loss_and_grad(
    model: ClassifierModel, batch: Sequence[LabeledExample], l2: float = 0.0
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy plus (l2/2)*||W||_F^2, with its exact analytic gradients."""
    if not batch:
        raise ValueError("empty batch")
    X, y = _stack(batch, model)
    return _loss_grad(model.W, model.b, X, y, l2)


def train(
    model: ClassifierModel, data: Sequence[LabeledExample], cfg: TrainConfig
) -> tuple[ClassifierModel, list[float]]:
    """Mini-batch SGD over shuffled epochs; returns the trained copy and per-epoch mean loss."""
    if not data:
        raise ValueError("no training data")
    X, y = _stack(data, model)
    W = model.W.copy()
    b = model.b.copy()
    rng = np.random.default_rng(cfg.seed)
    n = X.shape[0]
    history: list[float] = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, grad_w, grad_b = _loss_grad(W, b, X[idx], y[idx], cfg.l2)
            W -= cfg.learning_rate * grad_w
            b -= cfg.learning_rate * grad_b
            epoch_loss += loss * idx.size
        history.append(epoch_loss / n)
    return ClassifierModel(W=W, b=b, class_names=list(model.class_names)), history


def evaluate(
    model: ClassifierModel, data: Sequence[LabeledExample]
) -> tuple[float, np.ndarray]:
    """Top-1 accuracy and a (true, predicted) confusion count matrix.

    Argmax ties resolve to the lowest class index.
    """
    if not data:
        raise ValueError("no evaluation data")
    X, y = _stack(data, model)
    pred = np.argmax(X @ model.W.T + model.b, axis=1)
    confusion = np.zeros((model.n_classes, model.n_classes), dtype=np.int64)
    np.add.at(confusion, (y, pred), 1)
    return float((pred == y).mean()), confusion
