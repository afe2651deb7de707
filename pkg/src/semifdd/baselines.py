"""Supervised neural-network baselines and shared evaluation.

The baselines train on the labeled partition only, with a plain N-way
softmax cross-entropy (no fake class), so any accuracy gap against the
semi-supervised model isolates the value of the unlabeled data.  The
2-layer baseline uses exactly the discriminator's layer shapes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from semifdd import nn, semigan
from semifdd.data import Dataset
from semifdd.errors import DivergenceError, InputError
from semifdd.optim import AdamState, adam_step

NN1_HIDDEN = (32,)
NN2_HIDDEN = (32, 16)

N_SEVERITY_LEVELS = 4


@dataclass(frozen=True)
class SupervisedConfig:
    """Configuration for a softmax-classifier baseline."""

    hidden: tuple = NN2_HIDDEN
    n_classes: int = 8
    epochs: int = 100
    lr: float = 2e-3
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.n_classes < 2:
            raise InputError(f"n_classes must be >= 2, got {self.n_classes}")
        if self.epochs < 0:
            raise InputError(f"epochs must be >= 0, got {self.epochs}")
        if any(h < 1 for h in self.hidden):
            raise InputError(f"hidden widths must be positive, got {self.hidden}")


def softmax_cross_entropy(net: nn.DenseNet, x, t):
    """Mean cross-entropy of an N-way softmax over the net's logits.

    Returns (loss, flat gradient vector).  Unlike the semi-supervised
    labeled loss there is no implicit extra class.
    """
    t = np.asarray(t)
    if t.size == 0:
        raise InputError("softmax_cross_entropy needs at least one row")
    logits = net.forward(x)
    m = logits.shape[0]
    if t.shape[0] != m:
        raise InputError("labels must be one integer per row")
    if t.min() < 0 or t.max() >= net.output_width:
        raise InputError(f"labels must lie in 0..{net.output_width - 1}")
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    q = e / e.sum(axis=1, keepdims=True)
    loss = -np.log(np.maximum(q[np.arange(m), t], semigan.LOG_FLOOR)).mean()
    d_logits = q
    d_logits[np.arange(m), t] -= 1.0
    d_logits /= m
    net.backward(d_logits)
    return loss, net.grads.copy()


def train_supervised(config: SupervisedConfig, labeled: Dataset) -> nn.DenseNet:
    """Adam on full-batch softmax cross-entropy; deterministic per seed."""
    if labeled.n_rows == 0:
        raise InputError("train_supervised requires at least one labeled row")
    if labeled.labels is None:
        raise InputError("labeled dataset is missing labels")
    widths = (labeled.n_features, *config.hidden, config.n_classes)
    net = nn.DenseNet(nn.mlp_specs(widths, nn.leaky_relu(0.2), nn.IDENTITY))
    net.init_params(np.random.SeedSequence(config.seed))
    opt = AdamState(
        net.params.size,
        lr=config.lr,
        beta1=config.beta1,
        beta2=config.beta2,
        eps=config.eps,
    )
    x, t = labeled.features, labeled.labels
    for epoch in range(config.epochs):
        loss, grads = softmax_cross_entropy(net, x, t)
        if not np.isfinite(loss):
            raise DivergenceError("supervised", epoch, 0)
        adam_step(opt, net.params, grads)
    return net


def predict(model, x) -> np.ndarray:
    """Predicted class per row for either kind of trained model."""
    if isinstance(model, semigan.SemiGanModel):
        return semigan.classify(model, x)
    return np.argmax(model.forward(x), axis=1)


@dataclass
class EvalResult:
    """Accuracy plus per-class and (when available) per-severity breakdown."""

    accuracy: float
    per_class: np.ndarray
    class_counts: np.ndarray
    per_severity: np.ndarray | None


def evaluate(model, test: Dataset) -> EvalResult:
    """Accuracy breakdowns of a trained model on a labeled test partition.

    per_class[c] is the accuracy over rows of true class c (NaN when the
    class is absent).  per_severity[s-1] covers rows with severity s; the
    field is None when the dataset carries no severity metadata.
    """
    if test.n_rows == 0:
        raise InputError("evaluate requires a nonempty test set")
    if test.labels is None:
        raise InputError("evaluate requires test labels")
    pred = predict(model, test.features)
    correct = pred == test.labels
    accuracy = float(correct.mean())

    n_classes = int(test.labels.max()) + 1
    if isinstance(model, semigan.SemiGanModel):
        n_classes = max(n_classes, model.config.n_classes)
    else:
        n_classes = max(n_classes, model.output_width)
    per_class = np.full(n_classes, np.nan)
    counts = np.zeros(n_classes, dtype=np.int64)
    for c in range(n_classes):
        mask = test.labels == c
        counts[c] = mask.sum()
        if counts[c]:
            per_class[c] = correct[mask].mean()

    per_severity = None
    if test.severity is not None:
        per_severity = np.full(N_SEVERITY_LEVELS, np.nan)
        for s in range(1, N_SEVERITY_LEVELS + 1):
            mask = test.severity == s
            if mask.any():
                per_severity[s - 1] = correct[mask].mean()
    return EvalResult(accuracy, per_class, counts, per_severity)
