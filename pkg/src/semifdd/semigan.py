"""Semi-supervised GAN for fault classification.

A generator maps standard-normal noise to synthetic feature vectors; a
discriminator scores N real fault classes with an implicit extra "fake"
class whose logit is fixed at zero.  Training alternates three Adam steps
on the discriminator (unlabeled, fake, labeled) with one on the generator
per minibatch.  After training the discriminator alone is the classifier.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from semifdd import nn
from semifdd.data import Dataset
from semifdd.errors import DivergenceError, InputError, NumericError
from semifdd.optim import AdamState, adam_step

LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class SemiGanConfig:
    """Full training configuration; every run is a pure function of it."""

    n_classes: int = 8
    noise_dim: int = 8
    gen_layers: tuple = (8, 64, 64, 61)
    disc_layers: tuple = (61, 32, 16, 8)
    batch_size: int = 128
    iterations: int = 100
    lr: float = 2e-3
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.n_classes < 2:
            raise InputError(f"n_classes must be >= 2, got {self.n_classes}")
        if self.noise_dim < 1:
            raise InputError(f"noise_dim must be >= 1, got {self.noise_dim}")
        if len(self.gen_layers) < 2 or len(self.disc_layers) < 2:
            raise InputError("gen_layers and disc_layers need >= 2 widths")
        if self.gen_layers[0] != self.noise_dim:
            raise InputError(
                f"generator input width {self.gen_layers[0]} != noise_dim {self.noise_dim}"
            )
        if self.gen_layers[-1] != self.disc_layers[0]:
            raise InputError(
                f"generator output width {self.gen_layers[-1]} != "
                f"discriminator input width {self.disc_layers[0]}"
            )
        if self.disc_layers[-1] != self.n_classes:
            raise InputError(
                f"discriminator output width {self.disc_layers[-1]} != "
                f"n_classes {self.n_classes}"
            )
        if self.batch_size < 1:
            raise InputError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.iterations < 0:
            raise InputError(f"iterations must be >= 0, got {self.iterations}")

    @property
    def n_features(self) -> int:
        return self.disc_layers[0]


@dataclass
class SemiGanModel:
    """Generator/discriminator pair plus their optimizer states."""

    config: SemiGanConfig
    generator: nn.DenseNet
    discriminator: nn.DenseNet
    gen_opt: AdamState
    disc_opt: AdamState


@dataclass
class IterationLog:
    """Mean losses over one outer iteration's minibatches."""

    iteration: int
    loss_labeled: float
    loss_unlabeled: float
    loss_fake: float
    loss_generator: float
    val_accuracy: float | None = None

    FIELDS = (
        "iteration",
        "loss_labeled",
        "loss_unlabeled",
        "loss_fake",
        "loss_generator",
        "val_accuracy",
    )


def build_model(config: SemiGanConfig) -> SemiGanModel:
    """Construct the nets and optimizer states; parameters start at zero."""
    hidden = nn.leaky_relu(0.2)
    gen = nn.DenseNet(nn.mlp_specs(config.gen_layers, hidden, nn.TANH))
    disc = nn.DenseNet(nn.mlp_specs(config.disc_layers, hidden, nn.IDENTITY))
    opt_kw = dict(lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.eps)
    return SemiGanModel(
        config=config,
        generator=gen,
        discriminator=disc,
        gen_opt=AdamState(gen.params.size, **opt_kw),
        disc_opt=AdamState(disc.params.size, **opt_kw),
    )


def init_model(config: SemiGanConfig) -> SemiGanModel:
    """Build and initialize exactly as train() does before its first step."""
    model = build_model(config)
    gen_seed, disc_seed, _, _ = np.random.SeedSequence(config.seed).spawn(4)
    model.generator.init_params(gen_seed)
    model.discriminator.init_params(disc_seed)
    return model


def _stable_probs(logits: np.ndarray):
    """Shared core of the real/fake probability model.

    Returns (p, p_fake, q): p[i, k] is the probability of real class k,
    p_fake[i] the fake-class probability, q the plain N-way softmax over
    real classes (used by gradients).  The fake class has an implicit
    logit of 0, so with shift M = max(0, logits):
        p_k = e^{l_k - M} / (e^{-M} + sum_j e^{l_j - M}),
        p_fake = e^{-M} / (e^{-M} + sum_j e^{l_j - M}).
    """
    m = np.maximum(logits.max(axis=1, keepdims=True), 0.0)
    e = np.exp(logits - m)
    e_fake = np.exp(-m)[:, 0]
    denom = e.sum(axis=1) + e_fake
    p = e / denom[:, None]
    p_fake = e_fake / denom
    # q gets its own shift: with all logits far below 0 the shared shift
    # would underflow every term and 0/0 the softmax
    e_q = np.exp(logits - logits.max(axis=1, keepdims=True))
    q = e_q / e_q.sum(axis=1, keepdims=True)
    return p, p_fake, q


def class_probs(logits) -> np.ndarray:
    """Per-row probabilities over the N real classes plus the fake class.

    Accepts an (m, N) logit batch and returns (m, N+1): columns 0..N-1 are
    the real classes, column N is the fake class.  Rows sum to 1.
    """
    logits = nn.as_batch(logits)
    if not np.isfinite(logits).all():
        raise InputError("class_probs requires finite logits")
    p, p_fake, _ = _stable_probs(logits)
    return np.concatenate([p, p_fake[:, None]], axis=1)


def _clamped_log(x: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(x, LOG_FLOOR))


def loss_labeled(disc: nn.DenseNet, x_l, t):
    """Mean negative log-probability of each sample's true class.

    Returns (loss, flat gradient vector for the discriminator).
    """
    t = np.asarray(t)
    n = disc.output_width
    if t.ndim != 1 or t.shape[0] != np.asarray(x_l).shape[0]:
        raise InputError("labels must be one integer per row")
    if t.size == 0:
        raise InputError("loss_labeled needs at least one row")
    if t.min() < 0 or t.max() >= n:
        raise InputError(f"labels must lie in 0..{n - 1}")
    logits = disc.forward(x_l)
    p, _, _ = _stable_probs(logits)
    m = t.shape[0]
    loss = -_clamped_log(p[np.arange(m), t]).mean()
    d_logits = p.copy()
    d_logits[np.arange(m), t] -= 1.0
    d_logits /= m
    disc.backward(d_logits)
    return loss, disc.grads.copy()


def loss_unlabeled(disc: nn.DenseNet, x_u):
    """Mean negative log-probability that a sample is real (not fake)."""
    logits = disc.forward(x_u)
    p, p_fake, q = _stable_probs(logits)
    loss = -_clamped_log(1.0 - p_fake).mean()
    d_logits = (p - q) / logits.shape[0]
    disc.backward(d_logits)
    return loss, disc.grads.copy()


def loss_fake(disc: nn.DenseNet, x_fake):
    """Mean negative log-probability that a generated sample is fake."""
    logits = disc.forward(x_fake)
    p, p_fake, _ = _stable_probs(logits)
    loss = -_clamped_log(p_fake).mean()
    d_logits = p / logits.shape[0]
    disc.backward(d_logits)
    return loss, disc.grads.copy()


def loss_generator(model: SemiGanModel, z, _fakes=None):
    """Generator objective: make D call its output real.

    loss = mean over rows of -log(1 - p_fake(G(z))).  The gradient flows
    through the discriminator into the generator's parameters; the
    discriminator's parameters are left for the caller NOT to update.
    Returns (loss, flat gradient vector for the generator).

    _fakes: generator output for z from a forward pass that is still the
    generator's latest (training reuses its step-2 fakes; G's parameters
    have not changed in between, so the backward cache is valid).
    """
    z = nn.as_batch(z, model.generator.input_width)
    fakes = model.generator.forward(z) if _fakes is None else _fakes
    disc = model.discriminator
    logits = disc.forward(fakes)
    p, p_fake, q = _stable_probs(logits)
    loss = -_clamped_log(1.0 - p_fake).mean()
    d_logits = (p - q) / logits.shape[0]
    d_fakes = disc.backward(d_logits)
    model.generator.backward(d_fakes)
    return loss, model.generator.grads.copy()


def _guarded(step: str, iteration: int, minibatch: int, fn, *args, **kwargs):
    """Run one training step, converting numeric blowups to a divergence
    error that names where training failed."""
    try:
        result = fn(*args, **kwargs)
    except NumericError as exc:
        raise DivergenceError(step, iteration, minibatch) from exc
    loss = result[0] if isinstance(result, tuple) else None
    if loss is not None and not np.isfinite(loss):
        raise DivergenceError(step, iteration, minibatch)
    return result


def train(
    config: SemiGanConfig,
    labeled: Dataset,
    unlabeled: Dataset | None,
    validation: Dataset | None = None,
    history: list | None = None,
) -> SemiGanModel:
    """Run the full training loop; deterministic in config.seed.

    Per outer iteration the unlabeled rows are reshuffled and walked in
    minibatches of batch_size (short tail used as-is).  Per minibatch:
    sample batch_size noise rows, generate fakes, then four optimizer
    steps in order: D on the unlabeled loss, D on the fake loss, D on the
    labeled loss with ALL labeled rows as one batch, G on the generator
    loss with D's parameters untouched.

    With no unlabeled rows the fake/unlabeled/generator steps are skipped
    and each iteration is one supervised step on the labeled batch.  Pass
    a `history` list to collect one IterationLog per iteration; validation
    accuracy is filled in when `validation` is given.
    """
    if labeled.n_rows == 0:
        raise InputError("train requires at least one labeled row")
    if labeled.labels is None:
        raise InputError("labeled dataset is missing labels")
    if labeled.n_features != config.n_features:
        raise InputError(
            f"labeled data has {labeled.n_features} features, "
            f"config expects {config.n_features}"
        )
    if unlabeled is not None and unlabeled.n_rows > 0:
        if unlabeled.n_features != config.n_features:
            raise InputError(
                f"unlabeled data has {unlabeled.n_features} features, "
                f"config expects {config.n_features}"
            )
        x_u_all = unlabeled.features
    else:
        x_u_all = None

    model = build_model(config)
    gen_seed, disc_seed, shuffle_seed, noise_seed = np.random.SeedSequence(
        config.seed
    ).spawn(4)
    model.generator.init_params(gen_seed)
    model.discriminator.init_params(disc_seed)
    shuffle_rng = np.random.default_rng(shuffle_seed)
    noise_rng = np.random.default_rng(noise_seed)

    disc = model.discriminator
    gen = model.generator
    x_l, t_l = labeled.features, labeled.labels
    b_m = config.batch_size

    for it in range(config.iterations):
        sums = np.zeros(4)
        n_batches = 0
        if x_u_all is None:
            starts = [None]
        else:
            order = shuffle_rng.permutation(x_u_all.shape[0])
            starts = range(0, x_u_all.shape[0], b_m)
        for k, start in enumerate(starts):
            if start is None:
                l_u = l_f = l_g = 0.0
            else:
                x_u = x_u_all[order[start : start + b_m]]
                z = noise_rng.standard_normal((b_m, config.noise_dim))
                fakes = _guarded("generate", it, k, gen.forward, z)

                l_u, g_u = _guarded("unlabeled", it, k, loss_unlabeled, disc, x_u)
                adam_step(model.disc_opt, disc.params, g_u)

                l_f, g_f = _guarded("fake", it, k, loss_fake, disc, fakes)
                adam_step(model.disc_opt, disc.params, g_f)

            l_l, g_l = _guarded("labeled", it, k, loss_labeled, disc, x_l, t_l)
            adam_step(model.disc_opt, disc.params, g_l)

            if start is not None:
                l_g, g_g = _guarded(
                    "generator", it, k, loss_generator, model, z, _fakes=fakes
                )
                adam_step(model.gen_opt, gen.params, g_g)

            sums += (l_l, l_u, l_f, l_g)
            n_batches += 1

        if history is not None:
            means = sums / max(n_batches, 1)
            acc = None
            if validation is not None and validation.labels is not None:
                pred = classify(model, validation.features)
                acc = float((pred == validation.labels).mean())
            history.append(
                IterationLog(
                    iteration=it,
                    loss_labeled=float(means[0]),
                    loss_unlabeled=float(means[1]),
                    loss_fake=float(means[2]),
                    loss_generator=float(means[3]),
                    val_accuracy=acc,
                )
            )
    return model


def classify(model: SemiGanModel, x) -> np.ndarray:
    """Most probable real class per row; ties go to the lowest index.

    The fake class never wins: argmax runs over the N real classes only,
    and the real-class ordering under the (N+1)-way model matches the
    ordering of the raw logits.
    """
    logits = model.discriminator.forward(x)
    return np.argmax(logits, axis=1)
