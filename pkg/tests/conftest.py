"""Shared test utilities: finite-difference oracle and gradient comparison."""

import numpy as np
import pytest

from semifdd import semigan


def finite_diff(params: np.ndarray, loss_fn, eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of loss_fn() w.r.t. a flat param vector.

    loss_fn takes no arguments and reads `params` (a live view); entries
    are perturbed in place and restored.
    """
    base = params.copy()
    grad = np.empty_like(base)
    for i in range(base.size):
        params[i] = base[i] + eps
        up = loss_fn()
        params[i] = base[i] - eps
        down = loss_fn()
        params[i] = base[i]
        grad[i] = (up - down) / (2.0 * eps)
    params[:] = base
    return grad


def assert_grads_close(analytic: np.ndarray, numeric: np.ndarray, rtol: float = 1e-4):
    """Elementwise relative comparison with an absolute floor for gradients
    too small for a meaningful ratio."""
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    assert analytic.shape == numeric.shape
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    tiny = scale < 1e-6
    diff = np.abs(analytic - numeric)
    if tiny.any():
        np.testing.assert_array_less(diff[tiny], 1e-9)
    big = ~tiny
    if big.any():
        rel = diff[big] / scale[big]
        assert rel.max() < rtol, f"max relative gradient error {rel.max():.3e}"


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_gan_config(rng) -> semigan.SemiGanConfig:
    """Small random generator/discriminator shapes for gradient checks."""
    noise = int(rng.integers(2, 5))
    feat = int(rng.integers(3, 6))
    classes = int(rng.integers(2, 6))
    g_hidden = tuple(int(rng.integers(3, 7)) for _ in range(int(rng.integers(1, 3))))
    d_hidden = tuple(int(rng.integers(3, 7)) for _ in range(int(rng.integers(1, 3))))
    return semigan.SemiGanConfig(
        n_classes=classes,
        noise_dim=noise,
        gen_layers=(noise, *g_hidden, feat),
        disc_layers=(feat, *d_hidden, classes),
        seed=int(rng.integers(2**31)),
    )


def semigan_fd_cases(seed: int):
    """All four training losses on one random net/batch.

    Yields (name, analytic_gradient, finite_difference_gradient) triples,
    one per loss, each computed on freshly drawn data.
    """
    rng = np.random.default_rng(seed)
    config = random_gan_config(rng)
    model = semigan.init_model(config)
    disc, gen = model.discriminator, model.generator
    m = int(rng.integers(2, 6))
    x = rng.normal(size=(m, config.n_features))
    t = rng.integers(0, config.n_classes, size=m)
    z = rng.normal(size=(m, config.noise_dim))
    fakes = gen.forward(z).copy()

    _, g = semigan.loss_labeled(disc, x, t)
    num = finite_diff(disc.params, lambda: semigan.loss_labeled(disc, x, t)[0])
    yield "labeled", g, num

    _, g = semigan.loss_unlabeled(disc, x)
    num = finite_diff(disc.params, lambda: semigan.loss_unlabeled(disc, x)[0])
    yield "unlabeled", g, num

    _, g = semigan.loss_fake(disc, fakes)
    num = finite_diff(disc.params, lambda: semigan.loss_fake(disc, fakes)[0])
    yield "fake", g, num

    _, g = semigan.loss_generator(model, z)
    num = finite_diff(gen.params, lambda: semigan.loss_generator(model, z)[0])
    yield "generator", g, num
