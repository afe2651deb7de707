"""Numpy implementations of the hot training kernels.

This is the fallback backend; `semifdd._kernels` (Cython) exposes the same
functions with identical semantics.  All arrays are C-contiguous float64;
shape checking happens in the callers, not here.

Activation codes: 0 = identity, 1 = tanh, 2 = leaky relu (extra = slope).
"""

import numpy as np

ACT_IDENTITY = 0
ACT_TANH = 1
ACT_LEAKY_RELU = 2


def affine_forward(x, w, b):
    """out = x @ w + b for x (m,k), w (k,n), b (n,)."""
    return x @ w + b


def act_forward(kind, slope, z):
    if kind == ACT_IDENTITY:
        return z.copy()
    if kind == ACT_TANH:
        return np.tanh(z)
    if kind == ACT_LEAKY_RELU:
        return np.where(z > 0.0, z, slope * z)
    raise ValueError(f"unknown activation code {kind}")


def act_backward(kind, slope, z, d_out):
    """d_pre = d_out * activation'(z), using the cached pre-activations z."""
    if kind == ACT_IDENTITY:
        return d_out.copy()
    if kind == ACT_TANH:
        t = np.tanh(z)
        return d_out * (1.0 - t * t)
    if kind == ACT_LEAKY_RELU:
        return d_out * np.where(z > 0.0, 1.0, slope)
    raise ValueError(f"unknown activation code {kind}")


def affine_backward(x, w, d_pre):
    """Gradients of an affine layer: (dW, db, dX) with batch-summed dW/db."""
    dw = x.T @ d_pre
    db = d_pre.sum(axis=0)
    dx = d_pre @ w.T
    return dw, db, dx


def adam_update(params, grads, m, v, t, lr, beta1, beta2, eps):
    """One bias-corrected Adam step, in place on params/m/v. t is 1-based."""
    m *= beta1
    m += (1.0 - beta1) * grads
    v *= beta2
    v += (1.0 - beta2) * grads * grads
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    params -= lr * m_hat / (np.sqrt(v_hat) + eps)
