"""Adam optimizer over flat parameter/gradient vectors."""

from __future__ import annotations

import numpy as np

from semifdd import backend
from semifdd.errors import DimensionError, NumericError


class AdamState:
    """Moment accumulators for one parameter vector.

    Defaults follow the usual stable choice for adversarial training
    (beta1 = 0.5); everything is overridable through the config layer.
    """

    def __init__(self, n_params: int, lr: float = 2e-3, beta1: float = 0.5,
                 beta2: float = 0.999, eps: float = 1e-8):
        if n_params < 1:
            raise ValueError("n_params must be >= 1")
        if lr <= 0.0 or eps <= 0.0:
            raise ValueError("lr and eps must be positive")
        if not (0.0 < beta1 < 1.0 and 0.0 < beta2 < 1.0):
            raise ValueError("betas must be in (0, 1)")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step = 0
        self.m = np.zeros(n_params, dtype=np.float64)
        self.v = np.zeros(n_params, dtype=np.float64)


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray) -> None:
    """Apply one bias-corrected Adam update to params, in place."""
    if params.shape != state.m.shape or grads.shape != state.m.shape:
        raise DimensionError(
            f"adam_step length mismatch: params {params.shape}, "
            f"grads {grads.shape}, state {state.m.shape}"
        )
    if not np.isfinite(grads).all():
        raise NumericError("non-finite gradients passed to adam_step")
    state.step += 1
    backend.kernels.adam_update(
        params, grads, state.m, state.v, state.step,
        state.lr, state.beta1, state.beta2, state.eps,
    )
