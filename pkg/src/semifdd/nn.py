"""Small dense feed-forward networks with exact reverse-mode gradients.

Parameters live in one flat float64 vector (per layer: weights row-major,
then biases) with a gradient vector of the same layout.  backward() sums
gradients over the batch rows; any 1/m averaging is the caller's job.
All arithmetic is float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from semifdd import backend
from semifdd.errors import DimensionError, NumericError, StateError

_ACT_CODES = {
    "identity": backend.ACT_IDENTITY,
    "tanh": backend.ACT_TANH,
    "leaky_relu": backend.ACT_LEAKY_RELU,
}


@dataclass(frozen=True)
class Activation:
    kind: str
    slope: float = 0.0

    def __post_init__(self):
        if self.kind not in _ACT_CODES:
            raise ValueError(f"unknown activation {self.kind!r}")
        if self.kind == "leaky_relu" and not 0.0 < self.slope < 1.0:
            raise ValueError("leaky_relu slope must be in (0, 1)")


IDENTITY = Activation("identity")
TANH = Activation("tanh")


def leaky_relu(slope: float = 0.2) -> Activation:
    return Activation("leaky_relu", slope)


@dataclass(frozen=True)
class LayerSpec:
    input_width: int
    output_width: int
    activation: Activation

    def __post_init__(self):
        if self.input_width < 1 or self.output_width < 1:
            raise ValueError("layer widths must be >= 1")

    @property
    def n_params(self) -> int:
        return self.input_width * self.output_width + self.output_width


def mlp_specs(widths, hidden: Activation, output: Activation) -> list[LayerSpec]:
    """Layer specs for a plain MLP given [in, h1, ..., out] widths."""
    if len(widths) < 2:
        raise ValueError("need at least input and output widths")
    specs = []
    for i in range(len(widths) - 1):
        act = output if i == len(widths) - 2 else hidden
        specs.append(LayerSpec(widths[i], widths[i + 1], act))
    return specs


def as_batch(values, width: int | None = None) -> np.ndarray:
    """Validate a row-major real matrix and return it as contiguous float64."""
    x = np.ascontiguousarray(values, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"batch must be 2-D, got shape {x.shape}")
    if width is not None and x.shape[1] != width:
        raise DimensionError(f"batch width {x.shape[1]} != expected {width}")
    return x


class DenseNet:
    """Ordered affine+activation stack over a flat parameter store."""

    def __init__(self, layers: list[LayerSpec]):
        if not layers:
            raise ValueError("a net needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.output_width != b.input_width:
                raise ValueError(
                    f"layer widths do not chain: {a.output_width} -> {b.input_width}"
                )
        self.layers = list(layers)
        self.params = np.zeros(sum(s.n_params for s in layers), dtype=np.float64)
        self.grads = np.zeros_like(self.params)
        self._weights, self._biases = self._views(self.params)
        self._wgrads, self._bgrads = self._views(self.grads)
        self._cache = None

    def _views(self, flat):
        weights, biases, off = [], [], 0
        for s in self.layers:
            n_w = s.input_width * s.output_width
            weights.append(flat[off : off + n_w].reshape(s.input_width, s.output_width))
            off += n_w
            biases.append(flat[off : off + s.output_width])
            off += s.output_width
        return weights, biases

    @property
    def input_width(self) -> int:
        return self.layers[0].input_width

    @property
    def output_width(self) -> int:
        return self.layers[-1].output_width

    @property
    def widths(self) -> list[int]:
        return [self.input_width] + [s.output_width for s in self.layers]

    def weight(self, i: int) -> np.ndarray:
        """Writable (input_width, output_width) view of layer i's weights."""
        return self._weights[i]

    def bias(self, i: int) -> np.ndarray:
        return self._biases[i]

    def init_params(self, rng_seed: int) -> None:
        """Uniform Glorot weights (+-sqrt(6/(fan_in+fan_out))), zero biases."""
        rng = np.random.default_rng(rng_seed)
        for spec, w, b in zip(self.layers, self._weights, self._biases):
            a = np.sqrt(6.0 / (spec.input_width + spec.output_width))
            w[:] = rng.uniform(-a, a, size=w.shape)
            b[:] = 0.0
        self._cache = None

    def forward(self, batch) -> np.ndarray:
        """Run the stack on a (rows, input_width) batch; caches for backward."""
        x = as_batch(batch, self.input_width)
        k = backend.kernels
        cache = []
        for spec, w, b in zip(self.layers, self._weights, self._biases):
            z = k.affine_forward(x, w, b)
            cache.append((x, z))
            x = k.act_forward(_ACT_CODES[spec.activation.kind], spec.activation.slope, z)
        if not np.isfinite(x).all():
            raise NumericError("non-finite values in forward output")
        self._cache = cache
        return x

    def backward(self, output_grad) -> np.ndarray:
        """Fill self.grads with d(loss)/d(params) for the last forward.

        output_grad is d(loss)/d(output), already carrying any 1/m factor.
        Returns d(loss)/d(input), which lets nets be chained.
        """
        if self._cache is None:
            raise StateError("backward() called before forward()")
        rows = self._cache[0][0].shape[0]
        d_out = as_batch(output_grad, self.output_width)
        if d_out.shape[0] != rows:
            raise DimensionError(
                f"output_grad has {d_out.shape[0]} rows, forward saw {rows}"
            )
        k = backend.kernels
        for i in range(len(self.layers) - 1, -1, -1):
            spec = self.layers[i]
            x, z = self._cache[i]
            d_pre = k.act_backward(
                _ACT_CODES[spec.activation.kind], spec.activation.slope, z, d_out
            )
            dw, db, d_out = k.affine_backward(x, self._weights[i], d_pre)
            self._wgrads[i][:] = dw
            self._bgrads[i][:] = db
        return d_out

    def copy(self) -> "DenseNet":
        dup = DenseNet(self.layers)
        dup.params[:] = self.params
        return dup
