"""Semi-supervised fault diagnosis for chiller sensor data.

A discriminator trained against a generator on labeled, unlabeled, and
generated samples becomes the fault classifier; supervised baselines,
preprocessing, a deterministic experiment harness, and a CLI round out
the package.
"""

from semifdd.errors import (
    DataFormatError,
    DimensionError,
    DivergenceError,
    FddError,
    InputError,
    NumericError,
    StateError,
)

__version__ = "0.1.0"

__all__ = [
    "DataFormatError",
    "DimensionError",
    "DivergenceError",
    "FddError",
    "InputError",
    "NumericError",
    "StateError",
    "__version__",
]
