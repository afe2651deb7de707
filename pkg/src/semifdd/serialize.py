"""Text serialization: CSV emission, network files, and model bundles.

All floats are written with repr(), the shortest decimal that parses back
to the identical IEEE-754 double, so every round-trip is bit-exact and
every rerun of a deterministic computation emits byte-identical files.
"""

from __future__ import annotations

import io
import os

import numpy as np

from semifdd import nn
from semifdd.errors import DataFormatError, InputError
from semifdd.preprocess import FeatureStats, Preprocessor

NET_MAGIC = "fdd-net"
MODEL_MAGIC = "fdd-model"
FORMAT_VERSION = 1

MODEL_KINDS = ("semigan", "nn1", "nn2")


def format_value(value) -> str:
    """Canonical text for one CSV cell or record field."""
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def format_float(value) -> str:
    return repr(float(value))


def write_csv(path, header, rows) -> None:
    """Write a CSV with canonical cell formatting and \\n newlines."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(str(h) for h in header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")


def _vector_line(name: str, values: np.ndarray) -> str:
    return name + " " + " ".join(repr(float(v)) for v in values)


def _parse_vector(line: str, name: str) -> np.ndarray:
    parts = line.split()
    if not parts or parts[0] != name:
        raise DataFormatError(f"expected '{name} ...' line, got {line!r}")
    return np.array([float(p) for p in parts[1:]], dtype=np.float64)


def dump_net(net: nn.DenseNet, out: io.TextIOBase) -> None:
    """Layer specs then parameters, one value per line, layer-major."""
    out.write(f"{NET_MAGIC} {FORMAT_VERSION}\n")
    out.write(f"layers {len(net.layers)}\n")
    for spec in net.layers:
        act = spec.activation
        out.write(
            f"layer {spec.input_width} {spec.output_width} "
            f"{act.kind} {repr(float(act.slope))}\n"
        )
    out.write(f"params {net.params.size}\n")
    for value in net.params:
        out.write(repr(float(value)) + "\n")


def _read_line(lines, what: str) -> str:
    try:
        return next(lines)
    except StopIteration:
        raise DataFormatError(f"truncated file: expected {what}") from None


def parse_net(lines) -> nn.DenseNet:
    """Inverse of dump_net over an iterator of stripped lines."""
    head = _read_line(lines, "header").split()
    if len(head) != 2 or head[0] != NET_MAGIC:
        raise DataFormatError(f"not a network file (header {head!r})")
    if int(head[1]) != FORMAT_VERSION:
        raise DataFormatError(f"unsupported format version {head[1]}")
    count_line = _read_line(lines, "layer count").split()
    if count_line[0] != "layers":
        raise DataFormatError("expected 'layers <n>'")
    n_layers = int(count_line[1])
    specs = []
    for _ in range(n_layers):
        parts = _read_line(lines, "layer spec").split()
        if len(parts) != 5 or parts[0] != "layer":
            raise DataFormatError(f"bad layer line {parts!r}")
        specs.append(
            nn.LayerSpec(
                int(parts[1]),
                int(parts[2]),
                nn.Activation(parts[3], float(parts[4])),
            )
        )
    params_line = _read_line(lines, "param count").split()
    if params_line[0] != "params":
        raise DataFormatError("expected 'params <n>'")
    n_params = int(params_line[1])
    net = nn.DenseNet(specs)
    if n_params != net.params.size:
        raise DataFormatError(
            f"parameter count {n_params} does not match layer specs "
            f"({net.params.size})"
        )
    values = np.empty(n_params)
    for i in range(n_params):
        values[i] = float(_read_line(lines, f"parameter {i}"))
    net.params[:] = values
    return net


def save_net(net: nn.DenseNet, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        dump_net(net, fh)


def load_net(path) -> nn.DenseNet:
    with open(path, encoding="utf-8") as fh:
        return parse_net(iter(line.rstrip("\n") for line in fh))


class ModelBundle:
    """A trained classifier net plus the preprocessing fitted with it.

    predict() accepts raw feature rows with the training-time column count,
    applies the stored column drop and scaling, and returns labels.
    """

    def __init__(self, kind: str, n_classes: int, pre: Preprocessor, net: nn.DenseNet):
        if kind not in MODEL_KINDS:
            raise InputError(f"unknown model kind {kind!r}")
        self.kind = kind
        self.n_classes = n_classes
        self.pre = pre
        self.net = net

    def predict(self, features) -> np.ndarray:
        from semifdd.data import Dataset

        data = Dataset(np.ascontiguousarray(features, dtype=np.float64))
        scaled = self.pre.transform(data)
        logits = self.net.forward(scaled.features)
        return np.argmax(logits, axis=1)


def save_model(bundle: ModelBundle, path) -> None:
    stats = bundle.pre.stats
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"{MODEL_MAGIC} {FORMAT_VERSION}\n")
        fh.write(f"kind {bundle.kind}\n")
        fh.write(f"n_classes {bundle.n_classes}\n")
        fh.write(f"n_features_in {bundle.pre.n_features_in}\n")
        dropped = " ".join(str(int(i)) for i in bundle.pre.dropped_columns)
        fh.write(("dropped_columns " + dropped).rstrip() + "\n")
        for name, vec in (
            ("feature_mean", stats.mean),
            ("feature_std", stats.std),
            ("feature_min", stats.min),
            ("feature_max", stats.max),
            ("rate_mean", stats.rate_mean),
            ("rate_std", stats.rate_std),
        ):
            fh.write(_vector_line(name, vec) + "\n")
        dump_net(bundle.net, fh)


def load_model(path) -> ModelBundle:
    with open(path, encoding="utf-8") as fh:
        lines = iter(line.rstrip("\n") for line in fh)
        head = _read_line(lines, "header").split()
        if len(head) != 2 or head[0] != MODEL_MAGIC:
            raise DataFormatError(f"not a model file (header {head!r})")
        if int(head[1]) != FORMAT_VERSION:
            raise DataFormatError(f"unsupported format version {head[1]}")

        def field(name):
            parts = _read_line(lines, name).split()
            if parts[0] != name:
                raise DataFormatError(f"expected '{name}', got {parts[0]!r}")
            return parts[1:]

        kind = field("kind")[0]
        n_classes = int(field("n_classes")[0])
        n_features_in = int(field("n_features_in")[0])
        dropped = np.array([int(v) for v in field("dropped_columns")], dtype=np.int64)
        vectors = {}
        for name in (
            "feature_mean",
            "feature_std",
            "feature_min",
            "feature_max",
            "rate_mean",
            "rate_std",
        ):
            vectors[name] = _parse_vector(_read_line(lines, name), name)
        net = parse_net(lines)
        stats = FeatureStats(
            mean=vectors["feature_mean"],
            std=vectors["feature_std"],
            min=vectors["feature_min"],
            max=vectors["feature_max"],
            rate_mean=vectors["rate_mean"],
            rate_std=vectors["rate_std"],
        )
        pre = Preprocessor(
            dropped_columns=dropped, stats=stats, n_features_in=n_features_in
        )
        return ModelBundle(kind, n_classes, pre, net)


def write_history_csv(path, history) -> None:
    """Per-iteration training log in CSV form."""
    fields = (
        "iteration",
        "loss_labeled",
        "loss_unlabeled",
        "loss_fake",
        "loss_generator",
        "val_accuracy",
    )
    write_csv(path, fields, [[getattr(h, f) for f in fields] for h in history])


def ensure_dir(path) -> None:
    os.makedirs(path, exist_ok=True)
