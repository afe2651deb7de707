"""Flat key-value config files for training jobs and sweep plans.

Format: one `key = value` per line, `#` starts a comment, blank lines are
skipped.  Lists are comma-separated.  Every training-configuration and
plan field is a key, so a file can configure a whole sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from semifdd import harness, semigan
from semifdd.errors import InputError


def parse_kv_text(text: str, origin: str = "<string>") -> dict:
    """Parse flat key-value lines into an ordered dict of strings."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{origin}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise InputError(f"{origin}:{lineno}: empty key")
        if key in out:
            raise InputError(f"{origin}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_kv_file(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_kv_text(fh.read(), origin=str(path))


def _int(v: str) -> int:
    return int(v)


def _float(v: str) -> float:
    return float(v)


def _str(v: str) -> str:
    return v


def _bool(v: str) -> bool:
    low = v.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _int_tuple(v: str) -> tuple:
    return tuple(int(p.strip()) for p in v.split(",") if p.strip())


def _str_tuple(v: str) -> tuple:
    return tuple(p.strip() for p in v.split(",") if p.strip())


_GAN_FIELDS = {
    "n_classes": _int,
    "noise_dim": _int,
    "gen_layers": _int_tuple,
    "disc_layers": _int_tuple,
    "batch_size": _int,
    "iterations": _int,
    "lr": _float,
    "beta1": _float,
    "beta2": _float,
    "eps": _float,
    "seed": _int,
}

_PLAN_FIELDS = {
    "labeled_sizes": _int_tuple,
    "unlabeled_sizes": _int_tuple,
    "n_dataset_redraws": _int,
    "n_inits": _int,
    "methods": _str_tuple,
    "base_seed": _int,
    "n_validation": _int,
    "n_test": _int,
    "selection": _str,
    "baseline_epochs": _int,
    "preprocess": _bool,
}

_JOB_FIELDS = {
    "data": _str,
    "method": _str,
    "model_out": _str,
    "history_out": _str,
    "preprocess": _bool,
    "epochs": _int,
    "has_severity": _bool,
}


def _consume(kv: dict, spec: dict, origin: str) -> dict:
    taken = {}
    for key, convert in spec.items():
        if key in kv:
            try:
                taken[key] = convert(kv.pop(key))
            except ValueError as exc:
                raise InputError(f"{origin}: bad value for {key!r}: {exc}") from exc
    return taken


def _reject_leftovers(kv: dict, origin: str) -> None:
    if kv:
        raise InputError(f"{origin}: unknown keys: {', '.join(sorted(kv))}")


def gan_config_from_kv(kv: dict, origin: str = "<config>") -> semigan.SemiGanConfig:
    """SemiGanConfig from flat keys, defaults for anything absent.

    Boundary widths follow the simple keys when layers are not spelled
    out: n_classes moves the discriminator's output width and noise_dim
    the generator's input width, so `n_classes = 2` alone is a complete
    override of the 8-class default.
    """
    taken = _consume(kv, _GAN_FIELDS, origin)
    defaults = semigan.SemiGanConfig()
    if "n_classes" in taken and "disc_layers" not in taken:
        taken["disc_layers"] = defaults.disc_layers[:-1] + (taken["n_classes"],)
    if "noise_dim" in taken and "gen_layers" not in taken:
        taken["gen_layers"] = (taken["noise_dim"],) + defaults.gen_layers[1:]
    try:
        return replace(defaults, **taken)
    except InputError as exc:
        raise InputError(f"{origin}: {exc}") from exc


@dataclass
class TrainJob:
    """Everything `fdd train` needs: data, method, outputs, hyperparameters."""

    data: str
    model_out: str
    method: str = "semigan"
    history_out: str | None = None
    preprocess: bool = True
    epochs: int = 100
    has_severity: bool = False
    gan: semigan.SemiGanConfig = field(default_factory=semigan.SemiGanConfig)
    # widths came from the config file; otherwise they adapt to the data
    explicit_layers: bool = False

    def __post_init__(self):
        if self.method not in harness.METHODS:
            raise InputError(
                f"method must be one of {harness.METHODS}, got {self.method!r}"
            )


def train_job_from_kv(kv: dict, origin: str = "<config>") -> TrainJob:
    kv = dict(kv)
    explicit = "gen_layers" in kv or "disc_layers" in kv
    gan = gan_config_from_kv(kv, origin)
    taken = _consume(kv, _JOB_FIELDS, origin)
    _reject_leftovers(kv, origin)
    for required in ("data", "model_out"):
        if required not in taken:
            raise InputError(f"{origin}: missing required key {required!r}")
    return TrainJob(gan=gan, explicit_layers=explicit, **taken)


def plan_from_kv(kv: dict, origin: str = "<plan>") -> harness.ExperimentPlan:
    kv = dict(kv)
    gan = gan_config_from_kv(kv, origin)
    taken = _consume(kv, _PLAN_FIELDS, origin)
    _reject_leftovers(kv, origin)
    try:
        return harness.ExperimentPlan(gan=gan, **taken)
    except InputError as exc:
        raise InputError(f"{origin}: {exc}") from exc


def load_train_job(path) -> TrainJob:
    return train_job_from_kv(parse_kv_file(path), origin=str(path))


def load_plan(path) -> harness.ExperimentPlan:
    return plan_from_kv(parse_kv_file(path), origin=str(path))


def plan_to_text(plan: harness.ExperimentPlan) -> str:
    """Render a plan (and its training config) back to key-value lines."""
    lines = []
    for f in fields(plan):
        value = getattr(plan, f.name)
        if f.name == "gan":
            continue
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{f.name} = {value}")
    for f in fields(plan.gan):
        value = getattr(plan.gan, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
