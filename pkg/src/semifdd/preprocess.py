"""Preprocessing pipeline: outlier removal, constant-feature drop, scaling.

Fixed order: value outliers, rate outliers, constant-feature drop, min-max
standardization to [-1, 1].  All statistics are population statistics
(ddof=0) computed from the data handed to the fitting call; the harness
fits on training rows only, so the test partition never influences them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from semifdd.data import Dataset
from semifdd.errors import InputError

SIGMA_LIMIT = 7.0

PIPELINE_STEPS = ("value_outliers", "rate_outliers", "drop_constant", "standardize")


@dataclass
class FeatureStats:
    """Per-feature statistics of a training partition."""

    mean: np.ndarray
    std: np.ndarray
    min: np.ndarray
    max: np.ndarray
    rate_mean: np.ndarray
    rate_std: np.ndarray


@dataclass
class PreprocessReport:
    """Provenance record: what each pipeline step did, in order."""

    steps: list = field(default_factory=list)
    value_outliers_removed: int = 0
    rate_outliers_removed: int = 0
    dropped_feature_indices: list = field(default_factory=list)

    def record(self, step: str) -> None:
        self.steps.append(step)

    def summary(self) -> str:
        return (
            f"steps={'>'.join(self.steps)} "
            f"value_outliers={self.value_outliers_removed} "
            f"rate_outliers={self.rate_outliers_removed} "
            f"dropped_features={self.dropped_feature_indices}"
        )


def remove_value_outliers(data: Dataset):
    """Drop rows holding any value more than 7 standard deviations from
    that feature's mean.  Features with zero spread never trigger removal.

    Returns (kept dataset, removed row indices in input order).
    """
    if data.n_rows < 2:
        raise InputError("value-outlier rule needs at least 2 rows")
    x = data.features
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    limit = SIGMA_LIMIT * std
    bad = np.zeros(data.n_rows, dtype=bool)
    active = std > 0.0
    if active.any():
        bad = (np.abs(x[:, active] - mean[active]) > limit[active]).any(axis=1)
    removed = np.flatnonzero(bad)
    return data.take(np.flatnonzero(~bad)), removed


def remove_rate_outliers(data: Dataset):
    """Drop spike rows: both per-feature changing rates adjacent to the row
    exceed rate_mean + 7*rate_std.

    The changing rate at instant t is |x(t+1) - x(t)|; a row is a spike
    when the rate into it and the rate out of it are both outlying, which
    removes an isolated jump but keeps a genuine level shift.  The first
    and last rows have only one adjacent rate and are never removed.
    Rows must be in time order.
    """
    if data.n_rows < 3:
        raise InputError("rate-outlier rule needs at least 3 rows")
    rates = np.abs(np.diff(data.features, axis=0))  # rates[t] = |x(t+1)-x(t)|
    thresh = rates.mean(axis=0) + SIGMA_LIMIT * rates.std(axis=0)
    outlying = rates > thresh  # (n-1, F)
    spike = outlying[:-1] & outlying[1:]  # row t+1 has rates t and t+1
    bad = np.zeros(data.n_rows, dtype=bool)
    bad[1:-1] = spike.any(axis=1)
    removed = np.flatnonzero(bad)
    return data.take(np.flatnonzero(~bad)), removed


def drop_constant_features(data: Dataset):
    """Remove features whose variance over these rows is exactly zero.

    Returns (dataset with columns removed, dropped column indices), so the
    same columns can be filtered from inference inputs.
    """
    if data.n_rows < 1:
        raise InputError("drop_constant_features needs a nonempty dataset")
    x = data.features
    constant = x.max(axis=0) == x.min(axis=0)
    dropped = np.flatnonzero(constant)
    if dropped.size == 0:
        return data, dropped
    kept = np.flatnonzero(~constant)
    names = None
    if data.feature_names is not None:
        names = [data.feature_names[i] for i in kept]
    return data.with_features(x[:, kept], names), dropped


def fit_standardizer(train: Dataset) -> FeatureStats:
    """Per-feature stats of the training partition (and only it)."""
    if train.n_rows < 1:
        raise InputError("fit_standardizer needs a nonempty dataset")
    x = train.features
    if x.shape[0] >= 2:
        rates = np.abs(np.diff(x, axis=0))
        rate_mean, rate_std = rates.mean(axis=0), rates.std(axis=0)
    else:
        rate_mean = np.zeros(x.shape[1])
        rate_std = np.zeros(x.shape[1])
    return FeatureStats(
        mean=x.mean(axis=0),
        std=x.std(axis=0),
        min=x.min(axis=0),
        max=x.max(axis=0),
        rate_mean=rate_mean,
        rate_std=rate_std,
    )


def apply_standardizer(stats: FeatureStats, data: Dataset) -> Dataset:
    """Affine map of each feature's [min, max] onto [-1, 1].

    Constant features (max == min) map to 0; values outside the fitted
    range pass through the same affine map and land outside [-1, 1].
    """
    if data.n_features != stats.min.shape[0]:
        raise InputError(
            f"standardizer fitted on {stats.min.shape[0]} features, "
            f"data has {data.n_features}"
        )
    span = stats.max - stats.min
    safe = np.where(span > 0.0, span, 1.0)
    scaled = 2.0 * (data.features - stats.min) / safe - 1.0
    scaled[:, span == 0.0] = 0.0
    return data.with_features(scaled, data.feature_names)


@dataclass
class Preprocessor:
    """Fitted column filter + standardizer, applied identically everywhere."""

    dropped_columns: np.ndarray
    stats: FeatureStats
    n_features_in: int

    def transform(self, data: Dataset) -> Dataset:
        if data.n_features != self.n_features_in:
            raise InputError(
                f"preprocessor fitted on {self.n_features_in} features, "
                f"data has {data.n_features}"
            )
        if self.dropped_columns.size:
            kept = np.setdiff1d(np.arange(self.n_features_in), self.dropped_columns)
            names = None
            if data.feature_names is not None:
                names = [data.feature_names[i] for i in kept]
            data = data.with_features(data.features[:, kept], names)
        return apply_standardizer(self.stats, data)


def fit_preprocessor(train: Dataset, report: PreprocessReport | None = None) -> Preprocessor:
    """Fit the column-level steps (constant drop + standardizer) on training
    rows.  Row-level outlier removal is a separate, earlier step because it
    applies to the raw time-ordered source, not to partitions.
    """
    n_in = train.n_features
    filtered, dropped = drop_constant_features(train)
    stats = fit_standardizer(filtered)
    if report is not None:
        report.record("drop_constant")
        report.record("standardize")
        report.dropped_feature_indices = [int(i) for i in dropped]
    return Preprocessor(dropped_columns=dropped, stats=stats, n_features_in=n_in)


def clean_source(data: Dataset, report: PreprocessReport | None = None) -> Dataset:
    """Run both row-level outlier rules on a raw time-ordered dataset."""
    kept, removed_values = remove_value_outliers(data)
    kept, removed_rates = remove_rate_outliers(kept)
    if report is not None:
        report.record("value_outliers")
        report.record("rate_outliers")
        report.value_outliers_removed = int(removed_values.size)
        report.rate_outliers_removed = int(removed_rates.size)
    return kept


def preprocess_pipeline(data: Dataset):
    """Full pipeline on one dataset (fit and transform on the same rows).

    Returns (preprocessed dataset, PreprocessReport, Preprocessor).  This is
    what `fdd preprocess` runs; the sweep harness instead fits the column
    steps per training partition.
    """
    report = PreprocessReport()
    cleaned = clean_source(data, report)
    pre = fit_preprocessor(cleaned, report)
    assert tuple(report.steps) == PIPELINE_STEPS
    return pre.transform(cleaned), report, pre
