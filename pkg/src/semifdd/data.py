"""Dataset container, CSV ingestion, deterministic splits, and synthetic data.

Fault labels follow the fixed mapping 0=normal, 1=cf, 2=eo, 3=fwc, 4=fwe,
5=nc, 6=rl, 7=ro.  Severity, when present, is 1..4 on faulty rows.

CSV format: UTF-8, comma separated, header row; one `label` column (integer
or empty for unlabeled), an optional `severity` column (integer or empty),
every other column a numeric feature.  Row order is preserved because the
rate-outlier rule reads rows as a time series.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from semifdd.errors import DataFormatError, InputError

N_FAULT_CLASSES = 8
UNLABELED = -1

FAULT_NAMES = ("normal", "cf", "eo", "fwc", "fwe", "nc", "rl", "ro")


@dataclass
class Dataset:
    """Feature matrix plus optional per-row label/severity metadata.

    labels is None when the label field is absent entirely (the stripped
    unlabeled partition); otherwise int64 with UNLABELED (-1) marking rows
    whose label is unknown.  severity is None or int64 with 0 = no severity.
    """

    features: np.ndarray
    labels: np.ndarray | None = None
    severity: np.ndarray | None = None
    feature_names: list[str] | None = None

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise InputError("features must be a 2-D matrix")
        n = self.features.shape[0]
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (n,):
                raise InputError("labels length must match the row count")
            bad = (self.labels < UNLABELED) | (self.labels >= N_FAULT_CLASSES)
            if bad.any():
                raise InputError(
                    f"labels must be {UNLABELED} (unlabeled) or 0..{N_FAULT_CLASSES - 1}"
                )
        if self.severity is not None:
            self.severity = np.asarray(self.severity, dtype=np.int64)
            if self.severity.shape != (n,):
                raise InputError("severity length must match the row count")
            if ((self.severity < 0) | (self.severity > 4)).any():
                raise InputError("severity must be 0 (none) or 1..4")
        if self.feature_names is not None and len(self.feature_names) != self.features.shape[1]:
            raise InputError("feature_names length must match the feature count")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def take(self, idx) -> "Dataset":
        """Row subset (all metadata sliced consistently)."""
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(
            self.features[idx],
            None if self.labels is None else self.labels[idx],
            None if self.severity is None else self.severity[idx],
            self.feature_names,
        )

    def without_labels(self) -> "Dataset":
        return Dataset(self.features, None, self.severity, self.feature_names)

    def with_features(self, features, feature_names=None) -> "Dataset":
        """Same rows, replaced feature matrix (used by column transforms)."""
        return Dataset(features, self.labels, self.severity, feature_names)


@dataclass(frozen=True)
class SplitSpec:
    n_labeled: int
    n_unlabeled: int
    n_validation: int
    n_test: int
    seed: int
    stratified: bool = True


@dataclass
class Splits:
    labeled: Dataset
    unlabeled: Dataset
    validation: Dataset
    test: Dataset
    # true labels of the unlabeled partition; diagnostics only, training
    # code never receives this
    unlabeled_true_labels: np.ndarray


def load_csv(path, has_severity: bool = False) -> Dataset:
    """Parse a dataset CSV; preserves row order.

    A `severity` column is picked up whenever the header names one;
    has_severity=True additionally requires it to be present.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if "label" not in header:
            raise DataFormatError(f"{path}: header has no 'label' column")
        label_col = header.index("label")
        sev_col = header.index("severity") if "severity" in header else None
        if has_severity and sev_col is None:
            raise DataFormatError(f"{path}: header has no 'severity' column")
        feat_cols = [i for i in range(len(header)) if i not in (label_col, sev_col)]
        names = [header[i] for i in feat_cols]

        feats, labels, sevs = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataFormatError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            raw = row[label_col].strip()
            if raw == "":
                labels.append(UNLABELED)
            else:
                try:
                    lab = int(raw)
                except ValueError:
                    raise DataFormatError(f"{path}:{lineno}: bad label {raw!r}") from None
                if not 0 <= lab < N_FAULT_CLASSES:
                    raise DataFormatError(
                        f"{path}:{lineno}: label {lab} outside 0..{N_FAULT_CLASSES - 1}"
                    )
                labels.append(lab)
            if sev_col is not None:
                raw = row[sev_col].strip()
                sevs.append(int(raw) if raw else 0)
            try:
                feats.append([float(row[i]) for i in feat_cols])
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: non-numeric feature value") from None

    if not feats:
        raise DataFormatError(f"{path}: no data rows")
    return Dataset(
        np.array(feats, dtype=np.float64),
        np.array(labels, dtype=np.int64),
        np.array(sevs, dtype=np.int64) if sev_col is not None else None,
        names,
    )


def save_csv(data: Dataset, path) -> None:
    """Write a Dataset back in the same CSV format (floats via repr)."""
    names = data.feature_names or [f"f{i:02d}" for i in range(data.n_features)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["label"] + (["severity"] if data.severity is not None else []) + names
        writer.writerow(header)
        for i in range(data.n_rows):
            lab = ""
            if data.labels is not None and data.labels[i] != UNLABELED:
                lab = str(int(data.labels[i]))
            row = [lab]
            if data.severity is not None:
                row.append(str(int(data.severity[i])) if data.severity[i] > 0 else "")
            row.extend(repr(float(v)) for v in data.features[i])
            writer.writerow(row)


def split(data: Dataset, spec: SplitSpec) -> Splits:
    """Draw disjoint labeled/unlabeled/validation/test partitions.

    The labeled partition is class-stratified by default: floor(n/k) rows
    per observed class, remainder going to the lowest class indices.  The
    unlabeled partition's labels are stripped (kept separately for
    diagnostics only).  Deterministic in spec.seed; partitions come back in
    source row order.
    """
    if data.labels is None or (data.labels < 0).any():
        raise InputError("split() needs a fully labeled source dataset")
    total = spec.n_labeled + spec.n_unlabeled + spec.n_validation + spec.n_test
    if total > data.n_rows:
        raise InputError(
            f"split needs {total} rows but the source has {data.n_rows}"
        )

    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(data.n_rows)

    classes = np.unique(data.labels)
    quota = {}
    if spec.stratified:
        base, rem = divmod(spec.n_labeled, len(classes))
        for i, c in enumerate(classes):
            quota[int(c)] = base + (1 if i < rem else 0)
    labeled, unlabeled, validation, test = [], [], [], []
    n_lab = 0
    for row in perm:
        cls = int(data.labels[row])
        if spec.stratified and n_lab < spec.n_labeled and quota.get(cls, 0) > 0:
            labeled.append(row)
            quota[cls] -= 1
            n_lab += 1
        elif not spec.stratified and n_lab < spec.n_labeled:
            labeled.append(row)
            n_lab += 1
        elif len(unlabeled) < spec.n_unlabeled:
            unlabeled.append(row)
        elif len(validation) < spec.n_validation:
            validation.append(row)
        elif len(test) < spec.n_test:
            test.append(row)
    if n_lab < spec.n_labeled:
        missing = {c: q for c, q in quota.items() if q > 0}
        raise InputError(
            f"labeled quota unmet; shortfall per class: {missing}"
        )
    if len(test) < spec.n_test:
        raise InputError(
            f"test partition short by {spec.n_test - len(test)} rows"
        )

    parts = [np.sort(np.array(p, dtype=np.int64)) for p in (labeled, unlabeled, validation, test)]
    unlabeled_ds = data.take(parts[1])
    true_labels = unlabeled_ds.labels.copy() if unlabeled_ds.labels is not None else np.array([], dtype=np.int64)
    return Splits(
        labeled=data.take(parts[0]),
        unlabeled=unlabeled_ds.without_labels(),
        validation=data.take(parts[2]),
        test=data.take(parts[3]),
        unlabeled_true_labels=true_labels,
    )


def gen_two_rings(n_per_ring: int, noise_sigma: float, seed: int) -> Dataset:
    """Two concentric rings in the plane: class 0 at radius 1, class 1 at 2."""
    if n_per_ring < 1:
        raise InputError("n_per_ring must be >= 1")
    rng = np.random.default_rng(seed)
    rows = []
    labels = []
    for cls, radius in ((0, 1.0), (1, 2.0)):
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n_per_ring)
        r = radius + rng.normal(0.0, noise_sigma, size=n_per_ring) if noise_sigma > 0 else np.full(n_per_ring, radius)
        rows.append(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
        labels.append(np.full(n_per_ring, cls, dtype=np.int64))
    return Dataset(
        np.vstack(rows), np.concatenate(labels), None, ["x0", "x1"]
    )


# Cluster geometry of the synthetic chiller generator.  The condition basis
# and fault directions are frozen constants (drawn once from the fixed seed
# below), so two runs differ only through the caller's seed.
_CHILLER_FEATURES = 61
_CHILLER_CONDITION_SEED = 8161043
_N_SEVERITIES = 4


def _chiller_geometry(cond_scale: float, fault_scale: float):
    rng = np.random.default_rng(_CHILLER_CONDITION_SEED)
    # 27 operating conditions: three control variables, three levels each,
    # acting through a fixed 3-D subspace of feature space
    basis, _ = np.linalg.qr(rng.normal(size=(_CHILLER_FEATURES, 3)))
    levels = np.array([-1.0, 0.0, 1.0])
    grid = np.array([[a, b, c] for a in levels for b in levels for c in levels])
    centers = grid @ (cond_scale * basis.T)  # (27, 61)
    # per-fault displacement directions, orthogonal to the condition subspace
    dirs = rng.normal(size=(N_FAULT_CLASSES - 1, _CHILLER_FEATURES))
    dirs -= (dirs @ basis) @ basis.T
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return centers, fault_scale * dirs


def gen_synthetic_chiller(
    n_per_class_severity: int,
    seed: int,
    noise_sigma: float = 0.22,
    cond_scale: float = 4.0,
    fault_scale: float = 4.0,
) -> Dataset:
    """Stand-in for real chiller data: 61 features, 8 classes, 4 severities.

    Rows cluster around 27 operating-condition centers; each fault class
    shifts its rows along a class-specific direction scaled by severity/4.
    The normal class (severity absent) gets 4*n rows so classes balance.
    fault_scale is the difficulty knob: huge values make classes trivially
    separable, small ones bury them in noise.
    """
    if n_per_class_severity < 1:
        raise InputError("n_per_class_severity must be >= 1")
    centers, dirs = _chiller_geometry(cond_scale, fault_scale)
    rng = np.random.default_rng(seed)

    blocks, labels, sevs = [], [], []
    for cls in range(N_FAULT_CLASSES):
        severities = [0] if cls == 0 else range(1, _N_SEVERITIES + 1)
        n_block = n_per_class_severity * (_N_SEVERITIES if cls == 0 else 1)
        for sev in severities:
            cond = rng.integers(0, len(centers), size=n_block)
            x = centers[cond] + rng.normal(0.0, noise_sigma, size=(n_block, _CHILLER_FEATURES))
            if cls > 0:
                x += (sev / _N_SEVERITIES) * dirs[cls - 1]
            blocks.append(x)
            labels.append(np.full(n_block, cls, dtype=np.int64))
            sevs.append(np.full(n_block, sev, dtype=np.int64))

    names = [f"f{i:02d}" for i in range(_CHILLER_FEATURES)]
    return Dataset(np.vstack(blocks), np.concatenate(labels), np.concatenate(sevs), names)
