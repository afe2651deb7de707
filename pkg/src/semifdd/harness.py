"""Experiment orchestration: labeled/unlabeled sweeps with the redraw and
re-init protocol, deterministic across reruns and worker counts.

Seed derivation rule (fixed, platform-stable): every run seed is
  blake2b(digest_size=8) over the UTF-8 string
  "fdd|<base_seed>|<part>|<part>|..."
interpreted as a little-endian unsigned integer.  Parts are decimal
integers or plain lowercase tokens, joined with "|".  The split for cell
(n_labeled, n_unlabeled) redraw r uses parts ("split", n_labeled,
n_unlabeled, r); the training run for method m, init i appends
("init", m, n_labeled, n_unlabeled, r, i).
"""

from __future__ import annotations

import hashlib
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from semifdd import baselines, semigan
from semifdd.data import Dataset, SplitSpec, Splits, split
from semifdd.errors import InputError
from semifdd.preprocess import fit_preprocessor
from semifdd.serialize import write_csv

log = logging.getLogger("semifdd.harness")

METHODS = ("semigan", "nn1", "nn2")

LABELED_SIZES = (40, 80, 160, 320, 800, 1600)
UNLABELED_SIZES = (800, 1600, 3200, 4800, 8000, 16000)

UNREACHED = -1

VALIDATION_SELECTION = "validation"
TEST_SELECTION = "test"


def derive_seed(base_seed: int, *parts) -> int:
    """Stable 64-bit seed from a base seed and a tuple of labels."""
    text = "|".join(["fdd", str(int(base_seed))] + [str(p) for p in parts])
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class ExperimentPlan:
    """Declarative description of a sweep; results are a pure function of it."""

    labeled_sizes: tuple = LABELED_SIZES
    unlabeled_sizes: tuple = UNLABELED_SIZES
    n_dataset_redraws: int = 10
    n_inits: int = 10
    methods: tuple = METHODS
    base_seed: int = 0
    n_validation: int = 2000
    n_test: int = 16000
    selection: str = VALIDATION_SELECTION
    gan: semigan.SemiGanConfig = field(default_factory=semigan.SemiGanConfig)
    baseline_epochs: int = 100
    # fit column drop + scaling on each redraw's training rows; off only
    # for sources that are already scaled
    preprocess: bool = True

    def __post_init__(self):
        if not self.labeled_sizes or any(s < 1 for s in self.labeled_sizes):
            raise InputError(f"labeled_sizes must be positive, got {self.labeled_sizes}")
        if not self.unlabeled_sizes or any(s < 1 for s in self.unlabeled_sizes):
            raise InputError(
                f"unlabeled_sizes must be positive, got {self.unlabeled_sizes}"
            )
        if self.n_dataset_redraws < 1 or self.n_inits < 1:
            raise InputError("n_dataset_redraws and n_inits must be >= 1")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise InputError(f"methods must be a nonempty subset of {METHODS}")
        if self.selection not in (VALIDATION_SELECTION, TEST_SELECTION):
            raise InputError(f"unknown selection mode {self.selection!r}")


@dataclass(frozen=True)
class RunRecord:
    """One trained model: a (method, cell, redraw, init) combination."""

    method: str
    n_labeled: int
    n_unlabeled: int
    redraw: int
    init: int
    redraw_seed: int
    init_seed: int
    val_accuracy: float
    test_accuracy: float

    FIELDS = (
        "method",
        "n_labeled",
        "n_unlabeled",
        "redraw",
        "init",
        "redraw_seed",
        "init_seed",
        "val_accuracy",
        "test_accuracy",
    )

    def sort_key(self):
        return (self.method, self.n_labeled, self.n_unlabeled, self.redraw, self.init)


@dataclass(frozen=True)
class CellSummary:
    """Aggregate of one (method, n_labeled, n_unlabeled) cell.

    mean/std cover the per-redraw selected results (best init per redraw,
    chosen by the plan's selection mode); mean_all_inits and best cover
    every run in the cell.
    """

    method: str
    n_labeled: int
    n_unlabeled: int
    n_redraws: int
    n_inits: int
    mean: float
    std: float
    mean_all_inits: float
    best: float

    FIELDS = (
        "method",
        "n_labeled",
        "n_unlabeled",
        "n_redraws",
        "n_inits",
        "mean",
        "std",
        "mean_all_inits",
        "best",
    )


@dataclass
class ExperimentReport:
    """All run records of a sweep plus cell-level aggregation."""

    plan: ExperimentPlan
    records: list

    def __post_init__(self):
        self.records = sorted(self.records, key=RunRecord.sort_key)

    def cell_records(self, method: str, n_labeled: int, n_unlabeled: int) -> list:
        return [
            r
            for r in self.records
            if r.method == method
            and r.n_labeled == n_labeled
            and r.n_unlabeled == n_unlabeled
        ]

    def summarize_cell(self, method, n_labeled, n_unlabeled) -> CellSummary | None:
        records = self.cell_records(method, n_labeled, n_unlabeled)
        if not records:
            return None
        selected = []
        by_redraw = sorted({r.redraw for r in records})
        for redraw in by_redraw:
            runs = [r for r in records if r.redraw == redraw]
            if self.plan.selection == TEST_SELECTION:
                chosen = max(runs, key=lambda r: (r.test_accuracy, -r.init))
            else:
                chosen = max(runs, key=lambda r: (r.val_accuracy, -r.init))
            selected.append(chosen.test_accuracy)
        selected = np.asarray(selected)
        all_test = np.asarray([r.test_accuracy for r in records])
        return CellSummary(
            method=method,
            n_labeled=n_labeled,
            n_unlabeled=n_unlabeled,
            n_redraws=len(by_redraw),
            n_inits=len(records) // len(by_redraw),
            mean=float(selected.mean()),
            std=float(selected.std()),
            mean_all_inits=float(all_test.mean()),
            best=float(all_test.max()),
        )

    def summaries(self) -> list:
        out = []
        for method in self.plan.methods:
            for n_l in self.plan.labeled_sizes:
                for n_u in self.plan.unlabeled_sizes:
                    cell = self.summarize_cell(method, n_l, n_u)
                    if cell is not None:
                        out.append(cell)
        return out

    def cell_mean(self, method, n_labeled, n_unlabeled) -> float | None:
        cell = self.summarize_cell(method, n_labeled, n_unlabeled)
        return None if cell is None else cell.mean


def config_for_features(template: semigan.SemiGanConfig, n_features: int, seed: int):
    """Adapt the layer widths of a config template to a feature count."""
    gen = tuple(template.gen_layers[:-1]) + (n_features,)
    disc = (n_features,) + tuple(template.disc_layers[1:])
    return replace(template, gen_layers=gen, disc_layers=disc, seed=seed)


def _train_one(plan: ExperimentPlan, method: str, splits: Splits, seed: int):
    """Train one model and return (val_accuracy, test_accuracy)."""
    if method == "semigan":
        config = config_for_features(plan.gan, splits.labeled.n_features, seed)
        model = semigan.train(config, splits.labeled, splits.unlabeled)
    else:
        hidden = baselines.NN1_HIDDEN if method == "nn1" else baselines.NN2_HIDDEN
        config = baselines.SupervisedConfig(
            hidden=hidden,
            n_classes=plan.gan.n_classes,
            epochs=plan.baseline_epochs,
            lr=plan.gan.lr,
            beta1=plan.gan.beta1,
            beta2=plan.gan.beta2,
            eps=plan.gan.eps,
            seed=seed,
        )
        model = baselines.train_supervised(config, splits.labeled)
    val = baselines.evaluate(model, splits.validation).accuracy
    test = baselines.evaluate(model, splits.test).accuracy
    return val, test


def _run_redraw(plan: ExperimentPlan, source: Dataset, n_l: int, n_u: int, redraw: int):
    """All runs sharing one split: every method and init of one redraw."""
    split_seed = derive_seed(plan.base_seed, "split", n_l, n_u, redraw)
    spec = SplitSpec(
        n_labeled=n_l,
        n_unlabeled=n_u,
        n_validation=plan.n_validation,
        n_test=plan.n_test,
        seed=split_seed,
    )
    try:
        splits = split(source, spec)
    except InputError as exc:
        log.warning(
            "skipping cell n_labeled=%d n_unlabeled=%d redraw=%d: %s",
            n_l,
            n_u,
            redraw,
            exc,
        )
        return []
    if plan.preprocess:
        # column stats come from this redraw's training rows only, never
        # from validation or test
        train_rows = Dataset(
            np.concatenate([splits.labeled.features, splits.unlabeled.features])
        )
        pre = fit_preprocessor(train_rows)
        splits = Splits(
            labeled=pre.transform(splits.labeled),
            unlabeled=pre.transform(splits.unlabeled),
            validation=pre.transform(splits.validation),
            test=pre.transform(splits.test),
            unlabeled_true_labels=splits.unlabeled_true_labels,
        )
    records = []
    for method in plan.methods:
        for init in range(plan.n_inits):
            init_seed = derive_seed(plan.base_seed, "init", method, n_l, n_u, redraw, init)
            val, test = _train_one(plan, method, splits, init_seed)
            records.append(
                RunRecord(
                    method=method,
                    n_labeled=n_l,
                    n_unlabeled=n_u,
                    redraw=redraw,
                    init=init,
                    redraw_seed=split_seed,
                    init_seed=init_seed,
                    val_accuracy=val,
                    test_accuracy=test,
                )
            )
    return records


def run_sweep(plan: ExperimentPlan, source: Dataset, workers: int | None = None):
    """Execute every (cell, redraw, method, init) run of the plan.

    Runs sharing a redraw share the identical split.  Worker count only
    changes scheduling: records are sorted canonically before aggregation,
    so the report is identical for any worker count.
    """
    if workers is None:
        workers = int(os.environ.get("FDD_WORKERS", "1"))
    tasks = [
        (n_l, n_u, redraw)
        for n_l in plan.labeled_sizes
        for n_u in plan.unlabeled_sizes
        for redraw in range(plan.n_dataset_redraws)
    ]
    records = []
    if workers <= 1:
        for n_l, n_u, redraw in tasks:
            records.extend(_run_redraw(plan, source, n_l, n_u, redraw))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_redraw, plan, source, n_l, n_u, redraw)
                for n_l, n_u, redraw in tasks
            ]
            for future in futures:
                records.extend(future.result())
    return ExperimentReport(plan=plan, records=records)


def minimal_labeled_size(accuracy_by_size, target_accuracy: float, sizes) -> int:
    """Smallest labeled size on the grid whose accuracy meets the target.

    `accuracy_by_size` maps a labeled size to a mean accuracy (None for an
    unavailable size).  Returns UNREACHED when no grid size qualifies.
    """
    if not 0.0 <= target_accuracy:
        raise InputError(f"target accuracy must be >= 0, got {target_accuracy}")
    for size in sorted(sizes):
        acc = accuracy_by_size(size)
        if acc is not None and acc >= target_accuracy:
            return int(size)
    return UNREACHED


def minimal_sizes_from_report(
    report: ExperimentReport, method: str, n_unlabeled: int, targets
) -> list:
    """Minimal labeled size per target, read from a finished sweep."""
    sizes = report.plan.labeled_sizes

    def accuracy(n_labeled):
        return report.cell_mean(method, n_labeled, n_unlabeled)

    return [minimal_labeled_size(accuracy, t, sizes) for t in targets]


DEFAULT_TARGETS = tuple(round(0.05 * k, 2) for k in range(10, 20))


def emit_report(report: ExperimentReport, out_dir: str) -> list:
    """Write records.csv, summary.csv, and the plot_*.csv files.

    Deterministic: reruns produce byte-identical files.  Returns the paths
    written.
    """
    if not report.records:
        raise InputError("emit_report requires a nonempty report")
    os.makedirs(out_dir, exist_ok=True)
    paths = []

    def emit(name, header, rows):
        path = os.path.join(out_dir, name)
        write_csv(path, header, rows)
        paths.append(path)

    emit(
        "records.csv",
        RunRecord.FIELDS,
        [[getattr(r, f) for f in RunRecord.FIELDS] for r in report.records],
    )

    summaries = report.summaries()
    emit(
        "summary.csv",
        CellSummary.FIELDS,
        [[getattr(c, f) for f in CellSummary.FIELDS] for c in summaries],
    )

    # Accuracy against unlabeled size: one series per (method, labeled size).
    series = [
        (method, n_l)
        for method in report.plan.methods
        for n_l in report.plan.labeled_sizes
    ]
    rows = []
    for n_u in report.plan.unlabeled_sizes:
        row = [n_u]
        for method, n_l in series:
            mean = report.cell_mean(method, n_l, n_u)
            row.append("" if mean is None else mean)
        rows.append(row)
    emit(
        "plot_accuracy_vs_unlabeled.csv",
        ["n_unlabeled"] + [f"{m}_L{n_l}" for m, n_l in series],
        rows,
    )

    # Minimal labeled size per target accuracy, at the largest unlabeled size.
    n_u_ref = max(report.plan.unlabeled_sizes)
    per_method = {
        m: minimal_sizes_from_report(report, m, n_u_ref, DEFAULT_TARGETS)
        for m in report.plan.methods
    }
    rows = []
    for i, target in enumerate(DEFAULT_TARGETS):
        rows.append([target] + [per_method[m][i] for m in report.plan.methods])
    emit(
        "plot_minimal_labeled_size.csv",
        ["target_accuracy"] + list(report.plan.methods),
        rows,
    )

    # Relative reduction in labeled size: semigan against each baseline.
    against = [m for m in report.plan.methods if m != "semigan"]
    if "semigan" in report.plan.methods and against:
        rows = []
        for i, target in enumerate(DEFAULT_TARGETS):
            row = [target]
            for m in against:
                ours, theirs = per_method["semigan"][i], per_method[m][i]
                if ours == UNREACHED or theirs == UNREACHED:
                    row.append("")
                else:
                    row.append((theirs - ours) / theirs)
            rows.append(row)
        emit(
            "plot_labeled_reduction.csv",
            ["target_accuracy"] + [f"vs_{m}" for m in against],
            rows,
        )
    return paths
