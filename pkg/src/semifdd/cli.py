"""Command-line interface.

Subcommands: gen (synthetic datasets), preprocess (outlier removal +
scaling), train (one model to a bundle file), classify (bundle + CSV to
labels), sweep (full experiment grid to CSV reports).
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace

import numpy as np

from semifdd import baselines, config, data, harness, preprocess, semigan, serialize
from semifdd.errors import FddError

TWO_RINGS = "two-rings"
SYNTHETIC_CHILLER = "synthetic-chiller"


def _cmd_gen(args) -> int:
    if args.kind == TWO_RINGS:
        ds = data.gen_two_rings(args.n, args.noise, args.seed)
    else:
        ds = data.gen_synthetic_chiller(args.n, args.seed)
    data.save_csv(ds, args.out)
    print(f"wrote {ds.n_rows} rows x {ds.n_features} features to {args.out}")
    return 0


def _cmd_preprocess(args) -> int:
    ds = data.load_csv(args.input)
    out, report, _ = preprocess.preprocess_pipeline(ds)
    data.save_csv(out, args.output)
    print(report.summary())
    print(f"wrote {out.n_rows} rows x {out.n_features} features to {args.output}")
    return 0


def _split_by_label(ds: data.Dataset):
    if ds.labels is None:
        raise FddError("training data has no label column")
    labeled_mask = ds.labels != data.UNLABELED
    labeled = ds.take(np.flatnonzero(labeled_mask))
    unlabeled = ds.take(np.flatnonzero(~labeled_mask)).without_labels()
    if labeled.n_rows == 0:
        raise FddError("training data has no labeled rows")
    return labeled, unlabeled


def _cmd_train(args) -> int:
    job = config.load_train_job(args.config)
    ds = data.load_csv(job.data, has_severity=job.has_severity)

    if job.preprocess:
        report = preprocess.PreprocessReport()
        cleaned = preprocess.clean_source(ds, report)
        pre = preprocess.fit_preprocessor(cleaned, report)
        ds = pre.transform(cleaned)
        print(report.summary())
    else:
        stats = preprocess.fit_standardizer(ds)
        # identity transform bundle: no dropped columns, stored stats only
        pre = preprocess.Preprocessor(
            dropped_columns=np.array([], dtype=np.int64),
            stats=preprocess.FeatureStats(
                mean=stats.mean,
                std=stats.std,
                min=np.full(ds.n_features, -1.0),
                max=np.full(ds.n_features, 1.0),
                rate_mean=stats.rate_mean,
                rate_std=stats.rate_std,
            ),
            n_features_in=ds.n_features,
        )

    labeled, unlabeled = _split_by_label(ds)

    if job.method == "semigan":
        gan = job.gan
        if not job.explicit_layers:
            gan = harness.config_for_features(gan, ds.n_features, gan.seed)
        history = []
        model = semigan.train(gan, labeled, unlabeled, history=history)
        net = model.discriminator
        n_classes = gan.n_classes
        if job.history_out:
            serialize.write_history_csv(job.history_out, history)
    else:
        hidden = baselines.NN1_HIDDEN if job.method == "nn1" else baselines.NN2_HIDDEN
        sup = baselines.SupervisedConfig(
            hidden=hidden,
            n_classes=job.gan.n_classes,
            epochs=job.epochs,
            lr=job.gan.lr,
            beta1=job.gan.beta1,
            beta2=job.gan.beta2,
            eps=job.gan.eps,
            seed=job.gan.seed,
        )
        net = baselines.train_supervised(sup, labeled)
        n_classes = sup.n_classes

    bundle = serialize.ModelBundle(job.method, n_classes, pre, net)
    serialize.save_model(bundle, job.model_out)
    # labeled.features are already preprocessed here, so score the net
    # directly rather than through the bundle
    pred = np.argmax(net.forward(labeled.features), axis=1)
    train_acc = float((pred == labeled.labels).mean())
    print(
        f"trained {job.method} on {labeled.n_rows} labeled / "
        f"{unlabeled.n_rows} unlabeled rows; training accuracy {train_acc:.4f}; "
        f"model written to {job.model_out}"
    )
    return 0


def _cmd_classify(args) -> int:
    bundle = serialize.load_model(args.model)
    ds = data.load_csv(args.input)
    labels = bundle.predict(ds.features)
    if args.out:
        serialize.write_csv(args.out, ["label"], [[int(v)] for v in labels])
        print(f"wrote {labels.size} predictions to {args.out}")
    else:
        for v in labels:
            print(int(v))
    return 0


def _source_for_sweep(name: str, plan: harness.ExperimentPlan):
    need = (
        max(plan.labeled_sizes)
        + max(plan.unlabeled_sizes)
        + plan.n_validation
        + plan.n_test
    )
    seed = harness.derive_seed(plan.base_seed, "source", name)
    if name == TWO_RINGS:
        return data.gen_two_rings(math.ceil(need / 2) + 8, 0.1, seed)
    if name == SYNTHETIC_CHILLER:
        per = math.ceil(need / (8 * data.N_FAULT_CLASSES)) + 2
        return data.gen_synthetic_chiller(per, seed)
    ds = data.load_csv(name)
    if plan.preprocess:
        ds = preprocess.clean_source(ds)
    return ds


def _cmd_sweep(args) -> int:
    plan = config.load_plan(args.plan)
    if args.paper_selection:
        print(
            "WARNING: selecting the best init by TEST accuracy; this leaks the "
            "test set into model selection and overstates accuracy. Useful only "
            "for reproducing published numbers; do not use for real decisions.",
            file=sys.stderr,
        )
        plan = replace(plan, selection=harness.TEST_SELECTION)
    source = _source_for_sweep(args.data, plan)
    report = harness.run_sweep(plan, source, workers=args.workers)
    if not report.records:
        print("sweep produced no records (every cell infeasible)", file=sys.stderr)
        return 1
    paths = harness.emit_report(report, args.out)
    for cell in report.summaries():
        print(
            f"{cell.method} L={cell.n_labeled} U={cell.n_unlabeled}: "
            f"mean {cell.mean:.4f} std {cell.std:.4f} (best {cell.best:.4f})"
        )
    print("wrote " + ", ".join(paths))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdd",
        description="Semi-supervised fault diagnosis: train, classify, sweep.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset CSV")
    p.add_argument("kind", choices=[TWO_RINGS, SYNTHETIC_CHILLER])
    p.add_argument("--out", required=True)
    p.add_argument(
        "--n",
        type=int,
        default=1000,
        help="rows per ring, or rows per fault class and severity",
    )
    p.add_argument("--noise", type=float, default=0.1, help="two-rings radial noise")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("preprocess", help="outlier removal and scaling to [-1, 1]")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(fn=_cmd_preprocess)

    p = sub.add_parser("train", help="train one model from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("classify", help="predict labels for a feature CSV")
    p.add_argument("--model", required=True)
    p.add_argument("input")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_classify)

    p = sub.add_parser("sweep", help="run an experiment grid from a plan file")
    p.add_argument("--plan", required=True)
    p.add_argument(
        "--data",
        required=True,
        help=f"CSV path, '{TWO_RINGS}', or '{SYNTHETIC_CHILLER}'",
    )
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument(
        "--paper-selection",
        action="store_true",
        help="select best init by test accuracy instead of validation",
    )
    p.set_defaults(fn=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FddError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
