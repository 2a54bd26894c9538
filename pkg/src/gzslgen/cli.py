"""Command-line entry point.

Subcommands: train, evaluate, ablate, sweep, synth-data, export-viz.
Exit codes: 0 success, 2 validation/format problems, 3 runtime failures
(including training divergence).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import (
    RunConfig,
    effective_dict,
    load_checkpoint,
    load_run_config,
    save_checkpoint,
    write_effective_config,
    CHECKPOINT_NAME,
)
from .data import SyntheticSpec, make_synthetic_dataset, save_dataset
from .errors import (
    ContractViolation,
    DataLoadError,
    FormatError,
    TrainingDiverged,
    ValidationError,
)
from .evaluation import EvalReport, evaluate_gzsl, format_report_table, run_ablation, sweep_samples
from .matio import dumps_json, load_json, write_matrix
from .synthesis import SynthesisRequest, synthesize_features
from .trainer import VARIANTS, train, write_train_log


def _overrides(args) -> dict:
    return {
        "seed": getattr(args, "seed", None),
        "variant": getattr(args, "variant", None),
        "n_per_class": getattr(args, "n_per_class", None),
        "out": getattr(args, "out", None),
    }


def _write_report(out_dir: str, rows: list[tuple[str, EvalReport]]) -> None:
    doc = {"rows": [{"run": name, **report.to_dict()} for name, report in rows]}
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(dumps_json(doc))
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(format_report_table(rows))


def cmd_train(args) -> int:
    cfg = load_run_config(args.config, _overrides(args))
    bundle = cfg.resolve_bundle()
    os.makedirs(cfg.out, exist_ok=True)
    write_effective_config(cfg, os.path.join(cfg.out, "config_effective.json"))
    params, log = train(bundle, cfg.train)
    ckpt = os.path.join(cfg.out, CHECKPOINT_NAME)
    save_checkpoint(ckpt, params, cfg)
    log.checkpoint_path = ckpt
    write_train_log(log, os.path.join(cfg.out, "train_log.jsonl"), effective_dict(cfg))
    print(f"trained {cfg.train.variant} variant: checkpoint at {ckpt}")
    return 0


def _load_for_model(args) -> tuple:
    """Resolve (params, config) for checkpoint-based commands.

    An explicit --config replaces the checkpoint-embedded one; --seed and
    --n-per-class adjust the evaluation settings either way.
    """
    params, cfg = load_checkpoint(args.checkpoint)
    if getattr(args, "config", None):
        cfg = load_run_config(args.config, {"out": getattr(args, "out", None)})
    if getattr(args, "seed", None) is not None:
        cfg.eval.seed = int(args.seed)
    if getattr(args, "n_per_class", None) is not None:
        cfg.eval.n_per_class = int(args.n_per_class)
    if getattr(args, "out", None):
        cfg.out = args.out
    return params, cfg


def cmd_evaluate(args) -> int:
    params, cfg = _load_for_model(args)
    bundle = cfg.resolve_bundle()
    report = evaluate_gzsl(params, bundle, cfg.eval)
    os.makedirs(cfg.out, exist_ok=True)
    _write_report(cfg.out, [("gzsl", report)])
    print(format_report_table([("gzsl", report)]), end="")
    return 0


def cmd_ablate(args) -> int:
    cfg = load_run_config(args.config, _overrides(args))
    variants = args.variants.split(",") if args.variants else list(VARIANTS)
    for v in variants:
        if v not in VARIANTS:
            raise ValidationError(f"unknown variant {v!r}; pick from {VARIANTS}")
    bundle = cfg.resolve_bundle()
    os.makedirs(cfg.out, exist_ok=True)
    write_effective_config(cfg, os.path.join(cfg.out, "config_effective.json"))
    rows = run_ablation(bundle, cfg.train, variants, cfg.eval)
    _write_report(cfg.out, rows)
    print(format_report_table(rows), end="")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_run_config(args.config, _overrides(args))
    bundle = cfg.resolve_bundle()
    os.makedirs(cfg.out, exist_ok=True)
    write_effective_config(cfg, os.path.join(cfg.out, "config_effective.json"))
    curve = sweep_samples(bundle, cfg.train, cfg.counts, cfg.eval)
    doc = {"curve": [{"n_per_class": n, "H": h} for n, h in curve]}
    with open(os.path.join(cfg.out, "curve.json"), "w", encoding="utf-8") as fh:
        fh.write(dumps_json(doc))
    for n, h in curve:
        print(f"n_per_class={n:>6d}  H={h:.4f}")
    return 0


def cmd_synth_data(args) -> int:
    doc = load_json(args.spec)
    try:
        spec = SyntheticSpec(**doc)
    except TypeError as exc:
        raise ValidationError(f"bad synthetic spec: {exc}") from exc
    bundle = make_synthetic_dataset(spec)
    save_dataset(bundle, args.out)
    print(f"wrote synthetic dataset to {args.out}")
    return 0


def cmd_export_viz(args) -> int:
    params, cfg = _load_for_model(args)
    bundle = cfg.resolve_bundle()
    if args.classes:
        classes = [int(c) for c in args.classes.split(",")]
    else:
        classes = list(bundle.unseen_classes)[:3]
    n_per_class = args.n_per_class or cfg.eval.n_per_class

    real_rows, real_labels = [], []
    for c in classes:
        if c in bundle.unseen_classes:
            mask = bundle.labels_test_unseen == c
            rows = bundle.visual_test_unseen[mask]
        elif c in bundle.seen_classes:
            mask = bundle.labels_test_seen == c
            rows = bundle.visual_test_seen[mask]
        else:
            raise ValidationError(f"class {c} is not part of the dataset")
        real_rows.append(rows)
        real_labels.append(np.full(rows.shape[0], c, dtype=np.int64))

    request = SynthesisRequest(
        classes=tuple(classes), n_per_class=n_per_class, seed=cfg.eval.seed
    )
    synth_x, synth_y = synthesize_features(params, bundle, request)
    features = np.vstack(real_rows + [synth_x])
    labels = np.concatenate(real_labels + [synth_y])
    source = np.concatenate(
        [np.zeros(sum(r.shape[0] for r in real_rows), dtype=np.int64),
         np.ones(synth_x.shape[0], dtype=np.int64)]
    )

    os.makedirs(args.out, exist_ok=True)
    write_matrix(os.path.join(args.out, "viz_features.f32"), features, "f32")
    write_matrix(os.path.join(args.out, "viz_labels.i32"), labels, "i32")
    write_matrix(os.path.join(args.out, "viz_source.i32"), source, "i32")
    meta = {
        "format": "gzslgen-viz",
        "n_rows": int(features.shape[0]),
        "feature_dim": int(features.shape[1]),
        "classes": [int(c) for c in classes],
        "n_real": int(source.size - int(source.sum())),
        "n_synth": int(source.sum()),
        "source_flags": "viz_source.i32 holds one flag per row: 0 real, 1 synthesized",
    }
    with open(os.path.join(args.out, "meta.json"), "w", encoding="utf-8") as fh:
        fh.write(dumps_json(meta))
    print(f"wrote {features.shape[0]} labeled rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gzslgen",
        description="Adversarial feature synthesis and evaluation for generalized zero-shot recognition",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, help="run config JSON")
        else:
            p.add_argument("--config", help="run config JSON (overrides checkpoint config)")
        p.add_argument("--out", help="output directory override")
        p.add_argument("--seed", type=int, help="root seed override")

    p = sub.add_parser("train", help="train a model from a run config")
    common(p)
    p.add_argument("--variant", choices=VARIANTS, help="ablation variant override")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint (ts/tr/H report)")
    p.add_argument("--checkpoint", required=True)
    common(p, config_required=False)
    p.add_argument("--n-per-class", dest="n_per_class", type=int)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="train+evaluate every ablation variant")
    common(p)
    p.add_argument("--variants", help="comma-separated subset of variants")
    p.add_argument("--n-per-class", dest="n_per_class", type=int)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("sweep", help="H versus synthesized samples per class")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth-data", help="materialize a synthetic dataset directory")
    p.add_argument("--spec", required=True, help="SyntheticSpec JSON file")
    p.add_argument("--out", required=True, help="dataset directory to write")
    p.set_defaults(func=cmd_synth_data)

    p = sub.add_parser("export-viz", help="export labeled real+synthesized matrices for 2-D projection")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--classes", help="comma-separated class ids (default: first 3 unseen)")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--n-per-class", dest="n_per_class", type=int)
    p.set_defaults(func=cmd_export_viz)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, FormatError, DataLoadError, ContractViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
