"""Command-line entry point.

Subcommands:
    train    one training run from a key=value config; writes metrics.csv
             and model.ckpt into the output directory
    sweep    full smoothing-level sweep from a config; writes results.csv,
             curves.csv and per-run metrics
    eval     score a checkpoint on a dataset file; prints accuracy
    project  2-D PCA projection of a checkpoint's penultimate features over
             a dataset; writes an x,y,label CSV

The SMOOTHLAB_OUT environment variable overrides the configured output
directory for train and sweep.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .checkpoint import load_checkpoint, save_checkpoint
from .errors import SmoothlabError
from .labels import SmoothingLevel, SmoothingSpec
from .pca import pca_project
from .sweep import (
    SweepConfig,
    parse_kv_file,
    run_sweep,
    sweep_config_from_keys,
)
from .textpipe import load_dataset
from .trainer import TrainConfig, evaluate, train_run, write_metrics_csv

ENV_OUT_DIR = "SMOOTHLAB_OUT"


def _resolved_out_dir(configured: str) -> Path:
    return Path(os.environ.get(ENV_OUT_DIR) or configured)


def _single(values, what: str):
    if len(values) != 1:
        raise SmoothlabError(f"train expects exactly one {what}, got {list(values)}")
    return values[0]


def _cmd_train(args) -> int:
    kv = parse_kv_file(args.config)
    cfg = sweep_config_from_keys(kv)
    arch = _single(cfg.archs, "model.arch")
    level = _single(cfg.levels, "smooth.levels entry")
    seed = _single(cfg.seeds, "seed")
    dataset_path = _single(cfg.dataset_paths, "dataset.path")

    dataset = load_dataset(
        dataset_path, cfg.fmt, cfg.text_field, cfg.label_field,
        max_len=cfg.max_len, vocab_min_freq=cfg.vocab_min_freq,
        vocab_max_size=cfg.vocab_max_size,
    )
    if "smooth.lambda" in kv:
        spec = SmoothingSpec(level, dataset.k, float(kv["smooth.lambda"]))
    else:
        spec = SmoothingSpec(level, dataset.k)
    train_cfg = TrainConfig(
        arch=arch,
        smoothing=spec,
        learning_rate=cfg.lr.get(arch),
        batch_size=cfg.batch_size,
        epochs=cfg.epochs,
        seed=seed,
        val_fraction=cfg.val_fraction,
        split_seed=cfg.split_seed,
        model=cfg.model,
    )
    result = train_run(dataset, train_cfg)

    out_dir = _resolved_out_dir(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(result.metrics, train_cfg.algorithm, out_dir / "metrics.csv")
    save_checkpoint(
        result.model, dataset.vocab, dataset.label_names, dataset.max_len,
        out_dir / "model.ckpt",
    )
    print(
        f"{arch} {train_cfg.algorithm} seed={seed}: "
        f"best val accuracy {result.best_val_accuracy:.4f} at epoch {result.best_epoch}"
    )
    print(f"wrote {out_dir / 'metrics.csv'} and {out_dir / 'model.ckpt'}")
    return 0


def _cmd_sweep(args) -> int:
    kv = parse_kv_file(args.config)
    cfg = sweep_config_from_keys(kv)
    out_dir = _resolved_out_dir(cfg.out_dir)
    cfg = SweepConfig(
        **{**cfg.__dict__, "out_dir": str(out_dir)}
    )
    table = run_sweep(cfg)
    ok = sum(1 for r in table.rows if r.status == "ok")
    print(f"sweep complete: {ok}/{len(table.rows)} runs ok; table at {out_dir / 'results.csv'}")
    for row in table.rows:
        if row.status != "ok":
            print(f"  failed: {row.dataset}/{row.architecture}/{row.algorithm}: {row.reason}")
    return 0


def _load_for_checkpoint(args):
    model, vocab, label_names, max_len = load_checkpoint(args.checkpoint)
    dataset = load_dataset(
        args.data, args.format, args.text_field, args.label_field,
        max_len=max_len, vocab=vocab, label_names=label_names,
    )
    return model, dataset


def _cmd_eval(args) -> int:
    model, dataset = _load_for_checkpoint(args)
    acc = evaluate(model, dataset)
    print(f"accuracy {acc!r} on {len(dataset)} examples")
    return 0


def _cmd_project(args) -> int:
    model, dataset = _load_for_checkpoint(args)
    ids, labels, lengths = dataset.arrays()
    feats = model.features(ids, lengths)
    coords = pca_project(feats)
    lines = ["x,y,label"]
    for (x, y), label in zip(coords, labels):
        lines.append(f"{x!r},{y!r},{dataset.label_names[label]}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(coords)} projected points to {out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smoothlab",
        description="Label-smoothing experiments for text sentiment classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run one training configuration")
    p_train.add_argument("--config", required=True, help="key=value config file")
    p_train.set_defaults(func=_cmd_train)

    p_sweep = sub.add_parser("sweep", help="run a smoothing-level sweep")
    p_sweep.add_argument("--config", required=True, help="key=value config file")
    p_sweep.set_defaults(func=_cmd_sweep)

    for name, func, help_text in (
        ("eval", _cmd_eval, "score a checkpoint on a dataset"),
        ("project", _cmd_project, "export a 2-D feature projection"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--checkpoint", required=True)
        p.add_argument("--data", required=True, help="dataset file")
        p.add_argument("--format", default="csv", choices=["csv", "tsv", "jsonl"])
        p.add_argument("--text-field", default="text")
        p.add_argument("--label-field", default="label")
        if name == "project":
            p.add_argument("--out", required=True, help="destination CSV (x,y,label)")
        p.set_defaults(func=func)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage/diagnostics
        return int(exc.code or 0)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SmoothlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main(sys.argv[1:]))
