"""Smoothing-level sweeps: the cross product of datasets, architectures,
levels and seeds, with per-run metrics CSVs, an aggregate results table,
and long-form accuracy curves.

Config files are flat ``key=value`` text (see README for the key list).
All emitted files are deterministic for a fixed config: runs execute in a
fixed order (parallel workers only compute; the parent writes all files),
floats are serialized with ``repr``, and wall times are written as zero
unless ``out.record_seconds=true``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

from .errors import ConfigurationError, DivergenceError
from .labels import SmoothingLevel, SmoothingSpec, level_to_lambda
from .models import ARCH_TEXTCNN, ARCH_TRANSFORMER
from .textpipe import DEFAULT_MAX_LEN, DEFAULT_VOCAB_SIZE, Dataset, load_dataset
from .trainer import (
    MetricsRecord,
    ModelSettings,
    TrainConfig,
    train_run,
    write_metrics_csv,
)

RESULTS_HEADER = "dataset,architecture,algorithm,seed,best_val_accuracy,epoch_of_best,is_best,status,reason"
CURVES_HEADER = "dataset,architecture,algorithm,epoch,val_accuracy"


def parse_kv_file(path: str | Path) -> dict[str, str]:
    """Parse a flat key=value config file; '#' starts a comment line."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    out: dict[str, str] = {}
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}: line {line_no}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _csv_list(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _parse_bool(value: str, key: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ConfigurationError(f"{key} must be a boolean, got {value!r}")


@dataclass(frozen=True)
class SweepConfig:
    dataset_paths: tuple[str, ...]
    fmt: str = "csv"
    text_field: str = "text"
    label_field: str = "label"
    archs: tuple[str, ...] = (ARCH_TEXTCNN, ARCH_TRANSFORMER)
    levels: tuple[SmoothingLevel, ...] = tuple(SmoothingLevel)
    seeds: tuple[int, ...] = (0,)
    epochs: int = 20
    batch_size: int = 32
    lr: dict = field(default_factory=dict)  # per-arch learning rate overrides
    max_len: int = DEFAULT_MAX_LEN
    vocab_max_size: int = DEFAULT_VOCAB_SIZE
    vocab_min_freq: int = 1
    val_fraction: float = 0.2
    split_seed: int | None = None
    model: ModelSettings = field(default_factory=ModelSettings)
    out_dir: str = "sweep_out"
    record_seconds: bool = False
    workers: int = 1

    def __post_init__(self):
        if not self.dataset_paths or not self.archs or not self.levels or not self.seeds:
            raise ConfigurationError("dataset, architecture, level and seed lists must be non-empty")
        for arch in self.archs:
            if arch not in (ARCH_TEXTCNN, ARCH_TRANSFORMER):
                raise ConfigurationError(f"unknown architecture {arch!r}")
        if self.workers < 1:
            raise ConfigurationError(f"run.workers must be >= 1, got {self.workers}")


def sweep_config_from_keys(kv: dict[str, str]) -> SweepConfig:
    """Build a SweepConfig from parsed key=value pairs, applying defaults."""
    known_model = ModelSettings()
    model = ModelSettings(
        embed_dim=int(kv["model.embed_dim"]) if "model.embed_dim" in kv else None,
        window_sizes=tuple(int(w) for w in _csv_list(kv.get("model.textcnn.windows", "3,4,5"))),
        filters_per_window=int(kv.get("model.textcnn.filters", known_model.filters_per_window)),
        num_heads=int(kv.get("model.tf.heads", known_model.num_heads)),
        num_layers=int(kv.get("model.tf.layers", known_model.num_layers)),
        ffn_dim=int(kv.get("model.tf.ffn", known_model.ffn_dim)),
        use_residual_norm=_parse_bool(kv.get("model.tf.residual_norm", "true"), "model.tf.residual_norm"),
    )
    lr: dict[str, float] = {}
    if "train.lr" in kv:
        lr[ARCH_TEXTCNN] = lr[ARCH_TRANSFORMER] = float(kv["train.lr"])
    for arch in (ARCH_TEXTCNN, ARCH_TRANSFORMER):
        key = f"train.lr.{arch}"
        if key in kv:
            lr[arch] = float(kv[key])
    if "dataset.path" not in kv:
        raise ConfigurationError("config must set dataset.path")
    return SweepConfig(
        dataset_paths=tuple(_csv_list(kv["dataset.path"])),
        fmt=kv.get("dataset.format", "csv"),
        text_field=kv.get("dataset.text_field", "text"),
        label_field=kv.get("dataset.label_field", "label"),
        archs=tuple(_csv_list(kv.get("model.arch", "textcnn,transformer"))),
        levels=tuple(SmoothingLevel.parse(s) for s in _csv_list(
            kv.get("smooth.levels", "Baseline,LS1,LS2,LS3,LS4,LS5"))),
        seeds=tuple(int(s) for s in _csv_list(kv.get("seed.list", kv.get("train.seed", "0")))),
        epochs=int(kv.get("train.epochs", 20)),
        batch_size=int(kv.get("train.batch_size", 32)),
        lr=lr,
        max_len=int(kv.get("data.max_len", DEFAULT_MAX_LEN)),
        vocab_max_size=int(kv.get("data.vocab_max_size", DEFAULT_VOCAB_SIZE)),
        vocab_min_freq=int(kv.get("data.vocab_min_freq", 1)),
        val_fraction=float(kv.get("data.val_fraction", 0.2)),
        split_seed=int(kv["data.split_seed"]) if "data.split_seed" in kv else None,
        model=model,
        out_dir=kv.get("out.dir", "sweep_out"),
        record_seconds=_parse_bool(kv.get("out.record_seconds", "false"), "out.record_seconds"),
        workers=int(kv.get("run.workers", 1)),
    )


@dataclass(frozen=True)
class SweepCell:
    dataset_path: str
    dataset_name: str
    arch: str
    level: SmoothingLevel
    seed: int


@dataclass(frozen=True)
class ResultRow:
    dataset: str
    architecture: str
    algorithm: str
    seed: int
    best_val_accuracy: float | None
    epoch_of_best: int | None
    is_best: bool = False
    status: str = "ok"
    reason: str = ""


@dataclass
class ResultTable:
    rows: list[ResultRow]

    def to_csv_lines(self) -> list[str]:
        lines = [RESULTS_HEADER]
        for r in self.rows:
            acc = "" if r.best_val_accuracy is None else repr(r.best_val_accuracy)
            epoch = "" if r.epoch_of_best is None else str(r.epoch_of_best)
            lines.append(
                f"{r.dataset},{r.architecture},{r.algorithm},{r.seed},"
                f"{acc},{epoch},{int(r.is_best)},{r.status},{r.reason}"
            )
        return lines


def plan_cells(cfg: SweepConfig) -> list[SweepCell]:
    """Deterministic cell order: dataset, then architecture, level, seed."""
    cells = []
    for path in cfg.dataset_paths:
        name = Path(path).stem
        for arch in cfg.archs:
            for level in cfg.levels:
                for seed in cfg.seeds:
                    cells.append(SweepCell(path, name, arch, level, seed))
    return cells


def build_cell_config(cfg: SweepConfig, cell: SweepCell, k: int) -> TrainConfig:
    lam = level_to_lambda(cell.level, k)
    return TrainConfig(
        arch=cell.arch,
        smoothing=SmoothingSpec(cell.level, k, lam),
        learning_rate=cfg.lr.get(cell.arch),
        batch_size=cfg.batch_size,
        epochs=cfg.epochs,
        seed=cell.seed,
        val_fraction=cfg.val_fraction,
        split_seed=cfg.split_seed,
        model=cfg.model,
    )


@lru_cache(maxsize=8)
def _load_cached(
    path: str, fmt: str, text_field: str, label_field: str,
    max_len: int, min_freq: int, max_size: int,
) -> Dataset:
    return load_dataset(
        path, fmt, text_field, label_field,
        max_len=max_len, vocab_min_freq=min_freq, vocab_max_size=max_size,
    )


def _dataset_for(cfg: SweepConfig, path: str) -> Dataset:
    return _load_cached(
        path, cfg.fmt, cfg.text_field, cfg.label_field,
        cfg.max_len, cfg.vocab_min_freq, cfg.vocab_max_size,
    )


def _run_cell(args) -> tuple[ResultRow, list[MetricsRecord]]:
    cfg, cell = args
    dataset = _dataset_for(cfg, cell.dataset_path)
    train_cfg = build_cell_config(cfg, cell, dataset.k)
    try:
        result = train_run(dataset, train_cfg)
    except DivergenceError as exc:
        row = ResultRow(
            cell.dataset_name, cell.arch, cell.level.value, cell.seed,
            None, None, status="failed", reason=str(exc).replace(",", ";"),
        )
        return row, []
    row = ResultRow(
        cell.dataset_name, cell.arch, cell.level.value, cell.seed,
        result.best_val_accuracy, result.best_epoch,
    )
    return row, result.metrics


def _flag_best(rows: list[ResultRow]) -> list[ResultRow]:
    """Mark, per (dataset, architecture), every row attaining the group max."""
    best: dict[tuple[str, str], float] = {}
    for r in rows:
        if r.status == "ok":
            key = (r.dataset, r.architecture)
            if key not in best or r.best_val_accuracy > best[key]:
                best[key] = r.best_val_accuracy
    flagged = []
    for r in rows:
        is_best = (
            r.status == "ok"
            and best.get((r.dataset, r.architecture)) == r.best_val_accuracy
        )
        flagged.append(ResultRow(
            r.dataset, r.architecture, r.algorithm, r.seed,
            r.best_val_accuracy, r.epoch_of_best, is_best, r.status, r.reason,
        ))
    return flagged


def emit_curves(
    run_records: list[tuple[str, str, str, list[MetricsRecord]]], path: str | Path
) -> None:
    """Long-form per-epoch validation accuracy for external plotting."""
    if not any(records for _, _, _, records in run_records):
        raise ConfigurationError("no metrics to emit")
    lines = [CURVES_HEADER]
    for dataset, arch, algorithm, records in run_records:
        for r in records:
            lines.append(f"{dataset},{arch},{algorithm},{r.epoch},{r.val_accuracy!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_sweep(cfg: SweepConfig) -> ResultTable:
    """Execute every cell, write per-run CSVs plus results.csv and curves.csv.

    Diverged runs become failed rows and the sweep continues. The parent
    process does all file writing, in cell order, so the output directory is
    reproducible byte-for-byte for a fixed config.
    """
    cells = plan_cells(cfg)
    # fail early on unresolvable (level, k) pairs before any training
    for path in cfg.dataset_paths:
        k = _dataset_for(cfg, path).k
        for level in cfg.levels:
            level_to_lambda(level, k)

    jobs = [(cfg, cell) for cell in cells]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_run_cell, jobs))
    else:
        outcomes = [_run_cell(job) for job in jobs]

    out_dir = Path(cfg.out_dir)
    runs_dir = out_dir / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)

    rows: list[ResultRow] = []
    curve_data = []
    for cell, (row, records) in zip(cells, outcomes):
        rows.append(row)
        if records:
            run_name = f"{cell.dataset_name}__{cell.arch}__{cell.level.value}__seed{cell.seed}.csv"
            write_metrics_csv(
                records, cell.level.value, runs_dir / run_name,
                record_seconds=cfg.record_seconds,
            )
            curve_data.append((cell.dataset_name, cell.arch, cell.level.value, records))

    table = ResultTable(_flag_best(rows))
    (out_dir / "results.csv").write_text(
        "\n".join(table.to_csv_lines()) + "\n", encoding="utf-8"
    )
    if curve_data:
        emit_curves(curve_data, out_dir / "curves.csv")
    return table
