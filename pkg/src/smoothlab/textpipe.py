"""Text ingestion: tokenization, vocabulary, encoding, dataset files,
deterministic splits and batch iteration.

Conventions, all deterministic:
  * id 0 is PAD, id 1 is UNK; real tokens start at 2
  * vocabulary ranks by (frequency desc, token asc)
  * label names are sorted lexicographically and mapped to 0..k-1
  * sequences are right-padded/truncated to a fixed ``max_len``
"""

from __future__ import annotations

import csv
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DatasetParseError
from .numerics import Rng

PAD_ID = 0
UNK_ID = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"

DEFAULT_MAX_LEN = 64
DEFAULT_VOCAB_SIZE = 20000

# words (with internal apostrophes) or single non-word, non-space characters
_TOKEN_RE = re.compile(r"\w+(?:'\w+)*|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, and split punctuation into its own tokens."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Vocabulary:
    id_to_token: list[str]
    token_to_id: dict[str, int] = field(repr=False)

    @classmethod
    def from_tokens(cls, ranked_tokens: list[str]) -> "Vocabulary":
        id_to_token = [PAD_TOKEN, UNK_TOKEN, *ranked_tokens]
        return cls(id_to_token, {t: i for i, t in enumerate(id_to_token)})

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)


def build_vocab(
    corpus: list[list[str]], min_freq: int = 1, max_size: int = DEFAULT_VOCAB_SIZE
) -> Vocabulary:
    """Frequency-ranked vocabulary over tokenized texts.

    Tokens below ``min_freq`` are dropped; survivors are ordered by
    (frequency desc, token asc) and truncated so the total size including
    PAD/UNK never exceeds ``max_size``.
    """
    if max_size < 2:
        raise ConfigurationError(f"max_size must be >= 2 to fit PAD and UNK, got {max_size}")
    counts = Counter()
    for tokens in corpus:
        counts.update(tokens)
    admitted = [t for t, c in counts.items() if c >= min_freq]
    admitted.sort(key=lambda t: (-counts[t], t))
    return Vocabulary.from_tokens(admitted[: max_size - 2])


def encode(tokens: list[str], vocab: Vocabulary, max_len: int) -> np.ndarray:
    """Fixed-length id vector: unknowns to UNK, right-padded, tail-truncated."""
    if max_len < 1:
        raise ConfigurationError(f"max_len must be >= 1, got {max_len}")
    ids = np.full(max_len, PAD_ID, dtype=np.int64)
    for i, tok in enumerate(tokens[:max_len]):
        ids[i] = vocab.lookup(tok)
    return ids


@dataclass(frozen=True)
class Example:
    token_ids: np.ndarray
    label: int
    raw_length: int  # token count before truncation/padding


@dataclass
class Dataset:
    examples: list[Example]
    k: int
    label_names: list[str]
    vocab: Vocabulary
    max_len: int
    _ids: np.ndarray | None = field(default=None, repr=False)
    _labels: np.ndarray | None = field(default=None, repr=False)
    _lengths: np.ndarray | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.examples)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(ids, labels, lengths) matrices for the whole dataset, built once.

        ``lengths`` is clipped to ``max_len`` so it counts non-PAD positions.
        """
        if self._ids is None:
            self._ids = np.stack([ex.token_ids for ex in self.examples])
            self._labels = np.array([ex.label for ex in self.examples], dtype=np.int64)
            self._lengths = np.array(
                [min(ex.raw_length, self.max_len) for ex in self.examples], dtype=np.int64
            )
        return self._ids, self._labels, self._lengths

    def subset(self, indices) -> "Dataset":
        return Dataset(
            [self.examples[i] for i in indices],
            self.k,
            self.label_names,
            self.vocab,
            self.max_len,
        )


def _iter_records(path: Path, fmt: str, text_field: str, label_field: str):
    """Yield (row_number, text, label) for each data record; row numbers are 1-based."""
    if fmt in ("csv", "tsv"):
        delim = "," if fmt == "csv" else "\t"
        with path.open(encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f, delimiter=delim)
            if reader.fieldnames is None:
                raise DatasetParseError(f"{path}: empty file (header row required)")
            missing = {text_field, label_field} - set(reader.fieldnames)
            if missing:
                raise DatasetParseError(
                    f"{path}: header lacks required field(s) {sorted(missing)}"
                )
            for row_no, rec in enumerate(reader, start=1):
                text = rec.get(text_field)
                label = rec.get(label_field)
                if text is None or label is None or label == "":
                    raise DatasetParseError(
                        f"{path}: malformed row {row_no}: missing {text_field!r} or {label_field!r}"
                    )
                yield row_no, text, label
    elif fmt == "jsonl":
        with path.open(encoding="utf-8") as f:
            row_no = 0
            for line in f:
                if not line.strip():
                    continue
                row_no += 1
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DatasetParseError(f"{path}: malformed row {row_no}: {exc}") from exc
                if text_field not in rec or label_field not in rec:
                    raise DatasetParseError(
                        f"{path}: malformed row {row_no}: missing {text_field!r} or {label_field!r}"
                    )
                yield row_no, str(rec[text_field]), str(rec[label_field])
    else:
        raise ConfigurationError(f"unknown dataset format {fmt!r}; expected csv, tsv or jsonl")


def load_dataset(
    path: str | Path,
    fmt: str = "csv",
    text_field: str = "text",
    label_field: str = "label",
    *,
    max_len: int = DEFAULT_MAX_LEN,
    vocab_min_freq: int = 1,
    vocab_max_size: int = DEFAULT_VOCAB_SIZE,
    vocab: Vocabulary | None = None,
    label_names: list[str] | None = None,
) -> Dataset:
    """Parse a labelled text file into encoded examples, preserving row order.

    The vocabulary is built from the whole file unless one is supplied
    (evaluation against a training-time vocabulary). Label names are the
    sorted distinct label strings unless pinned by ``label_names``.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    rows = list(_iter_records(path, fmt, text_field, label_field))
    if not rows:
        raise DatasetParseError(f"{path}: no data rows")

    if label_names is None:
        label_names = sorted({label for _, _, label in rows})
    if len(label_names) < 2:
        raise ConfigurationError(
            f"{path}: need at least 2 distinct labels, found {label_names}"
        )
    label_index = {name: i for i, name in enumerate(label_names)}

    token_lists = [tokenize(text) for _, text, _ in rows]
    if vocab is None:
        vocab = build_vocab(token_lists, min_freq=vocab_min_freq, max_size=vocab_max_size)

    examples = []
    for (row_no, _, label), tokens in zip(rows, token_lists):
        if label not in label_index:
            raise DatasetParseError(
                f"{path}: row {row_no}: label {label!r} not in {label_names}"
            )
        examples.append(
            Example(encode(tokens, vocab, max_len), label_index[label], len(tokens))
        )
    return Dataset(examples, len(label_names), list(label_names), vocab, max_len)


def split_dataset(d: Dataset, val_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle then partition into (train, val); both parts non-empty."""
    if not 0.0 < val_fraction < 1.0:
        raise ConfigurationError(f"val_fraction must be in (0, 1), got {val_fraction}")
    n = len(d)
    n_val = int(n * val_fraction)
    if n_val == 0 or n_val == n:
        raise ConfigurationError(
            f"val_fraction {val_fraction} yields an empty split for {n} examples"
        )
    perm = Rng.derived(seed).permutation(n)
    return d.subset(perm[: n - n_val]), d.subset(perm[n - n_val :])


@dataclass(frozen=True)
class Batch:
    ids: np.ndarray      # (B, max_len) int64
    labels: np.ndarray   # (B,) int64
    lengths: np.ndarray  # (B,) int64, non-PAD counts


def iter_batches(
    d: Dataset, batch_size: int, shuffle: bool, seed: int, epoch: int = 0
):
    """Yield ``Batch`` views covering every example exactly once.

    With ``shuffle`` the order is a permutation keyed by (seed, epoch), so
    each epoch reshuffles but reruns reproduce the same order. The final
    batch may be short.
    """
    if batch_size < 1:
        raise ConfigurationError(f"batch_size must be >= 1, got {batch_size}")
    ids, labels, lengths = d.arrays()
    n = len(d)
    if shuffle:
        order = Rng.derived(seed, epoch).permutation(n)
    else:
        order = np.arange(n)
    for start in range(0, n, batch_size):
        sel = order[start : start + batch_size]
        yield Batch(ids[sel], labels[sel], lengths[sel])


def labels_of(d: Dataset) -> np.ndarray:
    return d.arrays()[1]
