"""Self-describing model checkpoints.

Byte layout (all integers little-endian, documented in
docs/checkpoint_format.md):

    offset 0   magic bytes  b"SLCP"
    offset 4   uint32       format version (currently 1)
    offset 8   uint64       JSON header length in bytes
    offset 16  header       UTF-8 JSON, sorted keys, no extra whitespace
    after      payload      tensor data, float64 little-endian, row-major,
                            concatenated in the header's tensor order

The header carries the architecture name, its config, the text pipeline
state (max_len, label names, vocabulary in id order) and one entry per
tensor with its name and shape. Writing is fully deterministic: the same
model state always produces identical bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import CheckpointFormatError
from .models import ARCH_TEXTCNN, Model, TextCnnConfig, TransformerConfig
from .textpipe import Vocabulary

MAGIC = b"SLCP"
FORMAT_VERSION = 1


def save_checkpoint(
    model: Model,
    vocab: Vocabulary,
    label_names: list[str],
    max_len: int,
    path: str | Path,
) -> None:
    names = sorted(model.params)
    header = {
        "arch": model.kind,
        "config": model.config.to_dict(),
        "pipeline": {
            "max_len": int(max_len),
            "label_names": list(label_names),
            "vocab": list(vocab.id_to_token),
        },
        "seed": int(model.seed),
        "tensors": [
            {"name": n, "shape": list(model.params[n].shape)} for n in names
        ],
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<Q", len(header_bytes)))
        f.write(header_bytes)
        for n in names:
            f.write(np.ascontiguousarray(model.params[n], dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> tuple[Model, Vocabulary, list[str], int]:
    """Rebuild (model, vocabulary, label_names, max_len) from a checkpoint file."""
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 16 or blob[:4] != MAGIC:
        raise CheckpointFormatError(f"{path}: not a checkpoint file (bad magic)")
    (version,) = struct.unpack("<I", blob[4:8])
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(
            f"{path}: unsupported checkpoint version {version} (expected {FORMAT_VERSION})"
        )
    (header_len,) = struct.unpack("<Q", blob[8:16])
    if 16 + header_len > len(blob):
        raise CheckpointFormatError(f"{path}: truncated header")
    try:
        header = json.loads(blob[16 : 16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointFormatError(f"{path}: corrupt header: {exc}") from exc

    arch = header["arch"]
    if arch == ARCH_TEXTCNN:
        config = TextCnnConfig.from_dict(header["config"])
    else:
        config = TransformerConfig.from_dict(header["config"])

    params: dict[str, np.ndarray] = {}
    offset = 16 + header_len
    for entry in header["tensors"]:
        shape = tuple(int(s) for s in entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(blob):
            raise CheckpointFormatError(f"{path}: truncated tensor payload at {entry['name']}")
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        params[entry["name"]] = arr.astype(np.float64).reshape(shape)
        offset += nbytes
    if offset != len(blob):
        raise CheckpointFormatError(f"{path}: {len(blob) - offset} trailing bytes")

    pipe = header["pipeline"]
    vocab_tokens = list(pipe["vocab"])
    vocab = Vocabulary(vocab_tokens, {t: i for i, t in enumerate(vocab_tokens)})
    model = Model(kind=arch, config=config, params=params, seed=int(header.get("seed", 0)))
    return model, vocab, list(pipe["label_names"]), int(pipe["max_len"])
