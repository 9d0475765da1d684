"""Deterministic synthetic review corpora for tests and demo sweeps.

Sentences are assembled from small phrase banks with a seeded generator, so
the same seed always produces the same file bytes. The binary corpus is
movie-review flavored with a clear lexical sentiment signal; the three-class
variant adds a neutral band.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .numerics import Rng

BINARY_LABELS = ("neg", "pos")
TRI_LABELS = ("negative", "neutral", "positive")

_SUBJECTS = [
    "the film", "this movie", "the plot", "the cast", "the script",
    "the pacing", "the soundtrack", "the ending", "the dialogue", "the acting",
    "the premise", "the second act", "the lead performance", "the camera work",
]
_VERBS = ["is", "feels", "seems", "remains", "stays", "turned out"]
_INTENSIFIERS = ["truly", "utterly", "quite", "rather", "remarkably", "thoroughly", ""]
_TAILS = [
    "from start to finish", "in every scene", "despite the hype",
    "all the way through", "by the final reel", "for two whole hours", "",
]
_POS_WORDS = [
    "wonderful", "superb", "charming", "gripping", "brilliant", "moving",
    "hilarious", "satisfying", "masterful", "delightful", "vivid", "tender",
]
_NEG_WORDS = [
    "dreadful", "tedious", "clumsy", "hollow", "bland", "grating",
    "sloppy", "lifeless", "dismal", "tiresome", "muddled", "stale",
]
_NEU_WORDS = [
    "average", "ordinary", "passable", "uneven", "serviceable", "routine",
    "familiar", "predictable", "workmanlike", "middling",
]
_PUNCT = [".", "!", "."]


def _sentence(gen, words: list[str]) -> str:
    pick = lambda xs: xs[int(gen.integers(0, len(xs)))]
    parts = [pick(_SUBJECTS), pick(_VERBS)]
    intensifier = pick(_INTENSIFIERS)
    if intensifier:
        parts.append(intensifier)
    parts.append(pick(words))
    tail = pick(_TAILS)
    if tail:
        parts.append(tail)
    text = " ".join(parts) + pick(_PUNCT)
    if gen.integers(0, 3) == 0:  # sometimes a second clause
        text += f" {pick(_SUBJECTS)} {pick(_VERBS)} {pick(words)}."
    return text


def generate_reviews(
    n: int, seed: int = 7, classes: int = 2
) -> list[tuple[str, str]]:
    """``n`` (text, label) pairs, classes cycling so counts stay balanced."""
    gen = Rng.derived(seed, classes)
    if classes == 2:
        banks = [(_NEG_WORDS, "neg"), (_POS_WORDS, "pos")]
    elif classes == 3:
        banks = [(_NEG_WORDS, "negative"), (_NEU_WORDS, "neutral"), (_POS_WORDS, "positive")]
    else:
        raise ValueError(f"classes must be 2 or 3, got {classes}")
    rows = []
    for i in range(n):
        words, label = banks[i % len(banks)]
        rows.append((_sentence(gen, words), label))
    return rows


def write_reviews_csv(rows: list[tuple[str, str]], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["text", "label"])
        writer.writerows(rows)


def write_reviews_jsonl(rows: list[tuple[str, str]], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        for text, label in rows:
            f.write(json.dumps({"text": text, "label": label}, sort_keys=True) + "\n")


def make_default_corpora(out_dir: str | Path) -> dict[str, Path]:
    """Write the two bundled corpora and return their paths."""
    out_dir = Path(out_dir)
    binary_path = out_dir / "toy_reviews.csv"
    tri_path = out_dir / "toy_reviews_tri.jsonl"
    write_reviews_csv(generate_reviews(2000, seed=7, classes=2), binary_path)
    write_reviews_jsonl(generate_reviews(600, seed=7, classes=3), tri_path)
    return {"binary": binary_path, "tri": tri_path}
