"""Training examples: the waterfall labeler's JSONL export, featurized.

The trainer is deliberately independent of the routing engine; the JSONL
file and the scorer HTTP protocol are the only shared surfaces, so tier
names live here as plain strings in cost order.
"""

from __future__ import annotations

import json
import re
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TIER_NAMES = ("Basic", "Intermediate", "Advanced")
TIER_INDEX = {name: i for i, name in enumerate(TIER_NAMES)}

_TOKEN = re.compile(r"[a-z0-9_]+")


@dataclass(frozen=True)
class PreferencePair:
    preferred: int  # tier indices
    rejected: int


@dataclass(frozen=True)
class TrainerExample:
    text: str
    n_tables: int
    n_columns: int
    label: int  # tier index
    preference_pairs: tuple[PreferencePair, ...] = ()
    solved: bool = True
    query_id: str = ""


def schema_summary(linked_schema: list[dict]) -> str:
    parts = [
        f"{entry['table']}({','.join(entry['columns'])})" for entry in linked_schema
    ]
    return "tables: " + "; ".join(parts)


def build_text(question: str, hint: str, linked_schema: list[dict]) -> str:
    pieces = [question]
    if hint:
        pieces.append(hint)
    pieces.append(schema_summary(linked_schema))
    return " ".join(pieces)


def example_from_record(record: dict) -> TrainerExample:
    pairs = tuple(
        PreferencePair(TIER_INDEX[p["preferred"]], TIER_INDEX[p["rejected"]])
        for p in record.get("preference_pairs", ())
    )
    features = record["features"]
    return TrainerExample(
        text=build_text(record["question"], record.get("hint", ""), record["linked_schema"]),
        n_tables=features["n_tables"],
        n_columns=features["n_columns"],
        label=TIER_INDEX[record["label"]],
        preference_pairs=pairs,
        solved=record.get("solved", True),
        query_id=record.get("query_id", ""),
    )


def load_examples(path: str | Path) -> list[TrainerExample]:
    examples = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                examples.append(example_from_record(json.loads(line)))
    return examples


def hash_tokens(text: str, buckets: int) -> np.ndarray:
    """Stable hashed bag-of-words counts (crc32, salt-free across runs)."""
    v = np.zeros(buckets, dtype=np.float64)
    for token in _TOKEN.findall(text.lower()):
        v[zlib.crc32(token.encode()) % buckets] += 1.0
    return v


def featurize(example: TrainerExample, buckets: int) -> np.ndarray:
    """Model input: hashed text counts plus the two structural counts."""
    return np.concatenate(
        [hash_tokens(example.text, buckets), [float(example.n_tables), float(example.n_columns)]]
    )


def feature_matrix(examples: list[TrainerExample], buckets: int) -> np.ndarray:
    return np.stack([featurize(e, buckets) for e in examples])


def labels_vector(examples: list[TrainerExample]) -> np.ndarray:
    return np.array([e.label for e in examples], dtype=np.int64)


def pair_index(examples: list[TrainerExample]) -> list[tuple[int, int, int]]:
    """Flattened (row, preferred, rejected) triples across all examples."""
    triples = []
    for row, example in enumerate(examples):
        for pair in example.preference_pairs:
            triples.append((row, pair.preferred, pair.rejected))
    return triples
