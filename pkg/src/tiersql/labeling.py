"""Waterfall construction of router training data.

Each gold-labeled query is attempted tier by tier, cheapest first; the first
tier whose SQL execution-matches the gold becomes the label. Queries no tier
solves keep the most capable tier as their label with solved=False.
Preference pairs put the labeled tier above each other tier.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol

from .execution import Executor, GoldExecutionError
from .model import (
    TIERS,
    DatabaseSchema,
    LinkedSchema,
    NLQuery,
    Tier,
)
from .pipelines import GenerationResult
from .routing import FeatureVector, build_features


@dataclass(frozen=True)
class PreferencePair:
    preferred: Tier
    rejected: Tier

    def __post_init__(self) -> None:
        if self.preferred == self.rejected:
            raise ValueError("a tier cannot be preferred over itself")


@dataclass(frozen=True)
class TierOutcome:
    sql: str
    correct: bool
    prompt_tokens: int
    completion_tokens: int
    error: str | None = None


@dataclass(frozen=True)
class LabeledExample:
    query_id: str
    label: Tier
    solved: bool
    outcomes: Mapping[Tier, TierOutcome]
    features: FeatureVector
    question: str
    hint: str
    linked_schema: tuple[tuple[str, tuple[str, ...]], ...]

    @property
    def preference_pairs(self) -> tuple[PreferencePair, ...]:
        return derive_preference_pairs(self.label)


class PipelineRunner(Protocol):
    """One call per tier; what the waterfall drives."""

    def generate(
        self,
        tier: Tier,
        q: NLQuery,
        linked: LinkedSchema,
        schema: DatabaseSchema,
        db_path: str | Path,
    ) -> GenerationResult: ...


def waterfall_label(
    q: NLQuery,
    linked: LinkedSchema,
    pipelines: PipelineRunner,
    executor: Executor,
    schema: DatabaseSchema,
    db_path: str | Path,
) -> LabeledExample:
    """Attempt tiers cheapest-first; the first success stops the cascade.

    Pipeline failures (gateway errors, unusable SQL) are recorded as
    incorrect outcomes and the cascade continues; a failing gold query still
    raises since no label is meaningful then.
    """
    if not q.gold_sql:
        raise ValueError(f"query {q.id!r} has no gold SQL; waterfall labeling needs one")

    outcomes: dict[Tier, TierOutcome] = {}
    label = TIERS[-1]
    solved = False
    for tier in TIERS:
        try:
            result = pipelines.generate(tier, q, linked, schema, db_path)
            correct = executor.ex_match(result.sql, q.gold_sql)
            outcomes[tier] = TierOutcome(
                sql=result.sql,
                correct=correct,
                prompt_tokens=result.usage.prompt_tokens,
                completion_tokens=result.usage.completion_tokens,
            )
        except GoldExecutionError:
            raise
        except Exception as exc:
            outcomes[tier] = TierOutcome(
                sql="", correct=False, prompt_tokens=0, completion_tokens=0, error=str(exc)
            )
            continue
        if correct:
            label = tier
            solved = True
            break
    return LabeledExample(
        query_id=q.id,
        label=label,
        solved=solved,
        outcomes=outcomes,
        features=build_features(linked),
        question=q.question,
        hint=q.hint,
        linked_schema=linked.entries,
    )


def derive_preference_pairs(label: Tier) -> tuple[PreferencePair, ...]:
    """The labeled tier is preferred over each of the other two tiers."""
    return tuple(PreferencePair(label, other) for other in TIERS if other != label)


def label_distribution(examples: list[LabeledExample]) -> dict[Tier, int]:
    counts = {tier: 0 for tier in TIERS}
    for example in examples:
        counts[example.label] += 1
    return counts


@dataclass(frozen=True)
class LabelBudget:
    """Hard stops for the expensive step; both checked before each query."""

    max_queries: int
    max_weighted_tokens: float | None = None
    mu: float = 4.0

    def __post_init__(self) -> None:
        if self.max_queries < 1:
            raise ValueError("max_queries must be >= 1")


def _example_to_dict(example: LabeledExample, include_unsolved_pairs: bool) -> dict:
    pairs = example.preference_pairs if (example.solved or include_unsolved_pairs) else ()
    return {
        "query_id": example.query_id,
        "label": example.label.wire_name,
        "solved": example.solved,
        "features": {
            "n_tables": example.features.n_tables,
            "n_columns": example.features.n_columns,
        },
        "question": example.question,
        "hint": example.hint,
        "linked_schema": [
            {"table": t, "columns": list(cols)} for t, cols in example.linked_schema
        ],
        "preference_pairs": [
            {"preferred": p.preferred.wire_name, "rejected": p.rejected.wire_name}
            for p in pairs
        ],
        "outcomes": {
            tier.wire_name: {
                "sql": o.sql,
                "correct": o.correct,
                "prompt_tokens": o.prompt_tokens,
                "completion_tokens": o.completion_tokens,
                "error": o.error,
            }
            for tier, o in example.outcomes.items()
        },
    }


def _example_from_dict(data: dict) -> LabeledExample:
    return LabeledExample(
        query_id=data["query_id"],
        label=Tier.from_wire(data["label"]),
        solved=data["solved"],
        outcomes={
            Tier.from_wire(name): TierOutcome(
                sql=o["sql"],
                correct=o["correct"],
                prompt_tokens=o["prompt_tokens"],
                completion_tokens=o["completion_tokens"],
                error=o.get("error"),
            )
            for name, o in data.get("outcomes", {}).items()
        },
        features=FeatureVector(
            n_tables=data["features"]["n_tables"],
            n_columns=data["features"]["n_columns"],
        ),
        question=data["question"],
        hint=data["hint"],
        linked_schema=tuple(
            (entry["table"], tuple(entry["columns"])) for entry in data["linked_schema"]
        ),
    )


def export_training_set(
    examples: list[LabeledExample],
    path: str | Path,
    include_unsolved_pairs: bool = False,
) -> None:
    """Write one JSON object per line with a deterministic field order.

    Unsolved queries keep their classification label but export no
    preference pairs unless ``include_unsolved_pairs`` is set.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for example in examples:
            record = _example_to_dict(example, include_unsolved_pairs)
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_training_set(path: str | Path) -> list[LabeledExample]:
    examples = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                examples.append(_example_from_dict(json.loads(line)))
    return examples
