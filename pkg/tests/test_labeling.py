"""Waterfall labeling with scripted pipelines over all outcome patterns."""

import sqlite3

import pytest

from tiersql.execution import Executor
from tiersql.labeling import (
    LabelBudget,
    PreferencePair,
    derive_preference_pairs,
    export_training_set,
    label_distribution,
    load_training_set,
    waterfall_label,
)
from tiersql.model import (
    TIERS,
    LinkedSchema,
    NLQuery,
    Phase,
    Provenance,
    Tier,
    TokenUsage,
)
from tiersql.pipelines import GenerationResult, StepRecord


@pytest.fixture
def label_db(tmp_path):
    path = tmp_path / "label.sqlite"
    conn = sqlite3.connect(path)
    conn.executescript("CREATE TABLE t (a INTEGER); INSERT INTO t VALUES (1), (2);")
    conn.commit()
    conn.close()
    return path


GOLD = "SELECT a FROM t"
RIGHT = "SELECT a FROM t ORDER BY a"  # same result set
WRONG = "SELECT a + 1 FROM t"  # executes, different result set


class ScriptedPipelines:
    """Emits pass/fail SQL per tier and records the invocation order."""

    def __init__(self, pattern: tuple[bool, ...]):
        self.pattern = pattern
        self.invoked: list[Tier] = []

    def generate(self, tier, q, linked, schema, db_path) -> GenerationResult:
        self.invoked.append(tier)
        sql = RIGHT if self.pattern[int(tier)] else WRONG
        usage = TokenUsage(10 * (int(tier) + 1), int(tier) + 1, Phase.GENERATION)
        step = StepRecord(name=tier.wire_name, digest="0" * 64, usage=usage)
        return GenerationResult(sql=sql, usage=usage, steps=(step,))


class RaisingPipelines(ScriptedPipelines):
    """The basic tier explodes; the cascade must continue."""

    def generate(self, tier, q, linked, schema, db_path):
        if tier is Tier.BASIC:
            self.invoked.append(tier)
            raise RuntimeError("gateway down")
        return super().generate(tier, q, linked, schema, db_path)


def make_query(qid="q1"):
    return NLQuery(id=qid, question="values of a?", db_id="d", hint="", gold_sql=GOLD)


def make_linked():
    return LinkedSchema(entries=(("t", ("a",)),), provenance=Provenance.MODEL)


def run_waterfall(pattern, label_db, pipelines_cls=ScriptedPipelines):
    pipelines = pipelines_cls(pattern)
    example = waterfall_label(
        make_query(),
        make_linked(),
        pipelines,
        Executor(label_db),
        schema=None,
        db_path=label_db,
    )
    return example, pipelines


class TestWaterfall:
    def test_first_success_stops_cascade(self, label_db):
        example, pipelines = run_waterfall((True, False, False), label_db)
        assert example.label is Tier.BASIC
        assert example.solved is True
        assert pipelines.invoked == [Tier.BASIC]
        assert set(example.outcomes) == {Tier.BASIC}

    def test_fail_then_pass_labels_intermediate(self, label_db):
        example, pipelines = run_waterfall((False, True, False), label_db)
        assert example.label is Tier.INTERMEDIATE
        assert pipelines.invoked == [Tier.BASIC, Tier.INTERMEDIATE]
        assert example.outcomes[Tier.BASIC].correct is False
        assert example.outcomes[Tier.INTERMEDIATE].correct is True
        assert Tier.ADVANCED not in example.outcomes

    def test_all_fail_labels_advanced_unsolved(self, label_db):
        example, pipelines = run_waterfall((False, False, False), label_db)
        assert example.label is Tier.ADVANCED
        assert example.solved is False
        assert pipelines.invoked == list(TIERS)

    def test_monotone_attempt_order_over_reachable_patterns(self, label_db):
        # a tier is invoked iff all cheaper tiers failed
        for pattern in [(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)]:
            example, pipelines = run_waterfall(tuple(map(bool, pattern)), label_db)
            expected = []
            for tier in TIERS:
                expected.append(tier)
                if pattern[int(tier)]:
                    break
            assert pipelines.invoked == expected
            # label is the cheapest succeeding tier, else Advanced
            succeeded = [t for t in expected if pattern[int(t)]]
            assert example.label is (succeeded[0] if succeeded else Tier.ADVANCED)

    def test_pipeline_error_recorded_and_cascade_continues(self, label_db):
        example, pipelines = run_waterfall((False, True, False), label_db, RaisingPipelines)
        assert example.label is Tier.INTERMEDIATE
        assert example.outcomes[Tier.BASIC].error is not None
        assert example.outcomes[Tier.BASIC].correct is False

    def test_missing_gold_rejected(self, label_db):
        q = NLQuery(id="q", question="?", db_id="d", gold_sql=None)
        with pytest.raises(ValueError):
            waterfall_label(
                q, make_linked(), ScriptedPipelines((True,) * 3), Executor(label_db),
                schema=None, db_path=label_db,
            )


class TestPreferencePairs:
    def test_basic_label(self):
        assert derive_preference_pairs(Tier.BASIC) == (
            PreferencePair(Tier.BASIC, Tier.INTERMEDIATE),
            PreferencePair(Tier.BASIC, Tier.ADVANCED),
        )

    def test_intermediate_label(self):
        assert derive_preference_pairs(Tier.INTERMEDIATE) == (
            PreferencePair(Tier.INTERMEDIATE, Tier.BASIC),
            PreferencePair(Tier.INTERMEDIATE, Tier.ADVANCED),
        )

    def test_advanced_label(self):
        assert derive_preference_pairs(Tier.ADVANCED) == (
            PreferencePair(Tier.ADVANCED, Tier.BASIC),
            PreferencePair(Tier.ADVANCED, Tier.INTERMEDIATE),
        )

    def test_self_preference_rejected(self):
        with pytest.raises(ValueError):
            PreferencePair(Tier.BASIC, Tier.BASIC)


class TestExport:
    def _examples(self, label_db, patterns):
        out = []
        for i, pattern in enumerate(patterns):
            pipelines = ScriptedPipelines(pattern)
            q = NLQuery(id=f"q{i}", question=f"question {i}", db_id="d", gold_sql=GOLD)
            out.append(
                waterfall_label(q, make_linked(), pipelines, Executor(label_db),
                                schema=None, db_path=label_db)
            )
        return out

    def test_round_trip_losslessness(self, label_db, tmp_path):
        examples = self._examples(
            label_db, [(True, False, False), (False, True, False), (False, False, True)]
        )
        path = tmp_path / "train.jsonl"
        export_training_set(examples, path)
        loaded = load_training_set(path)
        assert loaded == examples

    def test_empty_export(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        export_training_set([], path)
        assert path.read_text() == ""
        assert load_training_set(path) == []

    def test_label_counts_preserved(self, label_db, tmp_path):
        patterns = [(True,) * 3] * 3 + [(False, True, False)] * 2 + [(False, False, True)]
        examples = self._examples(label_db, patterns)
        path = tmp_path / "train.jsonl"
        export_training_set(examples, path)
        dist = label_distribution(load_training_set(path))
        assert dist == {Tier.BASIC: 3, Tier.INTERMEDIATE: 2, Tier.ADVANCED: 1}

    def test_unsolved_examples_export_no_pairs_by_default(self, label_db, tmp_path):
        import json

        examples = self._examples(label_db, [(False, False, False)])
        path = tmp_path / "train.jsonl"
        export_training_set(examples, path)
        record = json.loads(path.read_text().splitlines()[0])
        assert record["solved"] is False
        assert record["preference_pairs"] == []
        export_training_set(examples, path, include_unsolved_pairs=True)
        record = json.loads(path.read_text().splitlines()[0])
        assert len(record["preference_pairs"]) == 2

    def test_deterministic_field_order(self, label_db, tmp_path):
        examples = self._examples(label_db, [(True, False, False)])
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        export_training_set(examples, a)
        export_training_set(examples, b)
        assert a.read_bytes() == b.read_bytes()
        first_keys = list(__import__("json").loads(a.read_text().splitlines()[0]))
        assert first_keys == [
            "query_id", "label", "solved", "features", "question", "hint",
            "linked_schema", "preference_pairs", "outcomes",
        ]


class TestBudget:
    def test_budget_requires_positive_queries(self):
        with pytest.raises(ValueError):
            LabelBudget(max_queries=0)

    def test_budget_fields(self):
        budget = LabelBudget(max_queries=5, max_weighted_tokens=1000.0, mu=4.0)
        assert budget.max_queries == 5
        assert budget.max_weighted_tokens == 1000.0
