"""Waterfall training-data construction: attempt tiers cheapest-first, label
each query with the first tier that solves it, derive preference pairs.

Replays the shipped fixture cache, so the attempts are real pipeline runs
at zero cost. Run from the repository root:  python demos/05_waterfall_labeling.py
"""

from pathlib import Path

from tiersql.datasets import DatasetSpec, load_dataset
from tiersql.execution import Executor
from tiersql.gateway import Gateway, GatewayMode
from tiersql.labeling import export_training_set, label_distribution, waterfall_label
from tiersql.linking import link
from tiersql.pipelines import PipelineConfig, TieredPipelines

MINI = Path("tests/fixtures/mini")
OUT = Path("demos/output")
OUT.mkdir(parents=True, exist_ok=True)

spec = DatasetSpec.make("mini", MINI / "questions.json", MINI / "databases", "bird")
queries, registry = load_dataset(spec)
gw = Gateway(GatewayMode.REPLAY_STRICT, cache_dir=MINI / "cache")
pipelines = TieredPipelines(gw, PipelineConfig(model="fixture-model"))

examples = []
for q in queries:
    schema = registry.schema(q.db_id)
    db_path = registry.db_path(q.db_id)
    linked, _ = link(q, schema, gw, model="fixture-model")
    example = waterfall_label(q, linked, pipelines, Executor(db_path), schema, db_path)
    examples.append(example)
    attempted = " -> ".join(t.wire_name for t in example.outcomes)
    solved = "solved" if example.solved else "UNSOLVED"
    print(f"{q.id}: tried [{attempted:<33}] label={example.label.wire_name:<12} {solved}")

print("\nlabel distribution:")
for tier, count in label_distribution(examples).items():
    print(f"  {tier.wire_name:<12} {count}")

sample = next(e for e in examples if e.label.wire_name == "Intermediate")
print(f"\npreference pairs for {sample.query_id} (label {sample.label.wire_name}):")
for pair in sample.preference_pairs:
    print(f"  {pair.preferred.wire_name} is preferred over {pair.rejected.wire_name}")

out = OUT / "training.jsonl"
export_training_set(examples, out)
print(f"\nexported {len(examples)} training examples -> {out}")
print("unsolved queries keep their Advanced label but export no preference pairs")
