"""The full loop across both packages: train routing models on the labeler's
export, serve them over the scorer protocol, and run the benchmark with the
engine routing every query through live HTTP scoring.

Needs the trainer package installed (pip install -e trainer/).
Run from the repository root:  python demos/06_train_and_serve_router.py
"""

import json
from pathlib import Path

from tiertrainer.data import load_examples
from tiertrainer.server import serve_scorer
from tiertrainer.train import evaluate_router, train_binary, train_dpo, train_multiclass

from tiersql.datasets import DatasetSpec, load_dataset
from tiersql.gateway import Gateway, GatewayMode
from tiersql.harness import RunConfig, run_benchmark
from tiersql.model import Tier
from tiersql.pipelines import PipelineConfig, TieredPipelines
from tiersql.routing import CascadeRouter, ScoreRouter, ScorerClient

MINI = Path("tests/fixtures/mini")
OUT = Path("demos/output/served_router")
OUT.mkdir(parents=True, exist_ok=True)

# 1. Train on the waterfall labeler's JSONL export (the shipped fixture's).
examples = load_examples(MINI / "training.jsonl")
print(f"training on {len(examples)} labeled queries from the fixture")
dpo = train_dpo(examples, epochs=10, seed=42)
multiclass = train_multiclass(examples, epochs=10, seed=42)
stage_basic = train_binary(examples, "Basic", epochs=10, seed=42)
stage_mid = train_binary(examples, "Intermediate", epochs=10, seed=42)
accuracy, _, majority = evaluate_router(dpo, examples)
print(f"preference-trained router: training accuracy {accuracy:.2f} "
      f"(majority baseline {majority:.2f})")

# 2. Serve every checkpoint behind one /score endpoint.
service = serve_scorer([dpo, stage_basic, stage_mid])
print(f"scorer live at {service.url}/score")

# 3. Point the routing engine at the live scorer and run the benchmark.
spec = DatasetSpec.make("mini", MINI / "questions.json", MINI / "databases", "bird")
queries, registry = load_dataset(spec)
labels = {
    qid: Tier.from_wire(name)
    for qid, name in json.loads((MINI / "labels.json").read_text()).items()
}
gw = Gateway(GatewayMode.REPLAY_STRICT, cache_dir=MINI / "cache")
pipelines = TieredPipelines(gw, PipelineConfig(model="fixture-model"))
config = RunConfig(model="fixture-model")

client = ScorerClient(service.url)
try:
    for name, router in [
        ("preference scores", ScoreRouter(client, mode="preference")),
        ("binary cascade", CascadeRouter(client)),
    ]:
        traces, _ = run_benchmark(
            queries, registry, router, pipelines, gw, OUT / name.replace(" ", "_"),
            config, dataset_name="mini", oracle_labels=labels,
        )
        correct = sum(bool(t.correct) for t in traces)
        chosen = {tier.wire_name: 0 for tier in Tier}
        for t in traces:
            chosen[t.chosen_tier.wire_name] += 1
        print(f"{name}: EX {correct / len(traces):.2f}, routed {chosen}")
finally:
    service.shutdown()
    print("scorer shut down")
