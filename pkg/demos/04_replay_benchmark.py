"""The full benchmark, offline: three fixed-tier baselines plus oracle
routing over the shipped 20-query fixture, then the comparison report and
the cost/accuracy Pareto frontier.

Everything replays from the recorded gateway cache; no network, no keys.
Run from the repository root:  python demos/04_replay_benchmark.py
"""

from pathlib import Path

from tiersql.datasets import DatasetSpec, load_dataset
from tiersql.gateway import Gateway, GatewayMode
from tiersql.harness import RunConfig, run_benchmark
from tiersql.model import Tier
from tiersql.pipelines import PipelineConfig, TieredPipelines
from tiersql.reporting import (
    build_report,
    pareto_frontier,
    plot_frontier,
    render_table,
    report_points,
)
from tiersql.routing import FixedRouter, OracleRouter

import json

MINI = Path("tests/fixtures/mini")
OUT = Path("demos/output/replay_benchmark")
OUT.mkdir(parents=True, exist_ok=True)

spec = DatasetSpec.make("mini", MINI / "questions.json", MINI / "databases", "bird")
queries, registry = load_dataset(spec)
labels = {
    qid: Tier.from_wire(name)
    for qid, name in json.loads((MINI / "labels.json").read_text()).items()
}

gw = Gateway(GatewayMode.REPLAY_STRICT, cache_dir=MINI / "cache")
config = RunConfig(model="fixture-model", workers=4)
pipelines = TieredPipelines(gw, PipelineConfig(model="fixture-model"))

baselines = {}
for tier in Tier:
    traces, _ = run_benchmark(
        queries, registry, FixedRouter(tier), pipelines, gw,
        OUT / tier.wire_name, config, dataset_name="mini", oracle_labels=labels,
    )
    baselines[tier] = traces
    correct = sum(bool(t.correct) for t in traces)
    print(f"always-{tier.wire_name:<12} EX {correct / len(traces):.2f}")

routed, _ = run_benchmark(
    queries, registry, OracleRouter(labels), pipelines, gw,
    OUT / "routed", config, dataset_name="mini", oracle_labels=labels,
)
correct = sum(bool(t.correct) for t in routed)
print(f"oracle-routed        EX {correct / len(routed):.2f}\n")

report = build_report(routed, baselines, mu=4.0, method_name="oracle-routed")
print(render_table(report))

points = report_points(report)
frontier = pareto_frontier(points)
print("\npareto frontier (tokens ascending):",
      " -> ".join(f"{p.method} ({p.avg_tokens:.0f} tok, {p.ex * 100:.0f}%)" for p in frontier))

plot_frontier(points, OUT / "frontier.svg")
print(f"\nwrote traces and {OUT / 'frontier.svg'}")
