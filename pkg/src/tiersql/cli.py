"""Command-line front end: link, label, run, eval, report, cache."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import AppConfig, ConfigError, load_config
from .datasets import DatasetSpec, load_dataset
from .execution import Executor
from .gateway import GatewayMode, canonical_key, ChatRequest
from .harness import load_traces, run_benchmark
from .labeling import export_training_set, label_distribution, load_training_set, waterfall_label
from .linking import link
from .metrics import gold_columns_from_sql, linking_quality, weighted_tokens
from .model import Tier
from .pipelines import TieredPipelines
from .reporting import (
    build_report,
    pareto_frontier,
    plot_frontier,
    render_table,
    report_points,
    write_csv,
    write_json,
)
from .routing import (
    CascadeRouter,
    FixedRouter,
    KnnRouter,
    LabeledPoint,
    OracleRouter,
    Router,
    ScoreRouter,
    ScorerClient,
)


def _dataset_spec(args: argparse.Namespace) -> DatasetSpec:
    return DatasetSpec.make(
        name=args.dataset_name,
        questions_file=args.questions,
        databases_dir=args.databases,
        format=args.format,
    )


def _apply_overrides(config: AppConfig, args: argparse.Namespace) -> AppConfig:
    from dataclasses import replace

    if getattr(args, "mode", None):
        config = replace(config, gateway=replace(config.gateway, mode=GatewayMode(args.mode)))
    if getattr(args, "limit", None) is not None:
        config = replace(config, limit=args.limit)
    if getattr(args, "router", None):
        config = replace(config, router=replace(config.router, kind=args.router))
    if getattr(args, "tier", None):
        config = replace(
            config, router=replace(config.router, kind="fixed", tier=args.tier)
        )
    return config


def build_router(config: AppConfig) -> Router:
    kind = config.router.kind
    if kind == "fixed":
        if not config.router.tier:
            raise ConfigError("fixed router requires a tier")
        return FixedRouter(Tier.from_wire(config.router.tier))
    if kind == "oracle":
        if not config.router.labels_path:
            raise ConfigError("oracle router requires labels_path")
        return OracleRouter(load_oracle_labels(config.router.labels_path))
    if kind == "knn":
        if not config.router.train_path:
            raise ConfigError("knn router requires train_path")
        points = [
            LabeledPoint(e.features, e.label)
            for e in load_training_set(config.router.train_path)
        ]
        return KnnRouter(points, k=config.router.k)
    if kind in ("multiclass", "preference"):
        if not config.router.endpoint:
            raise ConfigError(f"{kind} router requires endpoint")
        client = ScorerClient(config.router.endpoint)
        return ScoreRouter(client, mode=kind, use_hint=config.router.use_hint)
    if kind == "cascade":
        if not config.router.endpoint:
            raise ConfigError("cascade router requires endpoint")
        return CascadeRouter(ScorerClient(config.router.endpoint), use_hint=config.router.use_hint)
    raise ConfigError(f"unknown router kind {kind!r}")


def load_oracle_labels(path: str | Path) -> dict[str, Tier]:
    """Accepts either a {query_id: tier} JSON object or a training JSONL."""
    path = Path(path)
    text = path.read_text(encoding="utf-8").strip()
    if text.startswith("{") and "\n{" not in text:
        data = json.loads(text)
        return {qid: Tier.from_wire(name) for qid, name in data.items()}
    return {e.query_id: e.label for e in load_training_set(path)}


def cmd_link(args: argparse.Namespace) -> int:
    config = _apply_overrides(load_config(args.config), args)
    queries, registry = load_dataset(_dataset_spec(args))
    if config.limit is not None:
        queries = queries[: config.limit]
    gw = config.gateway.build()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        for q in queries:
            schema = registry.schema(q.db_id)
            linked, usage = link(q, schema, gw, model=config.model)
            record = {
                "query_id": q.id,
                "provenance": linked.provenance.value,
                "entries": [{"table": t, "columns": list(c)} for t, c in linked.entries],
                "prompt_tokens": usage.prompt_tokens,
                "completion_tokens": usage.completion_tokens,
            }
            if q.gold_sql:
                gold_cols = gold_columns_from_sql(q.gold_sql, schema)
                if gold_cols:
                    recall, reduction = linking_quality(linked, gold_cols, schema)
                    record["recall"] = recall
                    record["column_reduction"] = reduction
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    print(f"linked {len(queries)} queries -> {out}")
    return 0


def cmd_label(args: argparse.Namespace) -> int:
    config = _apply_overrides(load_config(args.config), args)
    queries, registry = load_dataset(_dataset_spec(args))
    budget = config.label_budget()
    gw = config.gateway.build()
    pipelines = TieredPipelines(gw, config.pipeline_config(), timeout_ms=config.timeout_ms)
    examples = []
    spent = 0.0
    for q in queries:
        if len(examples) >= budget.max_queries:
            print(f"stopping: query budget ({budget.max_queries}) reached")
            break
        if budget.max_weighted_tokens is not None and spent >= budget.max_weighted_tokens:
            print(f"stopping: token budget ({budget.max_weighted_tokens}) reached")
            break
        if not q.gold_sql:
            continue
        schema = registry.schema(q.db_id)
        db_path = registry.db_path(q.db_id)
        linked, link_usage = link(q, schema, gw, model=config.model)
        executor = Executor(db_path, timeout_ms=config.timeout_ms)
        example = waterfall_label(q, linked, pipelines, executor, schema, db_path)
        examples.append(example)
        spent += weighted_tokens(link_usage, budget.mu)
        for outcome in example.outcomes.values():
            spent += outcome.prompt_tokens + budget.mu * outcome.completion_tokens
    export_training_set(examples, args.out)
    dist = label_distribution(examples)
    shown = ", ".join(f"{t.wire_name}={dist[t]}" for t in dist)
    print(f"labeled {len(examples)} queries ({shown}) -> {args.out}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = _apply_overrides(load_config(args.config), args)
    queries, registry = load_dataset(_dataset_spec(args))
    gw = config.gateway.build()
    router = build_router(config)
    pipelines = TieredPipelines(gw, config.pipeline_config(), timeout_ms=config.timeout_ms)
    oracle_labels = None
    if config.router.labels_path:
        oracle_labels = load_oracle_labels(config.router.labels_path)
    traces, manifest = run_benchmark(
        queries,
        registry,
        router,
        pipelines,
        gw,
        args.out_dir,
        config.run_config(),
        dataset_name=args.dataset_name,
        oracle_labels=oracle_labels,
        dataset_paths=(args.questions, args.databases),
    )
    correct = sum(1 for t in traces if t.correct)
    scored = sum(1 for t in traces if t.correct is not None)
    print(f"run {manifest.run_id}: {len(traces)} traces -> {args.out_dir}")
    if scored:
        print(f"EX = {correct / scored:.4f} ({correct}/{scored})")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    spec = _dataset_spec(args)
    queries, registry = load_dataset(spec)
    gold = {q.id: q for q in queries}
    traces = load_traces(args.traces)
    correct = total = 0
    for trace in traces:
        q = gold.get(trace.query_id)
        if q is None or not q.gold_sql:
            continue
        executor = Executor(registry.db_path(q.db_id), timeout_ms=args.timeout_ms)
        total += 1
        if trace.predicted_sql and executor.ex_match(trace.predicted_sql, q.gold_sql):
            correct += 1
    if total == 0:
        print("no gold-labeled traces to evaluate")
        return 1
    print(f"EX = {correct / total:.4f} ({correct}/{total})")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    traces = load_traces(args.traces)
    baselines = {}
    for tier, path in (
        (Tier.BASIC, args.basic),
        (Tier.INTERMEDIATE, args.intermediate),
        (Tier.ADVANCED, args.advanced),
    ):
        if path:
            baselines[tier] = load_traces(path)
    report = build_report(traces, baselines, mu=args.mu, method_name=args.method_name)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    print(render_table(report))
    write_csv(report, out_dir / "report.csv")
    write_json(report, out_dir / "report.json")
    points = report_points(report)
    plot_frontier(points, out_dir / "frontier.svg")
    frontier = pareto_frontier(points)
    print("pareto frontier:", " -> ".join(p.method for p in frontier))
    print(f"wrote report.csv, report.json, frontier.svg -> {out_dir}")
    return 0


def cmd_cache(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    cache_dir = Path(config.gateway.cache_dir or "")
    if not cache_dir.is_dir():
        print(f"cache directory not found: {cache_dir}")
        return 1
    entries = sorted(cache_dir.glob("*.json"))
    if args.cache_command == "inspect":
        total_bytes = sum(p.stat().st_size for p in entries)
        print(f"{len(entries)} entries, {total_bytes} bytes in {cache_dir}")
        for p in entries[: args.show]:
            print(f"  {p.stem}")
        return 0
    # gc: drop malformed entries and entries whose digest does not match
    removed = 0
    for p in entries:
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
            req = data["request"]
            digest = canonical_key(
                ChatRequest(
                    model=req["model"],
                    prompt=req["prompt"],
                    temperature=req["temperature"],
                    max_tokens=req["max_tokens"],
                )
            )
            if digest != p.stem:
                raise ValueError("digest mismatch")
            data["response"]["text"]
        except Exception:
            p.unlink()
            removed += 1
    print(f"removed {removed} invalid entries from {cache_dir}")
    return 0


def _add_dataset_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset-name", default="dataset")
    parser.add_argument("--questions", required=True)
    parser.add_argument("--databases", required=True)
    parser.add_argument("--format", choices=["bird", "spider"], default="bird")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tiersql")
    sub = parser.add_subparsers(dest="command", required=True)

    p_link = sub.add_parser("link", help="run schema linking only")
    p_link.add_argument("--config", required=True)
    _add_dataset_args(p_link)
    p_link.add_argument("--out", default="linked.jsonl")
    p_link.add_argument("--mode")
    p_link.add_argument("--limit", type=int)
    p_link.set_defaults(func=cmd_link)

    p_label = sub.add_parser("label", help="waterfall-label training queries")
    p_label.add_argument("--config", required=True)
    _add_dataset_args(p_label)
    p_label.add_argument("--out", default="training.jsonl")
    p_label.add_argument("--mode")
    p_label.add_argument("--limit", type=int)
    p_label.set_defaults(func=cmd_label)

    p_run = sub.add_parser("run", help="run the full benchmark")
    p_run.add_argument("--config", required=True)
    _add_dataset_args(p_run)
    p_run.add_argument("--out-dir", required=True)
    p_run.add_argument("--router")
    p_run.add_argument("--tier")
    p_run.add_argument("--mode")
    p_run.add_argument("--limit", type=int)
    p_run.set_defaults(func=cmd_run)

    p_eval = sub.add_parser("eval", help="re-score a trace file against gold")
    _add_dataset_args(p_eval)
    p_eval.add_argument("--traces", required=True)
    p_eval.add_argument("--timeout-ms", type=int, default=30_000)
    p_eval.set_defaults(func=cmd_eval)

    p_report = sub.add_parser("report", help="metric table, CSV/JSON, Pareto SVG")
    p_report.add_argument("--traces", required=True, help="routed traces JSONL")
    p_report.add_argument("--basic")
    p_report.add_argument("--intermediate")
    p_report.add_argument("--advanced")
    p_report.add_argument("--mu", type=float, default=4.0)
    p_report.add_argument("--method-name", default="routed")
    p_report.add_argument("--out-dir", default="reports")
    p_report.set_defaults(func=cmd_report)

    p_cache = sub.add_parser("cache", help="inspect or garbage-collect the cache")
    p_cache.add_argument("cache_command", choices=["inspect", "gc"])
    p_cache.add_argument("--config", required=True)
    p_cache.add_argument("--show", type=int, default=0)
    p_cache.set_defaults(func=cmd_cache)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
