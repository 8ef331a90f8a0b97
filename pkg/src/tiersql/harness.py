"""Run orchestration: the full link -> route -> generate -> execute loop.

Traces are appended to JSONL in dataset order as a contiguous prefix, so an
interrupted run resumes by skipping the query ids already on disk and the
final file is identical to an uninterrupted one. A worker pool processes
queries concurrently; the single appender serializes writes.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

from . import __version__
from .datasets import SchemaRegistry
from .execution import Executor
from .gateway import Gateway, GatewayMode
from .linking import link
from .model import NLQuery, Phase, RunTrace, Tier, TokenUsage
from .pipelines import TieredPipelines
from .routing import Router


@dataclass(frozen=True)
class RunConfig:
    model: str
    mu: float = 4.0
    workers: int = 1
    timeout_ms: int = 30_000
    limit: int | None = None
    max_tokens: int | None = None


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to re-execute a run in replay mode."""

    run_id: str
    dataset: str
    router_name: str
    gateway_mode: str
    model: str
    mu: float
    timeout_ms: int
    n_queries: int
    started_at: str
    finished_at: str
    questions_file: str = ""
    databases_dir: str = ""
    engine_version: str = __version__

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "dataset": self.dataset,
            "questions_file": self.questions_file,
            "databases_dir": self.databases_dir,
            "router_name": self.router_name,
            "gateway_mode": self.gateway_mode,
            "model": self.model,
            "mu": self.mu,
            "timeout_ms": self.timeout_ms,
            "n_queries": self.n_queries,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "engine_version": self.engine_version,
        }


def trace_to_dict(trace: RunTrace) -> dict:
    return {
        "query_id": trace.query_id,
        "chosen_tier": trace.chosen_tier.wire_name,
        "predicted_sql": trace.predicted_sql,
        "usages": [
            {
                "phase": u.phase.value if u.phase else None,
                "prompt_tokens": u.prompt_tokens,
                "completion_tokens": u.completion_tokens,
            }
            for u in trace.usages
        ],
        "correct": trace.correct,
        "wall_clock_ms": trace.wall_clock_ms,
        "oracle_label": (
            trace.oracle_label.wire_name if trace.oracle_label is not None else None
        ),
        "router_name": trace.router_name,
        "difficulty": trace.difficulty,
        "error": trace.error,
        "usage_estimated": trace.usage_estimated,
    }


def trace_from_dict(data: dict) -> RunTrace:
    return RunTrace(
        query_id=data["query_id"],
        chosen_tier=Tier.from_wire(data["chosen_tier"]),
        predicted_sql=data["predicted_sql"],
        usages=tuple(
            TokenUsage(
                u["prompt_tokens"],
                u["completion_tokens"],
                Phase(u["phase"]) if u.get("phase") else None,
            )
            for u in data["usages"]
        ),
        correct=data["correct"],
        wall_clock_ms=data["wall_clock_ms"],
        oracle_label=Tier.from_wire(data["oracle_label"]) if data.get("oracle_label") else None,
        router_name=data.get("router_name", ""),
        difficulty=data.get("difficulty"),
        error=data.get("error"),
        usage_estimated=data.get("usage_estimated", False),
    )


def load_traces(path: str | Path) -> list[RunTrace]:
    traces = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                traces.append(trace_from_dict(json.loads(line)))
    return traces


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class _OrderedAppender:
    """Writes traces to JSONL strictly in dataset order, as they complete."""

    def __init__(self, path: Path):
        self._fh = path.open("a", encoding="utf-8")
        self._lock = threading.Lock()
        self._pending: dict[int, RunTrace] = {}
        self._next = 0
        self.written: list[RunTrace] = []

    def submit(self, index: int, trace: RunTrace) -> None:
        with self._lock:
            self._pending[index] = trace
            while self._next in self._pending:
                ready = self._pending.pop(self._next)
                self._fh.write(json.dumps(trace_to_dict(ready), ensure_ascii=False) + "\n")
                self._fh.flush()
                self.written.append(ready)
                self._next += 1

    def close(self) -> None:
        assert not self._pending, "appender closed with gaps in the trace order"
        self._fh.close()


def run_query(
    q: NLQuery,
    registry: SchemaRegistry,
    router: Router,
    pipelines: TieredPipelines,
    gw: Gateway,
    config: RunConfig,
    oracle_labels: Mapping[str, Tier] | None = None,
) -> RunTrace:
    """Phase I -> II -> III for a single query; failures land in the trace."""
    replaying = gw.mode in (GatewayMode.REPLAY_STRICT, GatewayMode.REPLAY_FALLBACK)
    started = time.monotonic()
    oracle_label = (oracle_labels or {}).get(q.id)
    chosen = Tier.BASIC
    router_name = ""
    usages: list[TokenUsage] = []
    try:
        schema = registry.schema(q.db_id)
        db_path = registry.db_path(q.db_id)
        linked, link_usage = link(
            q, schema, gw, model=config.model, max_tokens=config.max_tokens
        )
        usages.append(link_usage)
        decision = router.route(q.id, q.question, q.hint, linked)
        chosen = decision.tier
        router_name = decision.router_name
        usages.append(decision.router_usage)
        result = pipelines.generate(chosen, q, linked, schema, db_path)
        usages.append(result.usage)
        correct: bool | None = None
        if q.gold_sql:
            executor = Executor(db_path, timeout_ms=config.timeout_ms)
            correct = executor.ex_match(result.sql, q.gold_sql)
        elapsed_ms = 0 if replaying else int((time.monotonic() - started) * 1000)
        return RunTrace(
            query_id=q.id,
            chosen_tier=chosen,
            predicted_sql=result.sql,
            usages=tuple(usages),
            correct=correct,
            wall_clock_ms=elapsed_ms,
            oracle_label=oracle_label,
            router_name=router_name,
            difficulty=q.difficulty,
            usage_estimated=result.usage_estimated,
        )
    except Exception as exc:
        elapsed_ms = 0 if replaying else int((time.monotonic() - started) * 1000)
        return RunTrace(
            query_id=q.id,
            chosen_tier=chosen,
            predicted_sql="",
            usages=tuple(usages),
            correct=False if q.gold_sql else None,
            wall_clock_ms=elapsed_ms,
            oracle_label=oracle_label,
            router_name=router_name,
            difficulty=q.difficulty,
            error=f"{type(exc).__name__}: {exc}",
        )


def run_benchmark(
    queries: Sequence[NLQuery],
    registry: SchemaRegistry,
    router: Router,
    pipelines: TieredPipelines,
    gw: Gateway,
    out_dir: str | Path,
    config: RunConfig,
    dataset_name: str = "",
    oracle_labels: Mapping[str, Tier] | None = None,
    dataset_paths: tuple[str, str] = ("", ""),
) -> tuple[list[RunTrace], RunManifest]:
    """Run every query, appending traces incrementally; resumable by rerun.

    Already-traced query ids are skipped, so interrupting and rerunning
    yields the same final trace set as one uninterrupted run.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_path = out_dir / "traces.jsonl"

    if config.limit is not None:
        queries = queries[: config.limit]

    done: list[RunTrace] = []
    if trace_path.exists():
        done = load_traces(trace_path)
    done_ids = {t.query_id for t in done}
    todo = [(i, q) for i, q in enumerate(queries) if q.id not in done_ids]

    started_at = _utc_now()
    appender = _OrderedAppender(trace_path)
    try:
        if config.workers <= 1:
            for order, (_, q) in enumerate(todo):
                appender.submit(
                    order, run_query(q, registry, router, pipelines, gw, config, oracle_labels)
                )
        else:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                futures = {
                    pool.submit(
                        run_query, q, registry, router, pipelines, gw, config, oracle_labels
                    ): order
                    for order, (_, q) in enumerate(todo)
                }
                for future in futures:
                    appender.submit(futures[future], future.result())
    finally:
        appender.close()

    traces = done + appender.written
    router_names = {t.router_name for t in traces if t.router_name}
    manifest = RunManifest(
        run_id=str(uuid.uuid4()),
        dataset=dataset_name,
        router_name=router_names.pop() if len(router_names) == 1 else "mixed",
        gateway_mode=gw.mode.value,
        model=config.model,
        mu=config.mu,
        timeout_ms=config.timeout_ms,
        n_queries=len(traces),
        started_at=started_at,
        finished_at=_utc_now(),
        questions_file=dataset_paths[0],
        databases_dir=dataset_paths[1],
    )
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    return traces, manifest
