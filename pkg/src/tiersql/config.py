"""Single-JSON-document configuration for the CLI and harness.

Credentials never appear in the file; the gateway reads them from the
environment variable named under ``gateway.api_key_env``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .gateway import Gateway, GatewayMode, HttpProvider
from .harness import RunConfig
from .labeling import LabelBudget
from .pipelines import PipelineConfig


class ConfigError(ValueError):
    """The config document is missing or malformed."""


@dataclass(frozen=True)
class GatewayConfig:
    mode: GatewayMode
    cache_dir: str | None = None
    base_url: str | None = None
    api_key_env: str = "TIERSQL_API_KEY"
    concurrency: int = 4

    def build(self) -> Gateway:
        provider = None
        if self.mode is not GatewayMode.REPLAY_STRICT:
            if not self.base_url:
                raise ConfigError(f"gateway mode {self.mode.value} requires base_url")
            provider = HttpProvider(self.base_url, api_key_env=self.api_key_env)
        return Gateway(
            mode=self.mode,
            cache_dir=self.cache_dir,
            provider=provider,
            concurrency=self.concurrency,
        )


@dataclass(frozen=True)
class RouterConfig:
    kind: str  # knn | cascade | multiclass | preference | oracle | fixed
    k: int = 5
    train_path: str | None = None
    endpoint: str | None = None
    labels_path: str | None = None
    tier: str | None = None
    use_hint: bool = True


@dataclass(frozen=True)
class AppConfig:
    gateway: GatewayConfig
    router: RouterConfig
    model: str
    mu: float = 4.0
    timeout_ms: int = 30_000
    workers: int = 1
    limit: int | None = None
    synthesis_k: int = 3
    refine_rounds: int = 1
    max_tokens: int | None = None
    label_max_queries: int = 100
    label_max_weighted_tokens: float | None = None

    def run_config(self) -> RunConfig:
        return RunConfig(
            model=self.model,
            mu=self.mu,
            workers=self.workers,
            timeout_ms=self.timeout_ms,
            limit=self.limit,
            max_tokens=self.max_tokens,
        )

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            model=self.model,
            synthesis_k=self.synthesis_k,
            refine_rounds=self.refine_rounds,
            max_tokens=self.max_tokens,
        )

    def label_budget(self) -> LabelBudget:
        return LabelBudget(
            max_queries=self.label_max_queries,
            max_weighted_tokens=self.label_max_weighted_tokens,
            mu=self.mu,
        )


def load_config(path: str | Path) -> AppConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    return parse_config(data)


def parse_config(data: dict) -> AppConfig:
    try:
        gw = data["gateway"]
        gateway = GatewayConfig(
            mode=GatewayMode(gw["mode"]),
            cache_dir=gw.get("cache_dir"),
            base_url=gw.get("base_url"),
            api_key_env=gw.get("api_key_env", "TIERSQL_API_KEY"),
            concurrency=gw.get("concurrency", 4),
        )
        router_data = data.get("router", {"kind": "fixed", "tier": "Advanced"})
        router = RouterConfig(
            kind=router_data["kind"],
            k=router_data.get("k", 5),
            train_path=router_data.get("train_path"),
            endpoint=router_data.get("endpoint"),
            labels_path=router_data.get("labels_path"),
            tier=router_data.get("tier"),
            use_hint=router_data.get("use_hint", True),
        )
        pipelines = data.get("pipelines", {})
        labeling = data.get("labeling", {})
        return AppConfig(
            gateway=gateway,
            router=router,
            model=data["model"],
            mu=data.get("mu", 4.0),
            timeout_ms=data.get("timeout_ms", 30_000),
            workers=data.get("workers", 1),
            limit=data.get("limit"),
            synthesis_k=pipelines.get("synthesis_k", 3),
            refine_rounds=pipelines.get("refine_rounds", 1),
            max_tokens=data.get("max_tokens"),
            label_max_queries=labeling.get("max_queries", 100),
            label_max_weighted_tokens=labeling.get("max_weighted_tokens"),
        )
    except KeyError as exc:
        raise ConfigError(f"config is missing required field {exc}") from exc
