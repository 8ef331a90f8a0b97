"""Complexity-aware routing across tiered text-to-SQL generation pipelines.

The library is organized around three phases: schema linking
(:mod:`tiersql.linking`), routing (:mod:`tiersql.routing`), and tiered SQL
generation (:mod:`tiersql.pipelines`), with execution-accuracy and
token-cost benchmarking in :mod:`tiersql.metrics`, :mod:`tiersql.harness`,
and :mod:`tiersql.reporting`.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    LinkedSchema,
    NLQuery,
    DatabaseSchema,
    Phase,
    RunTrace,
    Tier,
    TokenUsage,
    merge_usage,
    tier_cheaper,
)
