"""Execution accuracy and cost-efficiency metrics.

Accuracies are fractions in [0, 1] internally and become percentages only at
display time. PGR and TEP are ratios of differences over baselines, so they
give identical results whether their accuracy arguments arrive as fractions
or as percentages.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .model import TIERS, DatabaseSchema, LinkedSchema, Phase, RunTrace, Tier, TokenUsage


class MetricError(ValueError):
    """Base class for metric domain errors."""


class UndefinedMetricError(MetricError):
    """The metric has no value on this input (e.g. empty sample)."""


class DegenerateGapError(MetricError):
    """PGR is undefined when the strong and weak baselines tie."""


class DegenerateCostError(MetricError):
    """TEP is undefined when the token costs are equal."""


class UndefinedBaselineError(MetricError):
    """TEP needs a positive baseline accuracy and token cost."""


def ex(verdicts: Sequence[bool]) -> float:
    """Fraction of correct execution verdicts."""
    if not verdicts:
        raise UndefinedMetricError("ex is undefined on an empty verdict list")
    return sum(bool(v) for v in verdicts) / len(verdicts)


def weighted_tokens(u: TokenUsage, mu: float) -> float:
    """Weighted token cost: prompt tokens plus mu times completion tokens."""
    if mu < 0:
        raise ValueError("mu must be non-negative")
    return u.prompt_tokens + mu * u.completion_tokens


def avg_tokens(
    traces: Sequence[RunTrace],
    mu: float,
    phases: Iterable[Phase] = (Phase.GENERATION,),
) -> float:
    """Mean weighted token cost per query over the selected phases."""
    if not traces:
        raise UndefinedMetricError("avg_tokens is undefined on an empty trace list")
    selected = tuple(phases)
    total = 0.0
    for trace in traces:
        for phase in selected:
            total += weighted_tokens(trace.usage_for(phase), mu)
    return total / len(traces)


def pgr(ex_r: float, ex_b: float, ex_a: float) -> float:
    """Share of the weak-to-strong accuracy gap a router recovers."""
    if ex_a == ex_b:
        raise DegenerateGapError("strong and weak baselines tie; gap is zero")
    return (ex_r - ex_b) / (ex_a - ex_b)


def tep(ex_g: float, ex_b: float, t_g: float, t_b: float) -> float:
    """Token elasticity of performance: relative accuracy gain per relative
    token-cost increase over the cheapest baseline."""
    if t_g == t_b:
        raise DegenerateCostError("token costs are equal; elasticity is undefined")
    if ex_b <= 0 or t_b <= 0:
        raise UndefinedBaselineError("baseline accuracy and token cost must be positive")
    return ((ex_g - ex_b) / ex_b) / ((t_g - t_b) / t_b)


@dataclass(frozen=True)
class DisagreementMatrix:
    """3x3 counts: rows are oracle labels, columns are routed tiers, both in
    cheap-to-expensive order."""

    counts: tuple[tuple[int, int, int], ...]

    def __post_init__(self) -> None:
        if len(self.counts) != 3 or any(len(row) != 3 for row in self.counts):
            raise ValueError("disagreement matrix must be 3x3")
        if any(c < 0 for row in self.counts for c in row):
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return sum(c for row in self.counts for c in row)

    @property
    def agreement(self) -> float:
        if self.total == 0:
            raise UndefinedMetricError("agreement is undefined on an all-zero matrix")
        return sum(self.counts[i][i] for i in range(3)) / self.total


def utr(m: DisagreementMatrix) -> float:
    """Share of routings on or above the diagonal: queries never under-routed."""
    total = m.total
    if total == 0:
        raise UndefinedMetricError("utr is undefined on an all-zero matrix")
    upper = sum(m.counts[i][j] for i in range(3) for j in range(3) if i <= j)
    return upper / total


def disagreement(oracle: Sequence[Tier], routed: Sequence[Tier]) -> DisagreementMatrix:
    """Tally oracle labels (rows) against routed tiers (columns)."""
    if len(oracle) != len(routed):
        raise ValueError("oracle and routed lists must have equal length")
    counts = [[0, 0, 0] for _ in range(3)]
    for o, r in zip(oracle, routed):
        counts[int(o)][int(r)] += 1
    return DisagreementMatrix(tuple(tuple(row) for row in counts))


def ex_by_difficulty(traces: Sequence[RunTrace]) -> dict[str, float]:
    """EX per difficulty tag; untagged queries are skipped."""
    buckets: dict[str, list[bool]] = {}
    for t in traces:
        if t.difficulty is None or t.correct is None:
            continue
        buckets.setdefault(t.difficulty, []).append(t.correct)
    return {name: ex(verdicts) for name, verdicts in sorted(buckets.items())}


def linking_quality(
    linked: LinkedSchema,
    gold_columns: Sequence[tuple[str, str]],
    full: DatabaseSchema,
) -> tuple[float, float]:
    """(recall over the gold columns, fraction of full-schema columns pruned)."""
    if not gold_columns:
        raise UndefinedMetricError("linking recall is undefined without gold columns")
    linked_pairs = {(t.lower(), c.lower()) for t, c in linked.column_pairs()}
    gold_pairs = {(t.lower(), c.lower()) for t, c in gold_columns}
    recall = len(gold_pairs & linked_pairs) / len(gold_pairs)
    full_columns = full.column_count
    reduction = 1.0 - (linked.n_columns / full_columns) if full_columns else 0.0
    return recall, reduction


_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|`[^`]+`|\"[^\"]+\"|\[[^\]]+\]")


def gold_columns_from_sql(gold_sql: str, schema: DatabaseSchema) -> list[tuple[str, str]]:
    """Lightweight identifier extraction: tokens matched against schema names.

    A (table, column) pair counts when the column name appears among the
    SQL's identifiers and either its table also appears or the column name is
    unique across the whole schema. Deliberately approximate; datasets with a
    provided gold-column list should prefer it.
    """
    tokens = set()
    for tok in _IDENTIFIER.findall(gold_sql):
        tokens.add(tok.strip('`"[]').lower())
    column_owners: dict[str, list[str]] = {}
    for table, column in schema.column_pairs():
        column_owners.setdefault(column.lower(), []).append(table)
    out = []
    for table, column in schema.column_pairs():
        if column.lower() not in tokens:
            continue
        if table.lower() in tokens or len(column_owners[column.lower()]) == 1:
            out.append((table, column))
    return out


@dataclass(frozen=True)
class ReportRow:
    """One method's line in the comparison table."""

    method: str
    n: int
    ex_total: float
    ex_by_difficulty: dict[str, float] = field(default_factory=dict)
    avg_weighted_tokens: float = 0.0
    pgr: float | None = None
    tep: float | None = None
    agreement_with_oracle: float | None = None
    utr: float | None = None
    total_wall_clock_ms: int = 0


@dataclass(frozen=True)
class MetricReport:
    rows: tuple[ReportRow, ...]
    mu: float
    phases: tuple[Phase, ...]
    notes: tuple[str, ...] = ()
