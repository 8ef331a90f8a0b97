"""Core domain types shared by every other module.

Everything here is an immutable value object: safe to share between
concurrent workers and to use as dict keys where hashable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace


class Tier(enum.IntEnum):
    """The three generation pipelines, ordered by token cost (cheapest first)."""

    BASIC = 0
    INTERMEDIATE = 1
    ADVANCED = 2

    @property
    def wire_name(self) -> str:
        return _TIER_WIRE_NAMES[self]

    @classmethod
    def from_wire(cls, name: str) -> "Tier":
        """Parse a tier from its wire/display name (case-insensitive)."""
        try:
            return _TIER_BY_WIRE[name.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown tier name: {name!r}") from None


_TIER_WIRE_NAMES = {
    Tier.BASIC: "Basic",
    Tier.INTERMEDIATE: "Intermediate",
    Tier.ADVANCED: "Advanced",
}
_TIER_BY_WIRE = {name.lower(): tier for tier, name in _TIER_WIRE_NAMES.items()}

TIERS = (Tier.BASIC, Tier.INTERMEDIATE, Tier.ADVANCED)


def tier_cheaper(a: Tier, b: Tier) -> bool:
    """True iff ``a`` strictly precedes ``b`` in cost order."""
    return a < b


class Phase(enum.Enum):
    """Which part of the per-query flow a token count belongs to."""

    LINKING = "linking"
    ROUTING = "routing"
    GENERATION = "generation"


class UsageMergeError(ValueError):
    """Raised when merging token usages tagged with different phases."""


@dataclass(frozen=True)
class TokenUsage:
    """Prompt/completion token counts, optionally tagged with a phase.

    The gateway reports untagged usage (phase=None); callers attribute it to
    a phase via :meth:`tagged` before it enters a trace.
    """

    prompt_tokens: int
    completion_tokens: int
    phase: Phase | None = None

    def __post_init__(self) -> None:
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be non-negative")

    def tagged(self, phase: Phase) -> "TokenUsage":
        return replace(self, phase=phase)


ZERO_USAGE = TokenUsage(0, 0)


def merge_usage(a: TokenUsage, b: TokenUsage) -> TokenUsage:
    """Component-wise sum of two usages sharing the same phase."""
    if a.phase != b.phase:
        raise UsageMergeError(f"phase mismatch: {a.phase} vs {b.phase}")
    return TokenUsage(
        a.prompt_tokens + b.prompt_tokens,
        a.completion_tokens + b.completion_tokens,
        a.phase,
    )


@dataclass(frozen=True)
class NLQuery:
    """One benchmark example: a natural-language question over a database."""

    id: str
    question: str
    db_id: str
    hint: str = ""
    gold_sql: str | None = None
    difficulty: str | None = None  # "simple" | "moderate" | "challenging" when tagged


@dataclass(frozen=True)
class ColumnDef:
    name: str
    decl_type: str = ""
    description: str | None = None
    sample_values: tuple[str, ...] = ()


@dataclass(frozen=True)
class TableDef:
    name: str
    columns: tuple[ColumnDef, ...]
    primary_key: tuple[str, ...] = ()
    # (local column, foreign table, foreign column)
    foreign_keys: tuple[tuple[str, str, str], ...] = ()

    def __post_init__(self) -> None:
        seen = set()
        for col in self.columns:
            key = col.name.lower()
            if key in seen:
                raise ValueError(f"duplicate column {col.name!r} in table {self.name!r}")
            seen.add(key)

    def column(self, name: str) -> ColumnDef | None:
        """Case-insensitive column lookup, resolving to canonical casing."""
        want = name.lower()
        for col in self.columns:
            if col.name.lower() == want:
                return col
        return None


@dataclass(frozen=True)
class DatabaseSchema:
    """Full catalog of one database's tables and columns."""

    tables: tuple[TableDef, ...]

    def __post_init__(self) -> None:
        seen = set()
        for table in self.tables:
            key = table.name.lower()
            if key in seen:
                raise ValueError(f"duplicate table {table.name!r}")
            seen.add(key)
        for table in self.tables:
            for local, ftable, fcol in table.foreign_keys:
                if table.column(local) is None:
                    raise ValueError(
                        f"foreign key column {table.name}.{local} does not exist"
                    )
                target = self.table(ftable)
                if target is None or target.column(fcol) is None:
                    raise ValueError(
                        f"foreign key target {ftable}.{fcol} does not exist"
                    )

    def table(self, name: str) -> TableDef | None:
        """Case-insensitive table lookup, resolving to canonical casing."""
        want = name.lower()
        for table in self.tables:
            if table.name.lower() == want:
                return table
        return None

    @property
    def column_count(self) -> int:
        return sum(len(t.columns) for t in self.tables)

    def column_pairs(self) -> list[tuple[str, str]]:
        """All (table, column) pairs with canonical casing."""
        return [(t.name, c.name) for t in self.tables for c in t.columns]


class Provenance(enum.Enum):
    MODEL = "model"
    FALLBACK_FULL = "fallback_full"


@dataclass(frozen=True)
class LinkedSchema:
    """The per-query filtered subset of a database schema.

    ``entries`` use the parent schema's canonical casing; construction paths
    (see :mod:`tiersql.linking`) guarantee every entry exists in the parent.
    """

    entries: tuple[tuple[str, tuple[str, ...]], ...]
    provenance: Provenance

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("linked schema must contain at least one table")

    @classmethod
    def from_full(cls, schema: DatabaseSchema) -> "LinkedSchema":
        """The degenerate no-pruning link: the entire schema."""
        entries = tuple(
            (t.name, tuple(c.name for c in t.columns)) for t in schema.tables
        )
        return cls(entries=entries, provenance=Provenance.FALLBACK_FULL)

    @property
    def n_tables(self) -> int:
        return len(self.entries)

    @property
    def n_columns(self) -> int:
        return sum(len(cols) for _, cols in self.entries)

    def column_pairs(self) -> list[tuple[str, str]]:
        return [(t, c) for t, cols in self.entries for c in cols]


@dataclass(frozen=True)
class RunTrace:
    """Per-query record of one benchmark run; the unit of all metric computation."""

    query_id: str
    chosen_tier: Tier
    predicted_sql: str
    usages: tuple[TokenUsage, ...]
    correct: bool | None  # defined only when gold SQL was present
    wall_clock_ms: int
    oracle_label: Tier | None = None
    router_name: str = ""
    difficulty: str | None = None
    error: str | None = None
    usage_estimated: bool = False

    def __post_init__(self) -> None:
        if self.wall_clock_ms < 0:
            raise ValueError("wall_clock_ms must be non-negative")
        phases = [u.phase for u in self.usages]
        if len(phases) != len(set(phases)):
            raise ValueError("at most one usage entry per phase")

    def usage_for(self, phase: Phase) -> TokenUsage:
        for u in self.usages:
            if u.phase is phase:
                return u
        return TokenUsage(0, 0, phase)
