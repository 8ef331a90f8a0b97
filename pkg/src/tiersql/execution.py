"""Read-only SQL execution against SQLite files, with timeouts, and the
result-set comparison that decides execution-accuracy matches.

Result rows are compared as a set of tuples (duplicates collapse, row order
is ignored) while the order of cells inside each tuple stays significant.
Each cell is canonicalized to a type-tagged form so distinct SQLite storage
classes never collide: integer 1, real 1.0, and text '1' are three different
cells, and a blob's hex form cannot alias a text cell of the same spelling.
"""

from __future__ import annotations

import enum
import re
import sqlite3
import time
from dataclasses import dataclass
from pathlib import Path

DEFAULT_TIMEOUT_MS = 30_000
_PROGRESS_OPCODES = 500  # deadline check granularity for the progress handler

# Statements with these heads are rejected before touching the database;
# anything else still runs on a read-only connection, so a mistyped SELECT
# surfaces SQLite's own syntax error while mutations stay impossible.
_MUTATING_HEADS = frozenset(
    "insert update delete drop create alter replace attach detach "
    "pragma vacuum reindex analyze begin commit rollback savepoint release".split()
)
_LEADING_NOISE = re.compile(r"(\s|--[^\n]*\n|/\*.*?\*/)+", re.DOTALL)


class GoldExecutionError(RuntimeError):
    """Gold SQL failed to execute; a dataset defect, never a mismatch."""


class Outcome(enum.Enum):
    OK = "ok"
    ERROR = "error"
    TIMEOUT = "timeout"


Cell = tuple  # ("null",) | ("int", i) | ("real", x) | ("text", s) | ("blob", hex)


def canonical_cell(value: object) -> Cell:
    """Map a SQLite value to exactly one canonical, type-tagged cell form."""
    if value is None:
        return ("null",)
    if isinstance(value, bool):  # sqlite3 never returns bool, but be total
        return ("int", int(value))
    if isinstance(value, int):
        return ("int", value)
    if isinstance(value, float):
        return ("real", value)
    if isinstance(value, str):
        return ("text", value)
    if isinstance(value, (bytes, bytearray, memoryview)):
        return ("blob", bytes(value).hex())
    return ("text", str(value))


def round_real_cell(cell: Cell, significant_digits: int = 15) -> Cell:
    if cell[0] != "real":
        return cell
    return ("real", float(f"%.{significant_digits}g" % cell[1]))


@dataclass(frozen=True)
class ResultSet:
    """Deduplicated canonical rows of one successful execution."""

    rows: frozenset[tuple[Cell, ...]]

    @classmethod
    def from_rows(cls, rows: list[tuple]) -> "ResultSet":
        return cls(frozenset(tuple(canonical_cell(v) for v in row) for row in rows))

    def rounded(self, significant_digits: int = 15) -> "ResultSet":
        return ResultSet(
            frozenset(
                tuple(round_real_cell(c, significant_digits) for c in row)
                for row in self.rows
            )
        )


@dataclass(frozen=True)
class ExecOutcome:
    value: Outcome
    rows: ResultSet | None = None
    message: str | None = None

    @property
    def ok(self) -> bool:
        return self.value is Outcome.OK


def _strip_leading_noise(sql: str) -> str:
    m = _LEADING_NOISE.match(sql)
    return sql[m.end():] if m else sql


def is_readonly_statement(sql: str) -> bool:
    head = _strip_leading_noise(sql).lstrip("(").lstrip()
    first = head.split(None, 1)[0].lower() if head.split() else ""
    return first not in _MUTATING_HEADS


def execute(db_path: str | Path, sql: str, timeout_ms: int = DEFAULT_TIMEOUT_MS) -> ExecOutcome:
    """Run one statement read-only, canonicalize rows, interrupt at timeout.

    A missing database file raises FileNotFoundError (an environment
    problem), unlike SQL failures which come back as ExecOutcome.ERROR.
    """
    path = Path(db_path)
    if not path.is_file():
        raise FileNotFoundError(f"database file not found: {path}")
    if not is_readonly_statement(sql):
        return ExecOutcome(Outcome.ERROR, message="mutating statements are not allowed")

    conn = sqlite3.connect(f"file:{path}?mode=ro", uri=True)
    deadline = time.monotonic() + timeout_ms / 1000.0
    timed_out = False

    def guard() -> int:
        nonlocal timed_out
        if time.monotonic() > deadline:
            timed_out = True
            return 1  # nonzero aborts the statement
        return 0

    try:
        conn.set_progress_handler(guard, _PROGRESS_OPCODES)
        try:
            rows = conn.execute(sql).fetchall()
        except sqlite3.Error as exc:
            if timed_out:
                return ExecOutcome(Outcome.TIMEOUT, message=f"interrupted after {timeout_ms} ms")
            return ExecOutcome(Outcome.ERROR, message=str(exc))
        return ExecOutcome(Outcome.OK, rows=ResultSet.from_rows(rows))
    finally:
        conn.close()


def ex_match(
    pred_sql: str,
    gold_sql: str,
    db_path: str | Path,
    timeout_ms: int = DEFAULT_TIMEOUT_MS,
    round_reals: bool = False,
) -> bool:
    """The predicate inside execution accuracy: identical canonical row sets.

    Any error or timeout on the predicted side counts as a mismatch; a
    failing gold query is a dataset defect and raises GoldExecutionError.
    ``round_reals`` compares floats at 15 significant digits instead of
    exactly (off by default).
    """
    gold = execute(db_path, gold_sql, timeout_ms)
    if not gold.ok:
        raise GoldExecutionError(f"gold SQL failed: {gold.message or gold.value.value}")
    pred = execute(db_path, pred_sql, timeout_ms)
    if not pred.ok:
        return False
    assert gold.rows is not None and pred.rows is not None
    if round_reals:
        return gold.rows.rounded() == pred.rows.rounded()
    return gold.rows == pred.rows


class Executor:
    """Bound executor: a database path plus comparison settings.

    One of these per (worker, database); concurrent read-only executions
    across workers are safe.
    """

    def __init__(self, db_path: str | Path, timeout_ms: int = DEFAULT_TIMEOUT_MS,
                 round_reals: bool = False):
        self.db_path = Path(db_path)
        self.timeout_ms = timeout_ms
        self.round_reals = round_reals

    def execute(self, sql: str) -> ExecOutcome:
        return execute(self.db_path, sql, self.timeout_ms)

    def ex_match(self, pred_sql: str, gold_sql: str) -> bool:
        return ex_match(pred_sql, gold_sql, self.db_path, self.timeout_ms, self.round_reals)
