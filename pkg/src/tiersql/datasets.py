"""Dataset ingestion for the two common question-file layouts.

``bird`` records carry question/evidence/SQL/difficulty; ``spider`` records
carry question/query with no hint or difficulty. Schemas are introspected
from the SQLite files themselves (types, primary/foreign keys, and up to
three sample values per column).
"""

from __future__ import annotations

import enum
import json
import sqlite3
from dataclasses import dataclass
from pathlib import Path

from .model import ColumnDef, DatabaseSchema, NLQuery, TableDef


class DatasetFormat(str, enum.Enum):
    BIRD = "bird"
    SPIDER = "spider"


class DatasetError(RuntimeError):
    """Unreadable questions file or unresolvable database reference."""


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    questions_file: Path
    databases_dir: Path
    format: DatasetFormat

    @classmethod
    def make(cls, name: str, questions_file: str | Path, databases_dir: str | Path,
             format: str | DatasetFormat) -> "DatasetSpec":
        return cls(name, Path(questions_file), Path(databases_dir), DatasetFormat(format))

    def db_path(self, db_id: str) -> Path:
        return self.databases_dir / db_id / f"{db_id}.sqlite"


_DIFFICULTIES = {"simple", "moderate", "challenging"}


def _parse_record(record: dict, index: int, fmt: DatasetFormat) -> NLQuery:
    if fmt is DatasetFormat.BIRD:
        question = record.get("question")
        db_id = record.get("db_id")
        if not question or not db_id:
            raise DatasetError(f"record {index}: missing question or db_id")
        difficulty = record.get("difficulty")
        if difficulty is not None and difficulty not in _DIFFICULTIES:
            difficulty = None
        return NLQuery(
            id=str(record.get("question_id", index)),
            question=question,
            db_id=db_id,
            hint=record.get("evidence", "") or "",
            gold_sql=record.get("SQL") or None,
            difficulty=difficulty,
        )
    question = record.get("question")
    db_id = record.get("db_id")
    if not question or not db_id:
        raise DatasetError(f"record {index}: missing question or db_id")
    return NLQuery(
        id=str(index),
        question=question,
        db_id=db_id,
        hint="",
        gold_sql=record.get("query") or None,
        difficulty=None,
    )


class SchemaRegistry:
    """Lazy, cached schema introspection over a dataset's database files."""

    def __init__(self, spec: DatasetSpec):
        self.spec = spec
        self._cache: dict[str, DatabaseSchema] = {}

    def db_path(self, db_id: str) -> Path:
        path = self.spec.db_path(db_id)
        if not path.is_file():
            raise DatasetError(f"database id {db_id!r} does not resolve to {path}")
        return path

    def schema(self, db_id: str) -> DatabaseSchema:
        if db_id not in self._cache:
            self._cache[db_id] = introspect_schema(self.db_path(db_id))
        return self._cache[db_id]


def introspect_schema(db_path: str | Path, sample_values: int = 3) -> DatabaseSchema:
    """Build a DatabaseSchema by inspecting a SQLite file read-only."""
    conn = sqlite3.connect(f"file:{Path(db_path)}?mode=ro", uri=True)
    try:
        names = [
            row[0]
            for row in conn.execute(
                "SELECT name FROM sqlite_master WHERE type='table' "
                "AND name NOT LIKE 'sqlite_%' ORDER BY name"
            )
        ]
        tables = []
        for name in names:
            info = conn.execute(f'PRAGMA table_info("{name}")').fetchall()
            columns = []
            pk: list[tuple[int, str]] = []
            for _, col_name, decl_type, _notnull, _default, pk_pos in info:
                samples: tuple[str, ...] = ()
                if sample_values > 0:
                    try:
                        rows = conn.execute(
                            f'SELECT "{col_name}" FROM "{name}" '
                            f'WHERE "{col_name}" IS NOT NULL LIMIT {sample_values}'
                        ).fetchall()
                        samples = tuple(_display_value(r[0]) for r in rows)
                    except sqlite3.Error:
                        samples = ()
                columns.append(
                    ColumnDef(name=col_name, decl_type=decl_type or "", sample_values=samples)
                )
                if pk_pos:
                    pk.append((pk_pos, col_name))
            fks = [
                (row[3], row[2], row[4] if row[4] is not None else row[3])
                for row in conn.execute(f'PRAGMA foreign_key_list("{name}")')
            ]
            tables.append(
                TableDef(
                    name=name,
                    columns=tuple(columns),
                    primary_key=tuple(col for _, col in sorted(pk)),
                    foreign_keys=tuple(fks),
                )
            )
        return DatabaseSchema(tables=tuple(tables))
    finally:
        conn.close()


def _display_value(value: object) -> str:
    if isinstance(value, str):
        shown = value if len(value) <= 40 else value[:37] + "..."
        return f"'{shown}'"
    if isinstance(value, bytes):
        return f"x'{value.hex()[:16]}'"
    return str(value)


def load_dataset(spec: DatasetSpec) -> tuple[list[NLQuery], SchemaRegistry]:
    """Read the questions file and return queries plus a schema registry.

    Malformed records and unresolvable db_ids are reported with their record
    index; duplicate ids are rejected.
    """
    if not spec.questions_file.is_file():
        raise DatasetError(f"questions file not found: {spec.questions_file}")
    try:
        records = json.loads(spec.questions_file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetError(f"questions file is not valid JSON: {exc}") from exc
    if not isinstance(records, list):
        raise DatasetError("questions file must hold a JSON array of records")

    registry = SchemaRegistry(spec)
    queries = []
    seen_ids: set[str] = set()
    for index, record in enumerate(records):
        if not isinstance(record, dict):
            raise DatasetError(f"record {index}: not a JSON object")
        q = _parse_record(record, index, spec.format)
        if q.id in seen_ids:
            raise DatasetError(f"record {index}: duplicate query id {q.id!r}")
        seen_ids.add(q.id)
        registry.db_path(q.db_id)  # fail fast on unresolvable databases
        queries.append(q)
    return queries, registry
