"""Shared fixtures: toy schemas, stub providers, and a scratch database."""

from __future__ import annotations

import math
import sqlite3
from pathlib import Path
from typing import Callable

import pytest

from tiersql.gateway import ChatRequest, ChatResponse, Gateway, GatewayMode
from tiersql.model import ColumnDef, DatabaseSchema, NLQuery, TableDef, TokenUsage

FIXTURES = Path(__file__).parent / "fixtures"


def char_provider(fn: Callable[[str], str]):
    """Wrap a prompt->text function as a provider charging ceil(chars/4)."""

    def provider(req: ChatRequest) -> ChatResponse:
        text = fn(req.prompt)
        return ChatResponse(
            text,
            TokenUsage(math.ceil(len(req.prompt) / 4), math.ceil(len(text) / 4)),
        )

    return provider


class CountingProvider:
    """Delegates to another provider while counting calls and concurrency."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    def __call__(self, req: ChatRequest) -> ChatResponse:
        self.calls += 1
        return self.inner(req)


def passthrough_gateway(fn: Callable[[str], str]) -> Gateway:
    return Gateway(GatewayMode.PASSTHROUGH, provider=char_provider(fn))


@pytest.fixture
def toy_schema() -> DatabaseSchema:
    return DatabaseSchema(
        tables=(
            TableDef(
                name="frpm",
                columns=(
                    ColumnDef("CDSCode", "TEXT", description="school code"),
                    ColumnDef("FRPM_Count", "REAL", sample_values=("12.0", "7.5")),
                ),
                primary_key=("CDSCode",),
            ),
            TableDef(
                name="schools",
                columns=(
                    ColumnDef("CDSCode", "TEXT"),
                    ColumnDef("City", "TEXT", sample_values=("'Alameda'", "'Fresno'", "'Lodi'")),
                    ColumnDef("County", "TEXT"),
                ),
                primary_key=("CDSCode",),
                foreign_keys=(("CDSCode", "frpm", "CDSCode"),),
            ),
        )
    )


@pytest.fixture
def toy_query() -> NLQuery:
    return NLQuery(
        id="q1",
        question="How many schools are in Alameda?",
        db_id="toy",
        hint="Alameda refers to City = 'Alameda'",
        gold_sql="SELECT COUNT(*) FROM schools WHERE City = 'Alameda'",
        difficulty="simple",
    )


def wide_schema(n_tables: int = 5, n_columns_per_table: int = 6) -> DatabaseSchema:
    tables = []
    for t in range(n_tables):
        cols = tuple(ColumnDef(f"col{t}_{c}", "TEXT") for c in range(n_columns_per_table))
        tables.append(TableDef(name=f"table{t}", columns=cols))
    return DatabaseSchema(tables=tuple(tables))


@pytest.fixture
def scratch_db(tmp_path: Path) -> Path:
    """A small two-table SQLite database for execution tests."""
    path = tmp_path / "scratch.sqlite"
    conn = sqlite3.connect(path)
    conn.executescript(
        """
        CREATE TABLE t (a INTEGER, b TEXT);
        INSERT INTO t VALUES (1, 'x'), (2, 'y'), (3, 'z'), (2, 'y');
        CREATE TABLE nums (v REAL);
        INSERT INTO nums VALUES (1.5), (2.5), (3.5);
        """
    )
    conn.commit()
    conn.close()
    return path


MINI = FIXTURES / "mini"


def mini_dataset():
    from tiersql.datasets import DatasetSpec, load_dataset

    spec = DatasetSpec.make("mini", MINI / "questions.json", MINI / "databases", "bird")
    queries, registry = load_dataset(spec)
    return spec, queries, registry


def mini_gateway() -> Gateway:
    return Gateway(GatewayMode.REPLAY_STRICT, cache_dir=MINI / "cache")


def mini_labels():
    import json

    from tiersql.model import Tier

    data = json.loads((MINI / "labels.json").read_text())
    return {qid: Tier.from_wire(name) for qid, name in data.items()}
