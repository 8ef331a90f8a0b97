"""Phase I: schema linking.

Builds the linking prompt, parses the model's fenced-JSON table/column
selection, and degrades to the full schema whenever the response is
unusable. Parsing never raises — every failure path is recorded in the
LinkedSchema's provenance instead.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .gateway import ChatRequest, Gateway
from .model import (
    DatabaseSchema,
    LinkedSchema,
    NLQuery,
    Phase,
    Provenance,
    TokenUsage,
    merge_usage,
)
from .prompts import link_prompt
from .schema_text import schema_listing

_FENCED_JSON = re.compile(r"```json\s*(.*?)```", re.DOTALL | re.IGNORECASE)
_FENCED_ANY = re.compile(r"```\s*(\{.*?\})\s*```", re.DOTALL)


@dataclass(frozen=True)
class LinkResponse:
    """Raw completion plus the parsed selection, when one was found."""

    raw_text: str
    parsed: tuple[tuple[str, tuple[str, ...]], ...] | None


def build_link_prompt(schema: DatabaseSchema, q: NLQuery) -> str:
    """Instantiate the linking template with schema listing, question, hint."""
    if not schema.tables:
        raise ValueError("schema must be non-empty")
    return link_prompt(schema_listing(schema), q.question, q.hint)


def _extract_block(text: str) -> dict | None:
    """Last well-formed fenced JSON block wins (draft blocks may precede it)."""
    candidates = _FENCED_JSON.findall(text) or _FENCED_ANY.findall(text)
    for raw in reversed(candidates):
        try:
            data = json.loads(raw)
        except json.JSONDecodeError:
            continue
        if isinstance(data, dict):
            return data
    return None


def parse_link_block(text: str) -> LinkResponse:
    """Pull the table/column selection out of a completion, if present."""
    data = _extract_block(text)
    if data is None:
        return LinkResponse(text, None)
    tables = data.get("tables")
    if not isinstance(tables, list):
        return LinkResponse(text, None)
    entries = []
    for item in tables:
        if not isinstance(item, dict):
            continue
        name = item.get("table")
        columns = item.get("columns")
        if not isinstance(name, str) or not isinstance(columns, list):
            continue
        entries.append((name, tuple(c for c in columns if isinstance(c, str))))
    return LinkResponse(text, tuple(entries))


def parse_link_response(resp: str, schema: DatabaseSchema) -> LinkedSchema:
    """Resolve a completion to a LinkedSchema, falling back to the full schema.

    Only (table, column) pairs that exist in ``schema`` survive;
    case-insensitive matches resolve to the schema's canonical casing. Zero
    surviving entries or an unparseable response degrade to fallback_full.
    """
    parsed = parse_link_block(resp).parsed
    if not parsed:
        return LinkedSchema.from_full(schema)

    entries: list[tuple[str, tuple[str, ...]]] = []
    seen_tables = set()
    for name, columns in parsed:
        table = schema.table(name)
        if table is None or table.name.lower() in seen_tables:
            continue
        kept = []
        seen_cols = set()
        for col_name in columns:
            col = table.column(col_name)
            if col is not None and col.name.lower() not in seen_cols:
                kept.append(col.name)
                seen_cols.add(col.name.lower())
        if kept:
            entries.append((table.name, tuple(kept)))
            seen_tables.add(table.name.lower())
    if not entries:
        return LinkedSchema.from_full(schema)
    return LinkedSchema(entries=tuple(entries), provenance=Provenance.MODEL)


def link(
    q: NLQuery,
    schema: DatabaseSchema,
    gw: Gateway,
    model: str,
    max_tokens: int | None = None,
    retry_on_malformed: bool = False,
) -> tuple[LinkedSchema, TokenUsage]:
    """Run Phase I for one query: prompt, complete, parse, degrade safely.

    ``retry_on_malformed`` issues a single extra completion when the first
    response has no parseable block; off by default since fallback_full is
    already safe.
    """
    prompt = build_link_prompt(schema, q)
    resp = gw.complete(ChatRequest(model=model, prompt=prompt, max_tokens=max_tokens))
    usage = resp.usage.tagged(Phase.LINKING)
    linked = parse_link_response(resp.text, schema)
    if (
        retry_on_malformed
        and linked.provenance is Provenance.FALLBACK_FULL
        and parse_link_block(resp.text).parsed is None
    ):
        # One deterministic nudge; temperature stays 0 so the prompt must differ.
        retry_prompt = prompt + "\n\nReturn only the JSON object wrapped in ```json```."
        retry = gw.complete(ChatRequest(model=model, prompt=retry_prompt, max_tokens=max_tokens))
        usage = merge_usage(usage, retry.usage.tagged(Phase.LINKING))
        linked = parse_link_response(retry.text, schema)
    return linked, usage
