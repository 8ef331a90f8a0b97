"""Renderers that turn schema objects into prompt text.

Two flavors: a descriptive listing for the linking prompt (types,
descriptions, up to 3 sample values per column) and CREATE TABLE statements
for the generation prompts.
"""

from __future__ import annotations

from .model import ColumnDef, DatabaseSchema, LinkedSchema, TableDef

SAMPLE_VALUE_CAP = 3


def _column_notes(col: ColumnDef) -> str:
    notes = []
    if col.description:
        notes.append(col.description)
    if col.sample_values:
        shown = ", ".join(col.sample_values[:SAMPLE_VALUE_CAP])
        notes.append(f"examples: {shown}")
    return "; ".join(notes)


def schema_listing(schema: DatabaseSchema) -> str:
    """Descriptive per-table listing used as the linking prompt's schema_str."""
    blocks = []
    for table in schema.tables:
        lines = [f"Table: {table.name}", "Columns:"]
        for col in table.columns:
            entry = f"  - {col.name} ({col.decl_type})" if col.decl_type else f"  - {col.name}"
            notes = _column_notes(col)
            if notes:
                entry += f": {notes}"
            lines.append(entry)
        if table.primary_key:
            lines.append(f"Primary key: {', '.join(table.primary_key)}")
        for local, ftable, fcol in table.foreign_keys:
            lines.append(f"Foreign key: {table.name}.{local} -> {ftable}.{fcol}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


def _create_table(table: TableDef, columns: tuple[str, ...]) -> str:
    kept = {c.lower() for c in columns}
    entries: list[tuple[str, str]] = []  # (declaration, inline comment)
    for col in table.columns:
        if col.name.lower() not in kept:
            continue
        entries.append((f"    {col.name} {col.decl_type}".rstrip(), _column_notes(col)))
    pk = [c for c in table.primary_key if c.lower() in kept]
    if pk:
        entries.append((f"    PRIMARY KEY ({', '.join(pk)})", ""))
    for local, ftable, fcol in table.foreign_keys:
        if local.lower() in kept:
            entries.append((f"    FOREIGN KEY ({local}) REFERENCES {ftable}({fcol})", ""))
    lines = [f"CREATE TABLE {table.name} ("]
    for i, (decl, comment) in enumerate(entries):
        comma = "," if i < len(entries) - 1 else ""
        lines.append(decl + comma + (f" -- {comment}" if comment else ""))
    lines.append(");")
    return "\n".join(lines)


def linked_ddl(linked: LinkedSchema, schema: DatabaseSchema) -> str:
    """CREATE TABLE statements restricted to the linked tables and columns."""
    statements = []
    for table_name, columns in linked.entries:
        table = schema.table(table_name)
        if table is None:  # construction guarantees this never happens
            continue
        statements.append(_create_table(table, columns))
    return "\n".join(statements)
