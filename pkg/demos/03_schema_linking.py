"""Phase I in isolation: the linking prompt, response parsing, and the safe
fallback when a model's answer is unusable.

A scripted in-process provider stands in for the model, so this runs
offline. Run from the repository root:  python demos/03_schema_linking.py
"""

from tiersql.datasets import introspect_schema
from tiersql.gateway import ChatResponse, Gateway, GatewayMode
from tiersql.linking import build_link_prompt, link, parse_link_response
from tiersql.model import NLQuery, TokenUsage

schema = introspect_schema("tests/fixtures/mini/databases/minimart/minimart.sqlite")
query = NLQuery(
    id="demo",
    question="How many orders did customers from Lyon place?",
    db_id="minimart",
    hint="Lyon is a city",
)

prompt = build_link_prompt(schema, query)
print("=== the first 25 lines of the linking prompt ===")
print("\n".join(prompt.splitlines()[:25]))
print("...\n")

# A well-formed response: the last fenced JSON block wins, names are
# resolved case-insensitively to the schema's canonical casing.
good = """The relevant tables are orders and customers.
```json
{"tables": [
  {"table": "ORDERS", "columns": ["customer_id"]},
  {"table": "customers", "columns": ["id", "city"]}
]}
```"""
linked = parse_link_response(good, schema)
print(f"parsed selection ({linked.provenance.value}): {linked.entries}")
reduction = 1 - linked.n_columns / schema.column_count
print(f"column reduction: {reduction:.0%} of {schema.column_count} columns pruned\n")

# Anything unusable degrades to the full schema rather than failing the
# query; provenance records that the fallback happened.
for label, bad in [
    ("prose without a block", "I think you need the orders table."),
    ("nonexistent names only", '```json\n{"tables":[{"table":"ghosts","columns":["x"]}]}\n```'),
]:
    fallback = parse_link_response(bad, schema)
    print(f"{label} -> provenance={fallback.provenance.value}, "
          f"{fallback.n_tables} tables / {fallback.n_columns} columns kept")

# The full phase through the gateway, with a stub provider standing in for
# the network.
def stub(req):
    return ChatResponse(good, TokenUsage(len(req.prompt) // 4, len(good) // 4))

gw = Gateway(GatewayMode.PASSTHROUGH, provider=stub)
linked, usage = link(query, schema, gw, model="demo-model")
print(f"\nlink() phase usage: {usage.prompt_tokens} prompt / "
      f"{usage.completion_tokens} completion tokens ({usage.phase.value})")
