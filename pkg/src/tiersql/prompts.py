"""Prompt template resources and placeholder substitution.

Templates live under ``tiersql/templates`` and are filled by literal
placeholder replacement, never ``str.format`` — several templates contain
braces of their own (e.g. the JSON shape in the linking instructions).
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    """Return the raw text of a bundled template (e.g. ``"basic"``)."""
    return (
        resources.files("tiersql.templates").joinpath(f"{name}.txt").read_text("utf-8")
    )


def fill(template: str, **slots: str) -> str:
    """Replace ``{slot}`` markers with values, left-to-right, literally."""
    out = template
    for key, value in slots.items():
        out = out.replace("{" + key + "}", value)
    return out


# The Divide template ships a worked example whose slots the source template
# leaves open; this exemplar fills them at instantiation time.
DIVIDE_EXAMPLE_SCHEMA = """\
CREATE TABLE employees (
    id INTEGER, -- examples: 1, 2, 3
    name TEXT, -- examples: 'Ava', 'Ben'
    department_id INTEGER, -- examples: 10, 20
    salary REAL, -- examples: 52000.0, 61000.0
    PRIMARY KEY (id)
);
CREATE TABLE departments (
    id INTEGER, -- examples: 10, 20
    name TEXT, -- examples: 'Sales', 'Engineering'
    PRIMARY KEY (id)
);"""

DIVIDE_EXAMPLE_QUESTION = (
    "Which department has the highest average salary among employees hired "
    "in departments with more than five employees?"
)

DIVIDE_EXAMPLE_SUBQUESTIONS = (
    "Which departments have more than five employees?",
    "What is the average salary of employees per department?",
    "Among those departments, which one has the highest average salary?",
)


def divide_prompt(schema: str, query: str, evidence: str) -> str:
    ex1, ex2, ex3 = DIVIDE_EXAMPLE_SUBQUESTIONS
    return fill(
        load_template("divide"),
        **{
            "example_database_schema": DIVIDE_EXAMPLE_SCHEMA,
            "example_question": DIVIDE_EXAMPLE_QUESTION,
            "sub question 1": ex1,
            "sub question 2": ex2,
            "sub question 3": ex3,
            "schema": schema,
            "query": query,
            "evidence": evidence,
        },
    )


def link_prompt(schema_str: str, query: str, evidence: str) -> str:
    return fill(load_template("link"), schema_str=schema_str, query=query, evidence=evidence)


def basic_prompt(schema: str, query: str, evidence: str) -> str:
    return fill(load_template("basic"), schema=schema, evidence=evidence, query=query)


def conquer_prompt(schema: str, examples: str, query: str, evidence: str) -> str:
    return fill(
        load_template("conquer"),
        schema=schema,
        examples=examples,
        query=query,
        evidence=evidence,
    )


def assemble_prompt(schema: str, query: str, evidence: str, subs: str) -> str:
    return fill(load_template("assemble"), schema=schema, query=query, evidence=evidence, subs=subs)


def synthesize_prompt(schema: str, k: int) -> str:
    return fill(load_template("synthesize"), k=str(k), TARGET_DATABASE_SCHEMA=schema)


def refine_prompt(schema: str, query: str, evidence: str, failed_sql: str, failure_reason: str) -> str:
    return fill(
        load_template("refine"),
        schema=schema,
        query=query,
        evidence=evidence,
        failed_sql=failed_sql,
        failure_reason=failure_reason,
    )
