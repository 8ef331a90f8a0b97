"""Phase III: the three tiered SQL generators.

* basic: one direct completion.
* intermediate: divide the question into sub-questions, conquer each,
  assemble the final SQL, then one refinement round against the database.
* advanced: same skeleton, plus schema-grounded example synthesis injected
  into every conquer prompt.

Every step contributes a StepRecord so a GenerationResult's usage is always
the exact component-wise sum of its steps.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

from .execution import Executor
from .gateway import ChatRequest, ChatResponse, Gateway, canonical_key
from .model import (
    DatabaseSchema,
    LinkedSchema,
    NLQuery,
    Phase,
    Tier,
    TokenUsage,
)
from .prompts import (
    assemble_prompt,
    basic_prompt,
    conquer_prompt,
    divide_prompt,
    refine_prompt,
    synthesize_prompt,
)
from .schema_text import linked_ddl

MAX_SUBQUESTIONS = 8


class EmptySqlError(RuntimeError):
    """A completion produced no SQL text at all."""


@dataclass(frozen=True)
class SubQuestion:
    index: int  # contiguous from 1
    text: str


@dataclass(frozen=True)
class SynthesizedExample:
    question: str
    sql: str


@dataclass(frozen=True)
class StepRecord:
    """Audit record for one gateway call inside a generation."""

    name: str
    digest: str
    usage: TokenUsage
    flags: tuple[str, ...] = ()
    usage_estimated: bool = False


@dataclass(frozen=True)
class GenerationResult:
    sql: str
    usage: TokenUsage  # phase=generation, all steps summed
    steps: tuple[StepRecord, ...]

    @property
    def usage_estimated(self) -> bool:
        return any(s.usage_estimated for s in self.steps)


@dataclass(frozen=True)
class PipelineConfig:
    model: str
    synthesis_k: int = 3
    refine_rounds: int = 1
    max_tokens: int | None = None
    synthesis_per_subtask: bool = False


class ExtractedSql(NamedTuple):
    sql: str
    fenced: bool


_SQL_FENCE = re.compile(r"```sql\s*(.*?)```", re.DOTALL | re.IGNORECASE)
_SUBQUESTION_LINE = re.compile(r"Sub-question\s*\d+\s*:\s*<<(.+?)>>")
_PAIR_TOKEN = re.compile(r'"(Question|SQL)"\s*:\s*"(.*?)"\s*(?=\n|$)', re.DOTALL)


def extract_sql(completion: str) -> ExtractedSql:
    """Contents of the last ```sql fenced block; whole text if unfenced."""
    blocks = _SQL_FENCE.findall(completion)
    if blocks:
        sql = blocks[-1].strip()
        fenced = True
    else:
        sql = completion.strip()
        fenced = False
    if not sql:
        raise EmptySqlError("completion contained no SQL")
    return ExtractedSql(sql, fenced)


def parse_subquestions(completion: str, original_question: str) -> tuple[list[SubQuestion], bool]:
    """Sub-questions in order of appearance, reindexed contiguously, capped.

    Returns (subs, parsed); when nothing parses, the original question
    becomes the single sub-question and parsed is False.
    """
    texts = []
    for line in completion.splitlines():
        m = _SUBQUESTION_LINE.search(line)
        if m and m.group(1).strip():
            texts.append(m.group(1).strip())
    texts = texts[:MAX_SUBQUESTIONS]
    if not texts:
        return [SubQuestion(1, original_question)], False
    return [SubQuestion(i + 1, t) for i, t in enumerate(texts)], True


def parse_synthesized_examples(completion: str, k: int) -> list[SynthesizedExample]:
    """Alternating "Question"/"SQL" pairs, order preserved, at most k."""
    examples: list[SynthesizedExample] = []
    pending_question: str | None = None
    for m in _PAIR_TOKEN.finditer(completion):
        kind, value = m.group(1), m.group(2).strip()
        if kind == "Question":
            pending_question = value or None
        elif pending_question and value:
            examples.append(SynthesizedExample(pending_question, value))
            pending_question = None
            if len(examples) == k:
                break
    return examples


def render_examples(examples: list[SynthesizedExample]) -> str:
    parts = [f'"Question": "{ex.question}"\n"SQL": "{ex.sql}"' for ex in examples]
    return "\n\n".join(parts)


def render_subs(pairs: list[tuple[SubQuestion, str]]) -> str:
    parts = [f"Sub-question {sub.index}: {sub.text}\nSQL: {sql}" for sub, sql in pairs]
    return "\n\n".join(parts)


def _call(gw: Gateway, config: PipelineConfig, prompt: str) -> tuple[ChatResponse, str]:
    req = ChatRequest(model=config.model, prompt=prompt, max_tokens=config.max_tokens)
    return gw.complete(req), canonical_key(req)


def _step(name: str, digest: str, resp: ChatResponse, *flags: str) -> StepRecord:
    return StepRecord(name, digest, resp.usage, tuple(flags), resp.usage_estimated)


def _sum_steps(steps: list[StepRecord]) -> TokenUsage:
    prompt = sum(s.usage.prompt_tokens for s in steps)
    completion = sum(s.usage.completion_tokens for s in steps)
    return TokenUsage(prompt, completion, Phase.GENERATION)


def generate_basic(
    q: NLQuery,
    linked: LinkedSchema,
    schema: DatabaseSchema,
    gw: Gateway,
    config: PipelineConfig,
) -> GenerationResult:
    """Direct single-completion generation: the cheapest tier."""
    prompt = basic_prompt(linked_ddl(linked, schema), q.question, q.hint)
    resp, digest = _call(gw, config, prompt)
    extracted = extract_sql(resp.text)
    steps = [_step("basic", digest, resp, *(() if extracted.fenced else ("unfenced",)))]
    return GenerationResult(extracted.sql, _sum_steps(steps), tuple(steps))


def divide(
    q: NLQuery,
    linked: LinkedSchema,
    schema: DatabaseSchema,
    gw: Gateway,
    config: PipelineConfig,
) -> tuple[list[SubQuestion], StepRecord]:
    prompt = divide_prompt(linked_ddl(linked, schema), q.question, q.hint)
    resp, digest = _call(gw, config, prompt)
    subs, parsed = parse_subquestions(resp.text, q.question)
    return subs, _step("divide", digest, resp, *(() if parsed else ("no_subquestions",)))


def conquer(
    sub: SubQuestion,
    q: NLQuery,
    linked: LinkedSchema,
    schema: DatabaseSchema,
    examples: list[SynthesizedExample],
    gw: Gateway,
    config: PipelineConfig,
) -> tuple[str, StepRecord]:
    """Solve one sub-question; the examples section is empty for the
    intermediate tier."""
    prompt = conquer_prompt(
        linked_ddl(linked, schema), render_examples(examples), sub.text, q.hint
    )
    resp, digest = _call(gw, config, prompt)
    extracted = extract_sql(resp.text)
    name = f"conquer[{sub.index}]"
    return extracted.sql, _step(name, digest, resp, *(() if extracted.fenced else ("unfenced",)))


def assemble(
    q: NLQuery,
    linked: LinkedSchema,
    schema: DatabaseSchema,
    subs_with_sql: list[tuple[SubQuestion, str]],
    gw: Gateway,
    config: PipelineConfig,
) -> tuple[str, StepRecord]:
    if not subs_with_sql:
        raise ValueError("assemble requires at least one (sub-question, sql) pair")
    prompt = assemble_prompt(
        linked_ddl(linked, schema), q.question, q.hint, render_subs(subs_with_sql)
    )
    resp, digest = _call(gw, config, prompt)
    extracted = extract_sql(resp.text)
    return extracted.sql, _step("assemble", digest, resp, *(() if extracted.fenced else ("unfenced",)))


def synthesize_examples(
    linked: LinkedSchema,
    schema: DatabaseSchema,
    k: int,
    gw: Gateway,
    config: PipelineConfig,
) -> tuple[list[SynthesizedExample], StepRecord]:
    """Schema-grounded few-shot pairs; fewer than k is tolerated and flagged."""
    if k < 1:
        raise ValueError("k must be >= 1")
    prompt = synthesize_prompt(linked_ddl(linked, schema), k)
    resp, digest = _call(gw, config, prompt)
    examples = parse_synthesized_examples(resp.text, k)
    flags = []
    if not examples:
        flags.append("synthesis_empty")
    elif len(examples) < k:
        flags.append("synthesis_short")
    return examples, _step("synthesize", digest, resp, *flags)


def refine(
    sql: str,
    q: NLQuery,
    linked: LinkedSchema,
    schema: DatabaseSchema,
    executor: Executor,
    gw: Gateway,
    config: PipelineConfig,
) -> tuple[str, list[StepRecord]]:
    """Correct non-executable or empty-result SQL, best effort.

    Executable SQL with at least one row comes back unchanged at zero cost.
    Otherwise each round issues one corrective completion; the last
    completion's SQL is returned even if it still fails. Never raises on bad
    SQL.
    """
    steps: list[StepRecord] = []
    current = sql
    for _ in range(max(config.refine_rounds, 0)):
        outcome = executor.execute(current)
        if outcome.ok and outcome.rows is not None and outcome.rows.rows:
            break
        reason = "empty result" if outcome.ok else (outcome.message or "execution error")
        prompt = refine_prompt(linked_ddl(linked, schema), q.question, q.hint, current, reason)
        resp, digest = _call(gw, config, prompt)
        flags = ["refined"]
        try:
            extracted = extract_sql(resp.text)
            current = extracted.sql
            if not extracted.fenced:
                flags.append("unfenced")
        except EmptySqlError:
            flags.append("refine_empty")
        steps.append(_step(f"refine[{len(steps) + 1}]", digest, resp, *flags))
    return current, steps


def _divide_and_conquer(
    q: NLQuery,
    linked: LinkedSchema,
    schema: DatabaseSchema,
    executor: Executor,
    gw: Gateway,
    config: PipelineConfig,
    examples: list[SynthesizedExample],
    steps: list[StepRecord],
) -> str:
    subs, divide_step = divide(q, linked, schema, gw, config)
    steps.append(divide_step)
    pairs: list[tuple[SubQuestion, str]] = []
    for sub in subs:
        sub_examples = examples
        if config.synthesis_per_subtask and examples:
            sub_examples, synth_step = synthesize_examples(
                linked, schema, config.synthesis_k, gw, config
            )
            steps.append(synth_step)
        sql, conquer_step = conquer(sub, q, linked, schema, sub_examples, gw, config)
        steps.append(conquer_step)
        pairs.append((sub, sql))
    final_sql, assemble_step = assemble(q, linked, schema, pairs, gw, config)
    steps.append(assemble_step)
    final_sql, refine_steps = refine(final_sql, q, linked, schema, executor, gw, config)
    steps.extend(refine_steps)
    return final_sql


def generate_intermediate(
    q: NLQuery,
    linked: LinkedSchema,
    schema: DatabaseSchema,
    db_path: str | Path,
    gw: Gateway,
    config: PipelineConfig,
    executor: Executor | None = None,
) -> GenerationResult:
    """Divide, conquer each sub-question, assemble, refine."""
    executor = executor or Executor(db_path)
    steps: list[StepRecord] = []
    sql = _divide_and_conquer(q, linked, schema, executor, gw, config, [], steps)
    return GenerationResult(sql, _sum_steps(steps), tuple(steps))


def generate_advanced(
    q: NLQuery,
    linked: LinkedSchema,
    schema: DatabaseSchema,
    db_path: str | Path,
    gw: Gateway,
    config: PipelineConfig,
    executor: Executor | None = None,
) -> GenerationResult:
    """The intermediate skeleton plus synthesized examples in every conquer
    prompt. Empty synthesis degrades to intermediate behavior for the query."""
    if config.synthesis_k < 1:
        raise ValueError("synthesis_k must be >= 1 for the advanced tier")
    executor = executor or Executor(db_path)
    steps: list[StepRecord] = []
    examples, synth_step = synthesize_examples(linked, schema, config.synthesis_k, gw, config)
    steps.append(synth_step)
    sql = _divide_and_conquer(q, linked, schema, executor, gw, config, examples, steps)
    return GenerationResult(sql, _sum_steps(steps), tuple(steps))


class TieredPipelines:
    """Uniform front-end the router hands queries to: one generator per tier."""

    def __init__(self, gw: Gateway, config: PipelineConfig, timeout_ms: int | None = None):
        self.gw = gw
        self.config = config
        self.timeout_ms = timeout_ms

    def _executor(self, db_path: str | Path) -> Executor:
        if self.timeout_ms is None:
            return Executor(db_path)
        return Executor(db_path, timeout_ms=self.timeout_ms)

    def generate(
        self,
        tier: Tier,
        q: NLQuery,
        linked: LinkedSchema,
        schema: DatabaseSchema,
        db_path: str | Path,
    ) -> GenerationResult:
        if tier is Tier.BASIC:
            return generate_basic(q, linked, schema, self.gw, self.config)
        executor = self._executor(db_path)
        if tier is Tier.INTERMEDIATE:
            return generate_intermediate(
                q, linked, schema, db_path, self.gw, self.config, executor
            )
        return generate_advanced(q, linked, schema, db_path, self.gw, self.config, executor)
