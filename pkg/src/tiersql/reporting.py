"""Metric reports and the cost/accuracy Pareto frontier.

The comparison table follows the usual layout: per-method EX (total and by
difficulty), average weighted token cost, PGR and TEP against the basic and
advanced baselines, oracle agreement, and wall-clock totals. Emitted as
plain text, CSV, JSON, and SVG scatter plots.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .metrics import (
    DegenerateCostError,
    DegenerateGapError,
    MetricReport,
    ReportRow,
    UndefinedBaselineError,
    avg_tokens,
    disagreement,
    ex,
    ex_by_difficulty,
    pgr,
    tep,
    utr,
)
from .model import TIERS, Phase, RunTrace, Tier


@dataclass(frozen=True)
class ParetoPoint:
    method: str
    ex: float
    avg_tokens: float


def pareto_frontier(points: Sequence[ParetoPoint]) -> list[ParetoPoint]:
    """Points not dominated by any other, sorted by token cost ascending.

    A point is dominated when some other point has accuracy >= and tokens <=
    with at least one strict; exact duplicates therefore survive together.
    """
    kept = []
    for p in points:
        dominated = any(
            other is not p
            and other.ex >= p.ex
            and other.avg_tokens <= p.avg_tokens
            and (other.ex > p.ex or other.avg_tokens < p.avg_tokens)
            for other in points
        )
        if not dominated:
            kept.append(p)
    return sorted(kept, key=lambda p: (p.avg_tokens, p.ex, p.method))


def _row(
    method: str,
    traces: Sequence[RunTrace],
    mu: float,
    phases: tuple[Phase, ...],
    ex_b: float | None,
    ex_a: float | None,
    t_b: float | None,
    with_pgr: bool,
) -> ReportRow:
    verdicts = [t.correct for t in traces if t.correct is not None]
    ex_total = ex(verdicts) if verdicts else float("nan")
    tokens = avg_tokens(traces, mu, phases)
    row_pgr = row_tep = None
    if ex_b is not None and ex_a is not None and with_pgr:
        try:
            row_pgr = pgr(ex_total, ex_b, ex_a)
        except DegenerateGapError:
            row_pgr = None
    if ex_b is not None and t_b is not None:
        try:
            row_tep = tep(ex_total, ex_b, tokens, t_b)
        except (DegenerateCostError, UndefinedBaselineError):
            row_tep = None
    agreement = row_utr = None
    labeled = [t for t in traces if t.oracle_label is not None]
    if labeled:
        matrix = disagreement(
            [t.oracle_label for t in labeled], [t.chosen_tier for t in labeled]
        )
        agreement = matrix.agreement
        row_utr = utr(matrix)
    return ReportRow(
        method=method,
        n=len(traces),
        ex_total=ex_total,
        ex_by_difficulty=ex_by_difficulty(traces),
        avg_weighted_tokens=tokens,
        pgr=row_pgr,
        tep=row_tep,
        agreement_with_oracle=agreement,
        utr=row_utr,
        total_wall_clock_ms=sum(t.wall_clock_ms for t in traces),
    )


def build_report(
    traces: Sequence[RunTrace],
    baselines: Mapping[Tier, Sequence[RunTrace]],
    mu: float = 4.0,
    phases: tuple[Phase, ...] = (Phase.GENERATION,),
    method_name: str = "routed",
) -> MetricReport:
    """Comparison table for one routed configuration against the fixed tiers.

    PGR and TEP need the Basic and Advanced baselines; when either is
    missing those columns are omitted with an explicit notice.
    """
    if not traces:
        raise ValueError("build_report needs at least one trace")
    notes: list[str] = []
    ex_b = ex_a = t_b = None
    basic = baselines.get(Tier.BASIC)
    advanced = baselines.get(Tier.ADVANCED)
    if basic:
        verdicts = [t.correct for t in basic if t.correct is not None]
        if verdicts:
            ex_b = ex(verdicts)
            t_b = avg_tokens(basic, mu, phases)
    if advanced:
        verdicts = [t.correct for t in advanced if t.correct is not None]
        if verdicts:
            ex_a = ex(verdicts)
    if ex_b is None or ex_a is None:
        notes.append("PGR/TEP omitted: baseline traces for Basic and Advanced are required")

    rows = []
    for tier in TIERS:
        tier_traces = baselines.get(tier)
        if tier_traces:
            rows.append(
                _row(
                    tier.wire_name,
                    tier_traces,
                    mu,
                    phases,
                    ex_b,
                    ex_a,
                    t_b,
                    with_pgr=False,
                )
            )
    rows.append(_row(method_name, traces, mu, phases, ex_b, ex_a, t_b, with_pgr=True))
    return MetricReport(rows=tuple(rows), mu=mu, phases=phases, notes=tuple(notes))


def _fmt(value: float | None, spec: str = ".4f") -> str:
    if value is None:
        return "-"
    return format(value, spec)


def render_table(report: MetricReport) -> str:
    """Plain-text comparison table; EX shown as percentages."""
    name_width = max(10, *(len(row.method) for row in report.rows))
    headers = ["n", "EX%", "T-bar", "PGR", "TEP", "agree", "UTR", "time_ms"]
    lines = [f"{'method':>{name_width}}  " + "  ".join(f"{h:>10}" for h in headers)]
    for row in report.rows:
        cells = [
            f"{row.method:>{name_width}}",
            f"{row.n:>10}",
            f"{row.ex_total * 100:>10.2f}",
            f"{row.avg_weighted_tokens:>10.2f}",
            f"{_fmt(row.pgr, '.3f'):>10}",
            f"{_fmt(row.tep, '.5f'):>10}",
            f"{_fmt(row.agreement_with_oracle, '.3f'):>10}",
            f"{_fmt(row.utr, '.3f'):>10}",
            f"{row.total_wall_clock_ms:>10}",
        ]
        lines.append("  ".join(cells))
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines)


def _row_dict(row: ReportRow) -> dict:
    return {
        "method": row.method,
        "n": row.n,
        "ex_total": row.ex_total,
        "ex_by_difficulty": row.ex_by_difficulty,
        "avg_weighted_tokens": row.avg_weighted_tokens,
        "pgr": row.pgr,
        "tep": row.tep,
        "agreement_with_oracle": row.agreement_with_oracle,
        "utr": row.utr,
        "total_wall_clock_ms": row.total_wall_clock_ms,
    }


def write_json(report: MetricReport, path: str | Path) -> None:
    payload = {
        "mu": report.mu,
        "phases": [p.value for p in report.phases],
        "rows": [_row_dict(r) for r in report.rows],
        "notes": list(report.notes),
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def write_csv(report: MetricReport, path: str | Path) -> None:
    fields = [
        "method", "n", "ex_total", "avg_weighted_tokens", "pgr", "tep",
        "agreement_with_oracle", "utr", "total_wall_clock_ms",
    ]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in report.rows:
            record = {k: v for k, v in _row_dict(row).items() if k in fields}
            writer.writerow(record)


def report_points(report: MetricReport) -> list[ParetoPoint]:
    return [
        ParetoPoint(row.method, row.ex_total, row.avg_weighted_tokens)
        for row in report.rows
    ]


def plot_frontier(points: Sequence[ParetoPoint], path: str | Path) -> None:
    """EX vs average token cost scatter with the Pareto frontier, as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    frontier = pareto_frontier(points)
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.scatter(
        [p.avg_tokens for p in points],
        [p.ex * 100 for p in points],
        color="steelblue",
        zorder=3,
    )
    for p in points:
        ax.annotate(p.method, (p.avg_tokens, p.ex * 100), xytext=(4, 4),
                    textcoords="offset points", fontsize=8)
    ax.plot(
        [p.avg_tokens for p in frontier],
        [p.ex * 100 for p in frontier],
        color="purple",
        marker="o",
        label="Pareto frontier",
        zorder=4,
    )
    ax.set_xlabel("average weighted tokens per query")
    ax.set_ylabel("execution accuracy (%)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
