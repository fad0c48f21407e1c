"""Aggregation of conversation outcomes into evaluation tables.

Means are computed with exact rational arithmetic and only rendered to fixed
precision at emission time (scores to two decimals, turns to one, success
rates to one decimal percent). Paired design comparisons use a one-sided
exact binomial sign test with ties dropped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from pathlib import Path
from typing import Sequence

from .fmt import parse_rational

GROUP_KEYS = ("design", "mode", "comm_style", "feedback_style", "model")

ERROR_TERMINATION = "error"


class PairingError(ValueError):
    """Two record sets cannot be paired by agent id."""


@dataclass(frozen=True)
class RunRecord:
    agent_id: str
    utility_id: str
    comm_style: str
    feedback_style: str
    design: str
    mode: str
    model: str
    pi: Fraction
    success: bool
    decision_turns: int
    solver_calls: int
    termination: str

    @property
    def errored(self) -> bool:
        return self.termination == ERROR_TERMINATION


def records_from_run(run_dir: str | Path) -> list[RunRecord]:
    """Read one batch run's manifest into scoring records."""
    manifest = json.loads((Path(run_dir) / "run.json").read_text("utf-8"))
    records = []
    for doc in manifest["outcomes"]:
        u_star = parse_rational(doc["u_star"])
        pi = parse_rational(doc["best_utility"]) / u_star if u_star else Fraction(0)
        records.append(
            RunRecord(
                agent_id=doc["agent_id"],
                utility_id=doc["utility_id"],
                comm_style=doc["comm_style"],
                feedback_style=doc["feedback_style"],
                design=manifest["design"],
                mode=manifest["mode"],
                model=manifest.get("model", ""),
                pi=pi,
                success=bool(doc["success"]),
                decision_turns=int(doc["decision_turns"]),
                solver_calls=int(doc["solver_calls"]),
                termination=doc["termination"],
            )
        )
    return records


@dataclass(frozen=True)
class AggregateReport:
    group: tuple[tuple[str, str], ...]  # ((key, value), ...) or () for "All"
    n: int
    n_errored: int
    avg_score: Fraction | None
    success_rate: Fraction | None
    avg_turns: Fraction | None
    avg_solver_calls: Fraction | None

    @property
    def label(self) -> str:
        if not self.group:
            return "All"
        return "; ".join(f"{k}={v}" for k, v in self.group)


def _summarize(
    group: tuple[tuple[str, str], ...], records: Sequence[RunRecord]
) -> AggregateReport:
    scored = [r for r in records if not r.errored]
    n = len(scored)
    if n == 0:
        return AggregateReport(group, 0, len(records), None, None, None, None)
    return AggregateReport(
        group=group,
        n=n,
        n_errored=len(records) - n,
        avg_score=sum((r.pi for r in scored), Fraction(0)) / n,
        success_rate=Fraction(sum(1 for r in scored if r.success), n),
        avg_turns=Fraction(sum(r.decision_turns for r in scored), n),
        avg_solver_calls=Fraction(sum(r.solver_calls for r in scored), n),
    )


def aggregate(
    records: Sequence[RunRecord], group_by: Sequence[str] = ()
) -> list[AggregateReport]:
    """Per-group summaries plus a pooled "All" row (always last)."""
    for key in group_by:
        if key not in GROUP_KEYS:
            raise ValueError(f"cannot group by {key!r}; options: {', '.join(GROUP_KEYS)}")
    if not group_by:
        return [_summarize((), list(records))]
    groups: dict[tuple[tuple[str, str], ...], list[RunRecord]] = {}
    for record in records:
        key = tuple((k, getattr(record, k)) for k in group_by)
        groups.setdefault(key, []).append(record)
    reports = [_summarize(key, rows) for key, rows in sorted(groups.items())]
    reports.append(_summarize((), list(records)))
    return reports


_METRICS = {
    "pi": lambda r: r.pi,
    "success": lambda r: Fraction(1 if r.success else 0),
    "decision_turns": lambda r: Fraction(r.decision_turns),
    "solver_calls": lambda r: Fraction(r.solver_calls),
}


def paired_comparison(
    records_a: Sequence[RunRecord],
    records_b: Sequence[RunRecord],
    metric: str = "pi",
) -> dict:
    """One-sided exact binomial sign test of A > B, paired by decision agent.

    Ties are dropped; the p-value is the exact upper tail of Binomial(n, 1/2)
    at the number of positive differences.
    """
    if metric not in _METRICS:
        raise ValueError(f"unknown metric {metric!r}; options: {', '.join(_METRICS)}")
    get = _METRICS[metric]
    by_a = {r.agent_id: r for r in records_a}
    by_b = {r.agent_id: r for r in records_b}
    if set(by_a) != set(by_b):
        diff = sorted(set(by_a) ^ set(by_b))
        raise PairingError(f"record sets differ on agent ids: {diff}")
    diffs = [get(by_a[aid]) - get(by_b[aid]) for aid in sorted(by_a)]
    informative = [d for d in diffs if d != 0]
    n = len(informative)
    positive = sum(1 for d in informative if d > 0)
    if n == 0:
        p_value = Fraction(1)
    else:
        p_value = Fraction(sum(comb(n, i) for i in range(positive, n + 1)), 2**n)
    mean_diff = sum(diffs, Fraction(0)) / len(diffs) if diffs else Fraction(0)
    return {
        "metric": metric,
        "n_pairs": len(diffs),
        "n_ties": len(diffs) - n,
        "n_positive": positive,
        "mean_diff": mean_diff,
        "sign_test_p": p_value,
    }


def _round_str(value: Fraction, digits: int) -> str:
    """Fixed-precision decimal rendering with exact half-up rounding."""
    scaled = value * 10**digits
    rounded = (scaled.numerator * 2 + scaled.denominator) // (2 * scaled.denominator)
    sign = "-" if rounded < 0 else ""
    text = str(abs(rounded)).rjust(digits + 1, "0")
    if digits == 0:
        return sign + text
    return f"{sign}{text[:-digits]}.{text[-digits:]}"


def _report_cells(report: AggregateReport) -> list[str]:
    if report.n == 0:
        return [report.label, "0", "", "", "", "", str(report.n_errored)]
    return [
        report.label,
        str(report.n),
        _round_str(report.avg_score, 2),
        _round_str(report.success_rate * 100, 1) + "%",
        _round_str(report.avg_turns, 1),
        _round_str(report.avg_solver_calls, 2),
        str(report.n_errored),
    ]


_COLUMNS = ["group", "n", "avg_score", "success_rate", "avg_turns", "avg_solver_calls", "n_errored"]


def emit_report(reports: Sequence[AggregateReport], format: str = "csv") -> str:
    """Deterministic CSV or markdown rendering of aggregate reports."""
    if format == "csv":
        lines = [",".join(_COLUMNS)]
        for report in reports:
            cells = _report_cells(report)
            lines.append(",".join(f'"{c}"' if "," in c else c for c in cells))
        return "\n".join(lines) + "\n"
    if format == "markdown" or format == "md":
        lines = [
            "| " + " | ".join(_COLUMNS) + " |",
            "|" + "|".join([" --- "] * len(_COLUMNS)) + "|",
        ]
        for report in reports:
            lines.append("| " + " | ".join(_report_cells(report)) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {format!r}")
