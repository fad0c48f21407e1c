from __future__ import annotations

from fractions import Fraction

import pytest

from bellsched.metrics import (
    PairingError,
    RunRecord,
    aggregate,
    emit_report,
    paired_comparison,
)


def _record(agent_id, pi, *, comm="vague", feedback="binary", design="tpp",
            mode="conversation", turns=5, solver=3, termination="agent_ended"):
    pi = Fraction(pi) if not isinstance(pi, Fraction) else pi
    return RunRecord(
        agent_id=agent_id,
        utility_id=agent_id.rsplit("-", 2)[0],
        comm_style=comm,
        feedback_style=feedback,
        design=design,
        mode=mode,
        model="scripted",
        pi=pi,
        success=pi == 1,
        decision_turns=turns,
        solver_calls=solver,
        termination=termination,
    )


def test_aggregate_simple_means():
    records = [
        _record("a-v-b", 1),
        _record("b-v-b", 1),
        _record("c-v-b", Fraction(1, 2)),
        _record("d-v-b", Fraction(1, 2)),
    ]
    (report,) = [r for r in aggregate(records) if not r.group]
    assert report.n == 4
    assert report.avg_score == Fraction(3, 4)
    assert report.success_rate == Fraction(1, 2)
    cells = emit_report([report]).splitlines()[1].split(",")
    assert cells[2] == "0.75"
    assert cells[3] == "50.0%"


def test_aggregate_reproduces_published_all_row():
    # 284 maximal conversations plus 152 at 0.8 mirror the published pooled row
    records = [_record(f"s{i}", 1) for i in range(284)]
    records += [_record(f"p{i}", Fraction(8, 10)) for i in range(152)]
    (report,) = aggregate(records)
    line = emit_report([report]).splitlines()[1]
    cells = line.split(",")
    assert cells[0] == "All"
    assert cells[1] == "436"
    assert cells[2] == "0.93"
    assert cells[3] == "65.1%"


def test_group_partition_counts():
    records = [
        _record("a", 1, comm="vague"),
        _record("b", 1, comm="vague"),
        _record("c", 0, comm="precise"),
    ]
    reports = aggregate(records, ("comm_style",))
    by_label = {r.label: r for r in reports}
    assert by_label["comm_style=precise"].n == 1
    assert by_label["comm_style=vague"].n == 2
    assert by_label["All"].n == 3
    assert sum(r.n for r in reports if r.group) == by_label["All"].n


def test_union_mean_is_weighted_mean_of_groups():
    records = [
        _record("a", Fraction(1, 4), feedback="binary"),
        _record("b", Fraction(3, 4), feedback="binary"),
        _record("c", 1, feedback="rich"),
    ]
    reports = aggregate(records, ("feedback_style",))
    groups = [r for r in reports if r.group]
    total = sum(r.avg_score * r.n for r in groups) / sum(r.n for r in groups)
    all_row = next(r for r in reports if not r.group)
    assert all_row.avg_score == total
    # success two ways
    assert all_row.success_rate == Fraction(
        sum(1 for rec in records if rec.success), len(records)
    )


def test_errored_records_excluded_from_means():
    records = [
        _record("a", 1),
        _record("b", 0, termination="error"),
    ]
    (report,) = aggregate(records)
    assert report.n == 1
    assert report.n_errored == 1
    assert report.avg_score == 1
    line = emit_report([report]).splitlines()[1]
    assert line.endswith(",1")


def test_all_errored_group_has_no_rates():
    records = [_record("a", 0, termination="error")]
    (report,) = aggregate(records)
    assert report.n == 0
    assert report.avg_score is None
    cells = emit_report([report]).splitlines()[1].split(",")
    assert cells[1] == "0" and cells[2] == ""


def test_paired_identical_sets():
    a = [_record("x", Fraction(1, 2)), _record("y", 1)]
    result = paired_comparison(a, a)
    assert result["mean_diff"] == 0
    assert result["sign_test_p"] == 1
    assert result["n_ties"] == 2


def test_paired_uniform_improvement():
    a = [_record(f"id{i}", Fraction(6, 10)) for i in range(20)]
    b = [_record(f"id{i}", Fraction(5, 10)) for i in range(20)]
    result = paired_comparison(a, b)
    assert result["mean_diff"] == Fraction(1, 10)
    assert result["sign_test_p"] == Fraction(1, 2**20)
    assert result["n_positive"] == 20


def test_paired_mixed_signs():
    a = [_record("p", 1), _record("q", 0), _record("r", 1), _record("s", 1)]
    b = [_record("p", 0), _record("q", 1), _record("r", 0), _record("s", 1)]
    result = paired_comparison(a, b)
    # 2 positive of 3 informative: p = (C(3,2)+C(3,3)) / 8 = 1/2
    assert result["sign_test_p"] == Fraction(1, 2)


def test_paired_disjoint_ids_error():
    a = [_record("only-a", 1)]
    b = [_record("only-b", 1)]
    with pytest.raises(PairingError, match="only-a"):
        paired_comparison(a, b)


def test_unknown_metric_and_group():
    with pytest.raises(ValueError, match="unknown metric"):
        paired_comparison([], [], metric="vibes")
    with pytest.raises(ValueError, match="cannot group by"):
        aggregate([], ("vibes",))


def test_emit_report_empty_and_markdown():
    assert emit_report([]) == (
        "group,n,avg_score,success_rate,avg_turns,avg_solver_calls,n_errored\n"
    )
    records = []
    for comm in ("vague", "precise"):
        for feedback in ("binary", "rich"):
            records.append(_record(f"{comm}-{feedback}", 1, comm=comm, feedback=feedback))
    reports = aggregate(records, ("comm_style", "feedback_style"))
    md = emit_report(reports, "markdown")
    lines = md.strip().splitlines()
    assert len(lines) == 2 + 4 + 1  # header, divider, 4 groups, All
    assert lines[0].startswith("| group | n |")
    assert lines[-1].startswith("| All |")


def test_report_determinism():
    records = [_record("a", 1), _record("b", Fraction(1, 3))]
    first = emit_report(aggregate(records, ("comm_style",)))
    second = emit_report(aggregate(list(records), ("comm_style",)))
    assert first == second
