from __future__ import annotations

import random
from fractions import Fraction

import pytest

from bellsched.domain import (
    SLOTS,
    DataValidationError,
    InfeasibleSpaceError,
    Schedule,
    compute_features,
    enumerate_schedules,
    feature_table,
    load_school_data,
    slot_for_label,
)


def test_canonical_data(data):
    assert len(data) == 10
    assert sum(r.enrollment for r in data) == 5857
    galileo = next(r for r in data if r.name == "Galileo HS")
    assert galileo.enrollment == 1851
    assert galileo.current_start == 480
    assert [r.id for r in data] == list(range(1, 11))


def test_slots_invariants():
    assert [s.minutes for s in SLOTS] == [470, 520, 570]
    assert [s.label for s in SLOTS] == ["7:50 AM", "8:40 AM", "9:30 AM"]
    assert slot_for_label(" 8:40 am ").index == 2
    assert slot_for_label("8:15 AM") is None


def test_load_rejects_empty_stream():
    with pytest.raises(DataValidationError, match="no records"):
        load_school_data(b"id,name,grade,enrollment,current_start_minutes\n")


def test_load_rejects_bad_rows():
    header = "id,name,grade,enrollment,current_start_minutes\n"
    with pytest.raises(DataValidationError, match="malformed row 2"):
        load_school_data(header + "x,School,PK,10,480\n")
    with pytest.raises(DataValidationError, match="duplicate school id"):
        load_school_data(header + "1,A,PK,10,480\n1,B,PK,10,480\n")
    with pytest.raises(DataValidationError, match="non-positive enrollment"):
        load_school_data(header + "1,A,PK,0,480\n")
    with pytest.raises(DataValidationError, match="contiguous"):
        load_school_data(header + "1,A,PK,10,480\n3,B,PK,10,480\n")


def test_features_default(data, default_schedule):
    f = compute_features(default_schedule, data)
    assert f.peak_load == 2565
    assert f.avg_deviation == Fraction(17, 2)
    assert f.deviation_sum == 85
    assert sum(f.slot_loads.values()) == 5857


def test_features_ortega_750(data, ortega_750):
    f = compute_features(ortega_750, data)
    assert f.peak_load == 2453
    assert f.avg_deviation == Fraction(39, 2)


def test_features_all_earliest(data):
    f = compute_features(Schedule((1,) * 10), data)
    assert f.peak_load == 5857
    assert f.avg_deviation == Fraction(105, 2)
    assert f.deviation_sum == 525


def test_features_match_per_school_recomputation(data):
    rng = random.Random(11)
    for _ in range(200):
        s = Schedule(tuple(rng.randint(1, 3) for _ in range(10)))
        f = compute_features(s, data)
        total = 0
        for rec in data:
            change = abs(SLOTS[s.slot_of(rec.id) - 1].minutes - rec.current_start)
            assert f.per_school_change[rec.id] == change
            total += change
        assert f.avg_deviation == Fraction(total, 10)
        assert f.peak_load == max(f.slot_loads.values())
        assert f.peak_load_hundreds * 100 == f.peak_load


def test_enumerate_counts(data):
    assert sum(1 for _ in enumerate_schedules(data)) == 59_049
    assert sum(1 for _ in enumerate_schedules(data, {1: [2]})) == 19_683
    fully_fixed = {rec.id: [2] for rec in data}
    only = list(enumerate_schedules(data, fully_fixed))
    assert only == [Schedule((2,) * 10)]


def test_enumerate_lexicographic_and_unique(data):
    restricted = {1: [1], 2: [1, 2], 3: [2, 3]}
    schedules = list(enumerate_schedules(data, restricted))
    assert len(schedules) == 4 * 3**7
    assert len(set(schedules)) == len(schedules)
    assert schedules == sorted(schedules, key=lambda s: s.slots)
    assert schedules[0].slots[:3] == (1, 1, 2)


def test_enumerate_rejects_empty_option_set(data):
    with pytest.raises(InfeasibleSpaceError, match="Muir"):
        list(enumerate_schedules(data, {1: []}))


def test_global_minima(data):
    table = feature_table(data)
    assert int(table.dev_sums.min()) == 85  # avg 8.5 minutes
    assert int(table.peaks.min()) >= 1953
    assert table.n_rows == 59_049


def test_feature_table_agrees_with_compute_features(data):
    table = feature_table(data)
    rng = random.Random(5)
    for _ in range(50):
        row = rng.randrange(table.n_rows)
        s = table.schedule_at(row)
        f = compute_features(s, data)
        assert int(table.peaks[row]) == f.peak_load
        assert int(table.dev_sums[row]) == f.deviation_sum
