"""Hidden stakeholder utilities, the feedback tool, and the exact oracle.

A utility scores a schedule on three components: the preferred start time of
one school (0, 0.5, or 1 by slot), whether peak load stays at or below a
threshold, and whether average schedule change stays at or below a threshold.
The oracle exhaustively maximizes a utility over all schedules; the score of
a schedule is its utility divided by that maximum.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Mapping, Sequence

import numpy as np

from .domain import (
    SLOTS,
    Schedule,
    SchoolRecord,
    compute_features,
    data_fingerprint,
    feature_table,
    slot_for_label,
)
from .fmt import decimal_str, parse_rational

EARLIER = "earlier"
LATER = "later"
DIRECTIONS = (EARLIER, LATER)

BINARY = "binary"
RICH = "rich"
FEEDBACK_STYLES = (BINARY, RICH)

TIME_COMPONENT = "time"
LOAD_COMPONENT = "load"
DEV_COMPONENT = "dev"

#: A profile is the component-score triple (f_time, f_load, f_dev).
Profile = tuple[Fraction, int, int]


class NonStandardTimeError(ValueError):
    """A proposed start time is not one of the three standardized slots."""


@dataclass(frozen=True)
class UtilitySpec:
    """One decision agent's hidden preferences."""

    id: str
    school_id: int
    direction: str  # earlier | later
    w_time: Fraction
    w_load: Fraction
    w_dev: Fraction
    load_threshold: Fraction  # hundreds of students
    dev_threshold: Fraction  # minutes

    def validate(self) -> None:
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")
        for w in (self.w_time, self.w_load, self.w_dev):
            if w < 0:
                raise ValueError("weights must be non-negative")
        total = self.w_time + self.w_load + self.w_dev
        if abs(total - 1) > Fraction(2, 1000):
            raise ValueError(f"weights must sum to 1 (got {total})")
        if self.load_threshold < 0 or self.dev_threshold < 0:
            raise ValueError("thresholds must be non-negative")

    def f_time(self, slot_index: int) -> Fraction:
        """Start-time component for the agent's school at the given slot."""
        rank = slot_index - 1  # 0 = earliest
        if self.direction == EARLIER:
            rank = len(SLOTS) - 1 - rank
        return Fraction(rank, len(SLOTS) - 1)

    def to_json(self) -> str:
        doc = {
            "id": self.id,
            "school_id": self.school_id,
            "direction": self.direction,
            "weights": {
                "time": decimal_str(self.w_time),
                "load": decimal_str(self.w_load),
                "dev": decimal_str(self.w_dev),
            },
            "load_threshold_hundreds": decimal_str(self.load_threshold),
            "dev_threshold_minutes": decimal_str(self.dev_threshold),
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "UtilitySpec":
        doc = json.loads(text)
        spec = cls(
            id=doc["id"],
            school_id=int(doc["school_id"]),
            direction=doc["direction"],
            w_time=parse_rational(doc["weights"]["time"]),
            w_load=parse_rational(doc["weights"]["load"]),
            w_dev=parse_rational(doc["weights"]["dev"]),
            load_threshold=parse_rational(doc["load_threshold_hundreds"]),
            dev_threshold=parse_rational(doc["dev_threshold_minutes"]),
        )
        spec.validate()
        return spec


@dataclass(frozen=True)
class UtilityEvaluation:
    f_time: Fraction
    f_load: int
    f_dev: int
    total: Fraction
    satisfied: frozenset[str]

    @property
    def profile(self) -> Profile:
        return (self.f_time, self.f_load, self.f_dev)


@dataclass(frozen=True)
class OracleResult:
    u_star: Fraction
    maximizing_profiles: frozenset[Profile]
    witnesses: dict[Profile, Schedule]  # lexicographically smallest per profile


def evaluate_utility(
    spec: UtilitySpec, s: Schedule, data: Sequence[SchoolRecord]
) -> UtilityEvaluation:
    """Exact component scores and weighted total for one schedule."""
    features = compute_features(s, data)
    f_time = spec.f_time(s.slot_of(spec.school_id))
    f_load = 1 if features.peak_load_hundreds <= spec.load_threshold else 0
    f_dev = 1 if features.avg_deviation <= spec.dev_threshold else 0
    total = spec.w_time * f_time + spec.w_load * f_load + spec.w_dev * f_dev
    satisfied = set()
    if f_time == 1:
        satisfied.add(TIME_COMPONENT)
    if f_load:
        satisfied.add(LOAD_COMPONENT)
    if f_dev:
        satisfied.add(DEV_COMPONENT)
    return UtilityEvaluation(f_time, f_load, f_dev, total, frozenset(satisfied))


def _lcm(a: int, b: int) -> int:
    return a // gcd(a, b) * b


def _component_columns(
    spec: UtilitySpec, data: Sequence[SchoolRecord]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-schedule component scores over the whole space (f_time doubled)."""
    table = feature_table(data)
    slot_col = table.slots[:, spec.school_id - 1].astype(np.int64)
    ft2 = slot_col if spec.direction == LATER else (len(SLOTS) - 1) - slot_col
    L, R = spec.load_threshold, spec.dev_threshold
    fl = (table.peaks * L.denominator <= L.numerator * 100).astype(np.int64)
    fd = (table.dev_sums * R.denominator <= R.numerator * table.n_schools).astype(np.int64)
    return ft2, fl, fd


@lru_cache(maxsize=4096)
def _oracle_max_cached(spec: UtilitySpec, fingerprint: str, data: tuple) -> OracleResult:
    table = feature_table(data)
    ft2, fl, fd = _component_columns(spec, data)
    scale = _lcm(2 * spec.w_time.denominator, _lcm(spec.w_load.denominator, spec.w_dev.denominator))
    wt2 = int(spec.w_time * scale / 2)
    wl = int(spec.w_load * scale)
    wd = int(spec.w_dev * scale)
    totals = wt2 * ft2 + wl * fl + wd * fd
    best = int(totals.max())
    u_star = Fraction(best, scale)
    witnesses: dict[Profile, Schedule] = {}
    for row in np.flatnonzero(totals == best):
        profile = (Fraction(int(ft2[row]), 2), int(fl[row]), int(fd[row]))
        if profile not in witnesses:  # rows ascend, so first hit is lex smallest
            witnesses[profile] = table.schedule_at(int(row))
    return OracleResult(u_star, frozenset(witnesses), witnesses)


def oracle_max(spec: UtilitySpec, data: Sequence[SchoolRecord]) -> OracleResult:
    """Maximum attainable utility over all schedules, with witnesses (cached)."""
    spec.validate()
    data = tuple(data)
    return _oracle_max_cached(spec, data_fingerprint(data), data)


def parse_start_times(
    mapping: Mapping[str, str], data: Sequence[SchoolRecord]
) -> Schedule:
    """Turn a {school name: time label} dict into a Schedule.

    Raises NonStandardTimeError for any time outside the three slots, and
    ValueError for unknown or missing schools.
    """
    by_name = {rec.name.casefold(): rec for rec in data}
    assignment: dict[int, int] = {}
    for name, label in mapping.items():
        rec = by_name.get(name.strip().casefold())
        if rec is None:
            raise ValueError(f"unknown school {name!r}")
        slot = slot_for_label(label)
        if slot is None:
            raise NonStandardTimeError(f"{label!r} is not a standardized time")
        assignment[rec.id] = slot.index
    missing = [rec.name for rec in data if rec.id not in assignment]
    if missing:
        raise ValueError(f"schedule is missing schools: {', '.join(missing)}")
    return Schedule(tuple(assignment[rec.id] for rec in data))


def _guidance(
    spec: UtilitySpec, evaluation: UtilityEvaluation, data: Sequence[SchoolRecord]
) -> list[str]:
    school = next(rec for rec in data if rec.id == spec.school_id)
    best_label = SLOTS[0].label if spec.direction == EARLIER else SLOTS[-1].label
    hints = []
    if evaluation.f_time != 1:
        hints.append(
            f"{'an earlier' if spec.direction == EARLIER else 'a later'} start for "
            f"{school.name} would be better (ideally {best_label})"
        )
    if not evaluation.f_load:
        students = spec.load_threshold * 100
        shown = f"{int(students):,}" if students.denominator == 1 else decimal_str(students)
        hints.append(f"try bringing the peak student load to at most {shown} students")
    if not evaluation.f_dev:
        hints.append(
            "try bringing the average schedule change to at most "
            f"{decimal_str(spec.dev_threshold)} minutes"
        )
    return hints


def check_utility(
    spec: UtilitySpec,
    s: Schedule,
    style: str,
    data: Sequence[SchoolRecord],
) -> dict:
    """The decision agent's feedback record for one schedule.

    Binary style reveals a single bit; rich style reveals the component
    breakdown plus deterministic guidance for each unsatisfied component.
    """
    if style not in FEEDBACK_STYLES:
        raise ValueError(f"style must be one of {FEEDBACK_STYLES}")
    evaluation = evaluate_utility(spec, s, data)
    oracle = oracle_max(spec, data)
    is_max = evaluation.total == oracle.u_star
    if style == BINARY:
        return {"is_max": is_max}
    components = {
        TIME_COMPONENT: evaluation.f_time == 1,
        LOAD_COMPONENT: bool(evaluation.f_load),
        DEV_COMPONENT: bool(evaluation.f_dev),
    }
    return {
        "is_max": is_max,
        "total": decimal_str(evaluation.total),
        "u_star": decimal_str(oracle.u_star),
        "satisfied": sorted(k for k, v in components.items() if v),
        "unsatisfied": sorted(k for k, v in components.items() if not v),
        "guidance": _guidance(spec, evaluation, data),
    }


def score(spec: UtilitySpec, s: Schedule, data: Sequence[SchoolRecord]) -> Fraction:
    """Normalized quality pi = U(s) / U*, in [0, 1]."""
    oracle = oracle_max(spec, data)
    if oracle.u_star == 0:
        raise ValueError("utility has u_star = 0 and cannot be scored")
    return evaluate_utility(spec, s, data).total / oracle.u_star
