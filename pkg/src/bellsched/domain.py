"""School data, the schedule decision space, and schedule feature functions.

The canonical instance is 10 district schools assigned to one of three
standardized start times (7:50 AM, 8:40 AM, 9:30 AM). Everything downstream
(solver, utilities, benchmark generation) consumes the types defined here.
All arithmetic is exact: minutes and student counts are ints, averages are
``Fraction``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .fmt import minutes_to_label

GRADE_LEVELS = ("PK", "ES", "MS", "K8", "HS")


class DataValidationError(ValueError):
    """School data failed validation; message names the offending row."""


class InfeasibleSpaceError(ValueError):
    """A restriction left some school with no allowed start slot."""


@dataclass(frozen=True)
class SchoolRecord:
    id: int
    name: str
    grade_level: str
    enrollment: int
    current_start: int  # minutes since midnight

    @property
    def current_start_label(self) -> str:
        return minutes_to_label(self.current_start)


@dataclass(frozen=True)
class TimeSlot:
    index: int  # 1-based
    minutes: int
    label: str


#: The three standardized start slots, ascending.
SLOTS: tuple[TimeSlot, ...] = (
    TimeSlot(1, 470, "7:50 AM"),
    TimeSlot(2, 520, "8:40 AM"),
    TimeSlot(3, 570, "9:30 AM"),
)
SLOT_COUNT = len(SLOTS)
SLOT_BY_INDEX = {s.index: s for s in SLOTS}
SLOT_BY_LABEL = {s.label.casefold(): s for s in SLOTS}


def slot_for_label(label: str) -> TimeSlot | None:
    """Resolve a slot label case-insensitively; None if not a slot."""
    return SLOT_BY_LABEL.get(label.strip().casefold())


@dataclass(frozen=True)
class Schedule:
    """One start slot (1-based index) per school, in school-id order."""

    slots: tuple[int, ...]

    def __post_init__(self) -> None:
        for t in self.slots:
            if t not in SLOT_BY_INDEX:
                raise ValueError(f"invalid slot index {t}")

    def slot_of(self, school_id: int) -> int:
        return self.slots[school_id - 1]

    def label_of(self, school_id: int) -> str:
        return SLOT_BY_INDEX[self.slots[school_id - 1]].label

    def as_labels(self, data: Sequence[SchoolRecord]) -> dict[str, str]:
        return {rec.name: self.label_of(rec.id) for rec in data}

    @classmethod
    def from_labels(
        cls, mapping: Mapping[int, str], data: Sequence[SchoolRecord]
    ) -> "Schedule":
        slots = []
        for rec in data:
            slot = slot_for_label(mapping[rec.id])
            if slot is None:
                raise ValueError(f"{mapping[rec.id]!r} is not a standardized time")
            slots.append(slot.index)
        return cls(tuple(slots))


@dataclass(frozen=True)
class ScheduleFeatures:
    per_school_change: dict[int, int]  # minutes moved, by school id
    deviation_sum: int
    avg_deviation: Fraction
    slot_loads: dict[int, int]  # students, by slot index
    peak_load: int
    peak_load_hundreds: Fraction


_CANONICAL_TOTAL_ENROLLMENT = 5857


def _parse_row(row: dict[str, str], line: int) -> SchoolRecord:
    try:
        school_id = int(row["id"])
        name = row["name"].strip()
        grade = row["grade"].strip()
        enrollment = int(row["enrollment"])
        start = int(row["current_start_minutes"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataValidationError(f"malformed row {line}: {exc}") from exc
    if not name:
        raise DataValidationError(f"row {line}: empty school name")
    if grade not in GRADE_LEVELS:
        raise DataValidationError(f"row {line}: unknown grade level {grade!r}")
    if enrollment <= 0:
        raise DataValidationError(f"row {line}: non-positive enrollment {enrollment}")
    if not 0 <= start < 1440:
        raise DataValidationError(f"row {line}: current start {start} out of range")
    return SchoolRecord(school_id, name, grade, enrollment, start)


def load_school_data(source: bytes | str | io.IOBase | None = None) -> list[SchoolRecord]:
    """Load and validate school records from CSV; default is the bundled set.

    The CSV header is ``id,name,grade,enrollment,current_start_minutes``.
    """
    if source is None:
        text = resources.files("bellsched.data").joinpath("schools.csv").read_text("utf-8")
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw

    reader = csv.DictReader(io.StringIO(text))
    records = [_parse_row(row, line) for line, row in enumerate(reader, start=2)]
    if not records:
        raise DataValidationError("no records")
    seen: set[int] = set()
    for rec in records:
        if rec.id in seen:
            raise DataValidationError(f"duplicate school id {rec.id}")
        seen.add(rec.id)
    if seen != set(range(1, len(records) + 1)):
        raise DataValidationError("school ids must be contiguous starting at 1")
    return sorted(records, key=lambda r: r.id)


def canonical_school_data() -> list[SchoolRecord]:
    data = load_school_data()
    total = sum(r.enrollment for r in data)
    if total != _CANONICAL_TOTAL_ENROLLMENT:
        raise DataValidationError(
            f"canonical enrollment {total} != {_CANONICAL_TOTAL_ENROLLMENT}"
        )
    return data


def data_fingerprint(data: Sequence[SchoolRecord]) -> str:
    """Stable hash of a school dataset, used as a cache key."""
    payload = ";".join(
        f"{r.id},{r.name},{r.grade_level},{r.enrollment},{r.current_start}" for r in data
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def compute_features(s: Schedule, data: Sequence[SchoolRecord]) -> ScheduleFeatures:
    """Exact peak-load and schedule-change features of one schedule."""
    if len(s.slots) != len(data):
        raise ValueError(f"schedule covers {len(s.slots)} schools, data has {len(data)}")
    per_school: dict[int, int] = {}
    loads = {slot.index: 0 for slot in SLOTS}
    dev_sum = 0
    for rec, t in zip(data, s.slots):
        change = abs(SLOT_BY_INDEX[t].minutes - rec.current_start)
        per_school[rec.id] = change
        dev_sum += change
        loads[t] += rec.enrollment
    peak = max(loads.values())
    return ScheduleFeatures(
        per_school_change=per_school,
        deviation_sum=dev_sum,
        avg_deviation=Fraction(dev_sum, len(data)),
        slot_loads=loads,
        peak_load=peak,
        peak_load_hundreds=Fraction(peak, 100),
    )


def enumerate_schedules(
    data: Sequence[SchoolRecord],
    fixes: Mapping[int, Iterable[int]] | None = None,
) -> Iterator[Schedule]:
    """Yield every schedule in the restricted product space, lexicographically.

    ``fixes`` maps school id to the slot indices it may take; unrestricted
    schools range over all three slots.
    """
    fixes = dict(fixes or {})
    allowed: list[tuple[int, ...]] = []
    for rec in data:
        options = tuple(sorted(set(fixes.get(rec.id, (1, 2, 3)))))
        if not options:
            raise InfeasibleSpaceError(f"no allowed start slot for {rec.name}")
        for t in options:
            if t not in SLOT_BY_INDEX:
                raise ValueError(f"invalid slot index {t} for {rec.name}")
        allowed.append(options)
    for combo in itertools.product(*allowed):
        yield Schedule(combo)


class FeatureTable:
    """Vectorized features of the full decision space, in lexicographic order.

    Row ``i`` corresponds to the ``i``-th schedule in the mixed-radix order
    used by :func:`enumerate_schedules` with no restrictions. Loads, peaks,
    and deviation sums are exact ints.
    """

    def __init__(self, data: Sequence[SchoolRecord]):
        self.data = list(data)
        n_schools = len(self.data)
        n_rows = SLOT_COUNT**n_schools
        rows = np.arange(n_rows, dtype=np.int64)
        slots = np.empty((n_rows, n_schools), dtype=np.int8)
        for j in range(n_schools):
            slots[:, j] = (rows // (SLOT_COUNT ** (n_schools - 1 - j))) % SLOT_COUNT
        dev_cost = np.array(
            [[abs(s.minutes - rec.current_start) for s in SLOTS] for rec in self.data],
            dtype=np.int64,
        )
        enroll = np.array([rec.enrollment for rec in self.data], dtype=np.int64)
        dev_sums = np.zeros(n_rows, dtype=np.int64)
        loads = np.zeros((n_rows, SLOT_COUNT), dtype=np.int64)
        for j in range(n_schools):
            dev_sums += dev_cost[j, slots[:, j]]
            for t in range(SLOT_COUNT):
                loads[slots[:, j] == t, t] += enroll[j]
        self.slots = slots  # 0-based slot index per school
        self.dev_sums = dev_sums
        self.peaks = loads.max(axis=1)
        self.n_schools = n_schools
        self.n_rows = n_rows

    def schedule_at(self, row: int) -> Schedule:
        return Schedule(tuple(int(t) + 1 for t in self.slots[row]))

    def mask_for(
        self,
        fixed: Mapping[int, int] | None = None,
        forbidden: Iterable[tuple[int, int]] | None = None,
    ) -> np.ndarray:
        """Boolean row mask for fix/forbid restrictions (1-based slots)."""
        mask = np.ones(self.n_rows, dtype=bool)
        for school_id, t in (fixed or {}).items():
            mask &= self.slots[:, school_id - 1] == t - 1
        for school_id, t in forbidden or ():
            mask &= self.slots[:, school_id - 1] != t - 1
        return mask


@lru_cache(maxsize=4)
def _cached_table(fingerprint: str, data: tuple[SchoolRecord, ...]) -> FeatureTable:
    return FeatureTable(data)


def feature_table(data: Sequence[SchoolRecord]) -> FeatureTable:
    """Shared cached :class:`FeatureTable` for a dataset."""
    data = tuple(data)
    return _cached_table(data_fingerprint(data), data)
