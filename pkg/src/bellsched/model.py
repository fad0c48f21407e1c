"""The live optimization model over start-time schedules, solved exactly.

The objective ``alpha * peak_load_hundreds + beta * avg_deviation - sum of
preference bonuses`` is minimized over the full assignment space, restricted
by fixed/forbidden assignments and objective upper bounds. The instance is
small (3^10 candidates), so the solver enumerates exactly instead of calling
a MILP backend; comparisons use exact rational arithmetic, never epsilons.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Sequence

import numpy as np

from .domain import (
    SLOTS,
    SLOT_BY_INDEX,
    FeatureTable,
    InfeasibleSpaceError,
    Schedule,
    ScheduleFeatures,
    SchoolRecord,
    compute_features,
    feature_table,
)
from .fmt import decimal_str, parse_rational

LOAD_OBJECTIVE = "student_load_balancing"
DEVIATION_OBJECTIVE = "schedule_deviation"
OBJECTIVES = (LOAD_OBJECTIVE, DEVIATION_OBJECTIVE)

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"


def fix_constraint_name(school_name: str) -> str:
    return f"fix_{school_name}"


def forbid_constraint_name(school_name: str, slot_label: str) -> str:
    return f"forbid_{school_name}_{slot_label}"


def bound_constraint_name(objective: str) -> str:
    return f"bound_{objective}"


@dataclass
class ModelState:
    """Weights, preference bonuses, and named constraints of the live model."""

    alpha: Fraction = Fraction(1)  # weight on peak load, hundreds of students
    beta: Fraction = Fraction(1)  # weight on average deviation, minutes
    gamma: dict[tuple[int, int], Fraction] = field(default_factory=dict)
    fixed: dict[int, int] = field(default_factory=dict)  # school id -> slot index
    forbidden: set[tuple[int, int]] = field(default_factory=set)
    bounds: dict[str, Fraction] = field(default_factory=dict)  # objective -> display units
    constraint_names: dict[str, dict] = field(default_factory=dict)

    def validate(self) -> None:
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("objective weights must be non-negative")
        for objective in self.bounds:
            if objective not in OBJECTIVES:
                raise ValueError(f"unknown objective {objective!r}")
        for school_id, t in self.fixed.items():
            if t not in SLOT_BY_INDEX:
                raise ValueError(f"invalid fixed slot {t} for school {school_id}")
            if (school_id, t) in self.forbidden:
                raise ValueError(
                    f"school {school_id} is fixed to slot {t} which is also forbidden"
                )
        for school_id, t in self.forbidden:
            if t not in SLOT_BY_INDEX:
                raise ValueError(f"invalid forbidden slot {t} for school {school_id}")

    def check_space(self, data: Sequence[SchoolRecord]) -> None:
        """Raise InfeasibleSpaceError if some school has no allowed slot."""
        for rec in data:
            if rec.id in self.fixed:
                continue
            blocked = {t for (q, t) in self.forbidden if q == rec.id}
            if len(blocked) >= len(SLOTS):
                raise InfeasibleSpaceError(f"all start slots forbidden for {rec.name}")

    def sync_names(self, data: Sequence[SchoolRecord]) -> None:
        """Regenerate the constraint-name registry from the current state."""
        by_id = {rec.id: rec for rec in data}
        names: dict[str, dict] = {}
        for school_id in sorted(self.fixed):
            name = fix_constraint_name(by_id[school_id].name)
            names[name] = {"kind": "fix", "school_id": school_id, "slot": self.fixed[school_id]}
        for school_id, t in sorted(self.forbidden):
            name = forbid_constraint_name(by_id[school_id].name, SLOT_BY_INDEX[t].label)
            names[name] = {"kind": "forbid", "school_id": school_id, "slot": t}
        for objective in sorted(self.bounds):
            names[bound_constraint_name(objective)] = {
                "kind": "bound",
                "objective": objective,
                "value": decimal_str(self.bounds[objective]),
            }
        self.constraint_names = names

    def copy(self) -> "ModelState":
        return ModelState(
            alpha=self.alpha,
            beta=self.beta,
            gamma=dict(self.gamma),
            fixed=dict(self.fixed),
            forbidden=set(self.forbidden),
            bounds=dict(self.bounds),
            constraint_names={k: dict(v) for k, v in self.constraint_names.items()},
        )

    def to_json(self) -> str:
        """Canonical JSON document with stable key order."""
        doc = {
            "schema_version": 1,
            "alpha": decimal_str(self.alpha),
            "beta": decimal_str(self.beta),
            "gamma": {
                f"{q}|{t}": decimal_str(v)
                for (q, t), v in sorted(self.gamma.items())
                if v != 0
            },
            "fixed": {str(q): t for q, t in sorted(self.fixed.items())},
            "forbidden": [[q, t] for q, t in sorted(self.forbidden)],
            "bounds": {obj: decimal_str(v) for obj, v in sorted(self.bounds.items())},
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str, data: Sequence[SchoolRecord] | None = None) -> "ModelState":
        doc = json.loads(text)
        state = cls(
            alpha=parse_rational(doc.get("alpha", "1")),
            beta=parse_rational(doc.get("beta", "1")),
            gamma={
                (int(key.split("|")[0]), int(key.split("|")[1])): parse_rational(v)
                for key, v in doc.get("gamma", {}).items()
            },
            fixed={int(q): int(t) for q, t in doc.get("fixed", {}).items()},
            forbidden={(int(q), int(t)) for q, t in doc.get("forbidden", [])},
            bounds={obj: parse_rational(v) for obj, v in doc.get("bounds", {}).items()},
        )
        state.validate()
        if data is not None:
            state.sync_names(data)
        return state


@dataclass(frozen=True)
class InfeasibilityReport:
    """Which objective bounds cannot be met, and the best values achievable."""

    violated_bounds: list[tuple[str, Fraction, Fraction]]  # (objective, bound, min achievable)


@dataclass(frozen=True)
class SolveResult:
    status: str
    schedule: Schedule | None
    objective_value: Fraction | None
    features: ScheduleFeatures | None
    infeasibility: InfeasibilityReport | None = None


def default_model() -> ModelState:
    return ModelState()


def _lcm(a: int, b: int) -> int:
    return a // gcd(a, b) * b


def _scaled_objective(m: ModelState, table: FeatureTable) -> tuple[np.ndarray, int]:
    """Integer objective ``obj * scale`` per row, exact for rational weights."""
    n_schools = table.n_schools
    scale = _lcm(100 * m.alpha.denominator, n_schools * m.beta.denominator)
    for v in m.gamma.values():
        scale = _lcm(scale, v.denominator)
    a_int = int(m.alpha * scale / 100)
    b_int = int(m.beta * scale / n_schools)
    values = a_int * table.peaks + b_int * table.dev_sums
    if m.gamma:
        for (school_id, t), v in m.gamma.items():
            bonus = int(v * scale)
            if bonus:
                values = values - bonus * (table.slots[:, school_id - 1] == t - 1)
    # int64 headroom check: worst case coefficient * feature magnitudes
    worst = abs(a_int) * int(table.peaks.max()) + abs(b_int) * int(table.dev_sums.max())
    worst += sum(abs(int(v * scale)) for v in m.gamma.values())
    if worst >= 2**62:
        raise OverflowError("objective coefficients too large for exact int64 search")
    return values, scale


def _bound_mask(m: ModelState, table: FeatureTable, skip: str | None = None) -> np.ndarray:
    mask = np.ones(table.n_rows, dtype=bool)
    for objective, bound in m.bounds.items():
        if objective == skip:
            continue
        if objective == LOAD_OBJECTIVE:
            # peak/100 <= bound, cross-multiplied to stay exact
            mask &= table.peaks * bound.denominator <= bound.numerator * 100
        else:
            mask &= table.dev_sums * bound.denominator <= bound.numerator * table.n_schools
    return mask


def min_achievable(
    objective: str,
    m: ModelState,
    data: Sequence[SchoolRecord],
    respect_other_bound: bool = True,
) -> Fraction:
    """Exact minimum of one objective under the model's restrictions.

    The named objective's own bound is always ignored; the other objective's
    bound is honored unless ``respect_other_bound`` is False.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}")
    m.validate()
    m.check_space(data)
    table = feature_table(data)
    mask = table.mask_for(m.fixed, m.forbidden)
    if respect_other_bound:
        mask &= _bound_mask(m, table, skip=objective)
    if not mask.any():
        raise InfeasibleSpaceError("no schedule satisfies the current restrictions")
    if objective == LOAD_OBJECTIVE:
        return Fraction(int(table.peaks[mask].min()), 100)
    return Fraction(int(table.dev_sums[mask].min()), table.n_schools)


def _infeasibility_report(
    m: ModelState, data: Sequence[SchoolRecord]
) -> InfeasibilityReport:
    # First list bounds that are impossible even in isolation; if the bounds
    # are only jointly unsatisfiable, report each minimum under the other bound.
    for respect_other in (False, True):
        entries = []
        for objective, bound in sorted(m.bounds.items()):
            best = min_achievable(objective, m, data, respect_other_bound=respect_other)
            if best > bound:
                entries.append((objective, bound, best))
        if entries:
            return InfeasibilityReport(entries)
    return InfeasibilityReport([])


def solve(m: ModelState, data: Sequence[SchoolRecord]) -> SolveResult:
    """Exact optimum of the current model; ties break to the lexicographically
    smallest assignment vector. Infeasible results carry a diagnostic report."""
    m.validate()
    m.check_space(data)
    table = feature_table(data)
    mask = table.mask_for(m.fixed, m.forbidden)
    if not mask.any():
        raise InfeasibleSpaceError("no schedule satisfies the fixed/forbidden slots")
    feasible = mask & _bound_mask(m, table)
    if not feasible.any():
        return SolveResult(
            status=INFEASIBLE,
            schedule=None,
            objective_value=None,
            features=None,
            infeasibility=_infeasibility_report(m, data),
        )
    values, scale = _scaled_objective(m, table)
    rows = np.flatnonzero(feasible)
    best_row = int(rows[np.argmin(values[rows])])  # argmin keeps first = lex smallest
    schedule = table.schedule_at(best_row)
    features = compute_features(schedule, data)
    objective = Fraction(int(values[best_row]), scale)
    return SolveResult(
        status=OPTIMAL,
        schedule=schedule,
        objective_value=objective,
        features=features,
    )


def model_summary(m: ModelState, data: Sequence[SchoolRecord]) -> str:
    """Deterministic, parseable rendering of the model state."""
    m.sync_names(data)
    by_id = {rec.id: rec for rec in data}
    lines = [
        "Model summary:",
        f"- weights: α={decimal_str(m.alpha)} ({LOAD_OBJECTIVE}), "
        f"β={decimal_str(m.beta)} ({DEVIATION_OBJECTIVE})",
    ]
    bonuses = [(q, t, v) for (q, t), v in sorted(m.gamma.items()) if v != 0]
    if bonuses:
        rendered = "; ".join(
            f"{by_id[q].name} @ {SLOT_BY_INDEX[t].label} = {decimal_str(v)}"
            for q, t, v in bonuses
        )
        lines.append(f"- preference bonuses: {rendered}")
    else:
        lines.append("- preference bonuses: none")
    if not m.constraint_names:
        lines.append("- constraints: no active constraints")
        return "\n".join(lines)
    lines.append("- constraints:")
    for name, desc in m.constraint_names.items():
        if desc["kind"] == "fix":
            school = by_id[desc["school_id"]]
            lines.append(f"  - {name}: {school.name} = {SLOT_BY_INDEX[desc['slot']].label}")
        elif desc["kind"] == "forbid":
            school = by_id[desc["school_id"]]
            lines.append(f"  - {name}: {school.name} ≠ {SLOT_BY_INDEX[desc['slot']].label}")
        else:
            lines.append(f"  - {name}: {desc['objective']} ≤ {desc['value']}")
    return "\n".join(lines)


def parse_model_summary(text: str, data: Sequence[SchoolRecord]) -> ModelState:
    """Reconstruct a ModelState from :func:`model_summary` output."""
    by_name = {rec.name: rec for rec in data}
    state = ModelState()
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("- weights:"):
            body = line[len("- weights:") :]
            for part in body.split(","):
                part = part.strip()
                if part.startswith("α="):
                    state.alpha = parse_rational(part[2:].split(" ")[0])
                elif part.startswith("β="):
                    state.beta = parse_rational(part[2:].split(" ")[0])
        elif line.startswith("- preference bonuses:") and not line.endswith("none"):
            body = line[len("- preference bonuses:") :].strip()
            for entry in body.split(";"):
                lhs, value = entry.rsplit("=", 1)
                school_name, label = lhs.rsplit("@", 1)
                rec = by_name[school_name.strip()]
                slot = next(s for s in SLOTS if s.label == label.strip())
                state.gamma[(rec.id, slot.index)] = parse_rational(value)
        elif line.startswith("- fix_"):
            _, rhs = line[2:].split(": ", 1)
            school_name, label = rhs.rsplit("=", 1)
            rec = by_name[school_name.strip()]
            slot = next(s for s in SLOTS if s.label == label.strip())
            state.fixed[rec.id] = slot.index
        elif line.startswith("- forbid_"):
            _, rhs = line[2:].split(": ", 1)
            school_name, label = rhs.rsplit("≠", 1)
            rec = by_name[school_name.strip()]
            slot = next(s for s in SLOTS if s.label == label.strip())
            state.forbidden.add((rec.id, slot.index))
        elif line.startswith("- bound_"):
            _, rhs = line[2:].split(": ", 1)
            objective, value = rhs.rsplit("≤", 1)
            state.bounds[objective.strip()] = parse_rational(value)
    state.validate()
    state.sync_names(data)
    return state
