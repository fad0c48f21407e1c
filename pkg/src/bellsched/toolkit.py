"""Validated model-editing tools plus ``call_solver``.

These are the only operations the optimization agent can perform, so every
edit is checked, conflicting constraints are removed automatically, and the
solver output is post-processed into a readable schedule table. A result is
returned for every call (``ok=False`` for recoverable mistakes such as an
unknown school name) so a conversational agent can self-correct.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .domain import SLOTS, InfeasibleSpaceError, SchoolRecord, slot_for_label
from .fmt import decimal_str, fmt_deviation, fmt_load, to_fraction
from .model import (
    DEVIATION_OBJECTIVE,
    LOAD_OBJECTIVE,
    OBJECTIVES,
    OPTIMAL,
    ModelState,
    SolveResult,
    model_summary,
    solve,
)

FIX_START_TIME = "fix_start_time"
CHANGE_OBJECTIVE_WEIGHT = "change_objective_weight"
ADD_OBJECTIVE_UPPER_BOUND = "add_objective_upper_bound"
REMOVE_CONSTRAINT = "remove_constraint"
CALL_SOLVER = "call_solver"

# The bound tool also answers to this older name.
ADD_OBJECTIVE_CONSTRAINT_ALIAS = "add_objective_constraint"

TOOL_NAMES = (
    FIX_START_TIME,
    CHANGE_OBJECTIVE_WEIGHT,
    ADD_OBJECTIVE_UPPER_BOUND,
    REMOVE_CONSTRAINT,
    CALL_SOLVER,
)


@dataclass(frozen=True)
class ToolCall:
    tool: str
    arguments: dict


@dataclass
class ToolResult:
    ok: bool
    message: str
    model_summary: str
    solve_result: SolveResult | None = None


class ToolArgumentError(ValueError):
    """Arguments do not match the tool's schema (wrong names/types)."""


def _result(
    m: ModelState,
    data: Sequence[SchoolRecord],
    ok: bool,
    message: str,
    solve_result: SolveResult | None = None,
) -> ToolResult:
    return ToolResult(ok, message, model_summary(m, data), solve_result)


def _resolve_school(data: Sequence[SchoolRecord], name: str) -> SchoolRecord | None:
    wanted = name.strip().casefold()
    for rec in data:
        if rec.name.casefold() == wanted:
            return rec
    return None


def render_solution(result: SolveResult, data: Sequence[SchoolRecord]) -> str:
    """Solver output as a fixed-order markdown schedule table plus objectives."""
    if result.status != OPTIMAL or result.schedule is None or result.features is None:
        raise ValueError("only optimal results can be rendered as a schedule")
    lines = ["| School Name | Proposed Start |", "| --- | --- |"]
    for rec in data:
        lines.append(f"| {rec.name} | {result.schedule.label_of(rec.id)} |")
    lines.append("")
    lines.append(f"- Student Load Balancing: {fmt_load(result.features.peak_load)}")
    lines.append(f"- Schedule Deviation: {fmt_deviation(result.features.avg_deviation)}")
    return "\n".join(lines)


def render_infeasibility(result: SolveResult) -> str:
    report = result.infeasibility
    lines = ["The solver found no schedule satisfying all current constraints."]
    if report and report.violated_bounds:
        for objective, bound, best in report.violated_bounds:
            unit = "minutes" if objective == DEVIATION_OBJECTIVE else "(hundreds of students)"
            lines.append(
                f"- {objective} ≤ {decimal_str(bound)} was requested, but the minimum "
                f"achievable under the other constraints is {decimal_str(best)} {unit}."
            )
        lines.append(
            "Consider relaxing or removing one of these bounds, or freeing a fixed school."
        )
    return "\n".join(lines)


def fix_start_time(
    m: ModelState,
    data: Sequence[SchoolRecord],
    school: str,
    time: str,
    type: str = "fix",
) -> ToolResult:
    """Fix or forbid one school's start slot, clearing conflicting constraints."""
    rec = _resolve_school(data, school)
    if rec is None:
        names = ", ".join(r.name for r in data)
        return _result(m, data, False, f"Unknown school {school!r}. Known schools: {names}.")
    slot = slot_for_label(time)
    if slot is None:
        labels = ", ".join(s.label for s in SLOTS)
        return _result(
            m, data, False, f"{time!r} is not a standardized start time. Options: {labels}."
        )
    if type not in ("fix", "forbid"):
        return _result(m, data, False, f"type must be 'fix' or 'forbid', got {type!r}.")

    if type == "fix":
        m.fixed[rec.id] = slot.index
        m.forbidden = {(q, t) for (q, t) in m.forbidden if q != rec.id}
        message = f"Fixed {rec.name} to {slot.label} (conflicting constraints removed)."
    else:
        blocked = {t for (q, t) in m.forbidden if q == rec.id} | {slot.index}
        if len(blocked) >= len(SLOTS):
            return _result(
                m,
                data,
                False,
                f"Cannot forbid {slot.label} for {rec.name}: that would forbid every "
                "available start time. Remove one of the other forbids first.",
            )
        m.fixed.pop(rec.id, None)
        m.forbidden.add((rec.id, slot.index))
        message = f"Forbade {slot.label} for {rec.name} (conflicting fix removed)."
    m.sync_names(data)
    return _result(m, data, True, message)


def change_objective_weight(
    m: ModelState, data: Sequence[SchoolRecord], objective: str, w: object
) -> ToolResult:
    """Set the weight on one of the two objectives."""
    if objective not in OBJECTIVES:
        return _result(
            m, data, False, f"Unknown objective {objective!r}. Options: {', '.join(OBJECTIVES)}."
        )
    try:
        weight = to_fraction(w)
    except (TypeError, ValueError):
        return _result(m, data, False, f"Weight {w!r} is not a number.")
    if weight < 0:
        return _result(m, data, False, "Objective weights must be non-negative.")
    if objective == LOAD_OBJECTIVE:
        m.alpha = weight
    else:
        m.beta = weight
    m.sync_names(data)
    return _result(m, data, True, f"Set the weight on {objective} to {decimal_str(weight)}.")


def add_objective_upper_bound(
    m: ModelState, data: Sequence[SchoolRecord], objective: str, v: object
) -> ToolResult:
    """Impose ``objective <= v`` (display units), replacing any existing bound."""
    if objective not in OBJECTIVES:
        return _result(
            m, data, False, f"Unknown objective {objective!r}. Options: {', '.join(OBJECTIVES)}."
        )
    try:
        value = to_fraction(v)
    except (TypeError, ValueError):
        return _result(m, data, False, f"Bound value {v!r} is not a number.")
    if value < 0:
        return _result(m, data, False, "Bound values must be non-negative.")
    replaced = objective in m.bounds
    m.bounds[objective] = value
    m.sync_names(data)
    verb = "Replaced the bound:" if replaced else "Added the bound:"
    return _result(m, data, True, f"{verb} {objective} ≤ {decimal_str(value)}.")


def remove_constraint(m: ModelState, data: Sequence[SchoolRecord], name: str) -> ToolResult:
    """Remove a named constraint; misses are reported, not fatal."""
    m.sync_names(data)
    desc = m.constraint_names.get(name)
    if desc is None:
        active = ", ".join(m.constraint_names) or "(none)"
        return _result(
            m, data, False, f"No constraint named {name!r}. Active constraints: {active}."
        )
    if desc["kind"] == "fix":
        m.fixed.pop(desc["school_id"], None)
    elif desc["kind"] == "forbid":
        m.forbidden.discard((desc["school_id"], desc["slot"]))
    else:
        m.bounds.pop(desc["objective"], None)
    m.sync_names(data)
    return _result(m, data, True, f"Removed constraint {name}.")


def call_solver(m: ModelState, data: Sequence[SchoolRecord]) -> ToolResult:
    """Solve the current model and render the processed solution."""
    try:
        result = solve(m, data)
    except InfeasibleSpaceError as exc:
        return _result(m, data, False, f"The model admits no schedule at all: {exc}")
    if result.status == OPTIMAL:
        return _result(m, data, True, render_solution(result, data), result)
    return _result(m, data, False, render_infeasibility(result), result)


_ARG_SPECS: dict[str, dict[str, tuple[type, ...]]] = {
    FIX_START_TIME: {"school": (str,), "time": (str,), "type": (str,)},
    CHANGE_OBJECTIVE_WEIGHT: {"objective": (str,), "w": (int, float, str)},
    ADD_OBJECTIVE_UPPER_BOUND: {"objective": (str,), "v": (int, float, str)},
    REMOVE_CONSTRAINT: {"name": (str,)},
    CALL_SOLVER: {},
}
_OPTIONAL_ARGS = {FIX_START_TIME: {"type"}}


def validate_arguments(tool: str, arguments: dict) -> dict:
    """Check an argument mapping against the tool's schema."""
    canonical = ADD_OBJECTIVE_UPPER_BOUND if tool == ADD_OBJECTIVE_CONSTRAINT_ALIAS else tool
    if canonical not in _ARG_SPECS:
        raise ToolArgumentError(f"unknown tool {tool!r}")
    spec = _ARG_SPECS[canonical]
    optional = _OPTIONAL_ARGS.get(canonical, set())
    unknown = set(arguments) - set(spec)
    if unknown:
        raise ToolArgumentError(f"{tool}: unexpected argument(s) {sorted(unknown)}")
    missing = set(spec) - set(arguments) - optional
    if missing:
        raise ToolArgumentError(f"{tool}: missing argument(s) {sorted(missing)}")
    for key, value in arguments.items():
        if not isinstance(value, spec[key]):
            raise ToolArgumentError(
                f"{tool}: argument {key!r} has type {type(value).__name__}"
            )
    return dict(arguments)


def execute_tool(m: ModelState, data: Sequence[SchoolRecord], call: ToolCall) -> ToolResult:
    """Dispatch one validated tool call against the model."""
    args = validate_arguments(call.tool, call.arguments)
    tool = call.tool
    if tool == ADD_OBJECTIVE_CONSTRAINT_ALIAS:
        tool = ADD_OBJECTIVE_UPPER_BOUND
    if tool == FIX_START_TIME:
        return fix_start_time(m, data, args["school"], args["time"], args.get("type", "fix"))
    if tool == CHANGE_OBJECTIVE_WEIGHT:
        return change_objective_weight(m, data, args["objective"], args["w"])
    if tool == ADD_OBJECTIVE_UPPER_BOUND:
        return add_objective_upper_bound(m, data, args["objective"], args["v"])
    if tool == REMOVE_CONSTRAINT:
        return remove_constraint(m, data, args["name"])
    return call_solver(m, data)


def tool_schemas() -> list[dict]:
    """Chat-completions function descriptors for the optimization toolkit."""
    slot_labels = [s.label for s in SLOTS]
    return [
        {
            "name": FIX_START_TIME,
            "description": (
                "Fix a school to a start time, or forbid a start time for a school. "
                "Conflicting earlier constraints on the same school are removed "
                "automatically."
            ),
            "parameters": {
                "type": "object",
                "properties": {
                    "school": {"type": "string", "description": "Full school name."},
                    "time": {"type": "string", "enum": slot_labels},
                    "type": {"type": "string", "enum": ["fix", "forbid"], "default": "fix"},
                },
                "required": ["school", "time"],
            },
        },
        {
            "name": CHANGE_OBJECTIVE_WEIGHT,
            "description": "Set the non-negative weight on one objective.",
            "parameters": {
                "type": "object",
                "properties": {
                    "objective": {"type": "string", "enum": list(OBJECTIVES)},
                    "w": {"type": "number", "minimum": 0},
                },
                "required": ["objective", "w"],
            },
        },
        {
            "name": ADD_OBJECTIVE_UPPER_BOUND,
            "description": (
                "Impose an upper bound on an objective value "
                "(student_load_balancing in hundreds of students, "
                "schedule_deviation in minutes). Replaces any existing bound "
                "on the same objective."
            ),
            "parameters": {
                "type": "object",
                "properties": {
                    "objective": {"type": "string", "enum": list(OBJECTIVES)},
                    "v": {"type": "number", "minimum": 0},
                },
                "required": ["objective", "v"],
            },
        },
        {
            "name": REMOVE_CONSTRAINT,
            "description": "Remove an existing constraint by its registered name.",
            "parameters": {
                "type": "object",
                "properties": {"name": {"type": "string"}},
                "required": ["name"],
            },
        },
        {
            "name": CALL_SOLVER,
            "description": "Solve the current model and return the proposed schedule.",
            "parameters": {"type": "object", "properties": {}},
        },
    ]
