"""Independent brute-force oracles used to cross-check the fast paths.

Everything here walks the assignment space with plain Python recursion and
exact Fraction arithmetic, sharing no code with the vectorized solver or the
cached utility oracle.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from bellsched.domain import SLOTS, SchoolRecord
from bellsched.model import DEVIATION_OBJECTIVE, LOAD_OBJECTIVE, ModelState
from bellsched.utility import UtilitySpec


def _options(m: ModelState, data: Sequence[SchoolRecord]) -> list[list[int]]:
    options = []
    for rec in data:
        if rec.id in m.fixed:
            allowed = [m.fixed[rec.id]]
        else:
            allowed = [t for t in (1, 2, 3) if (rec.id, t) not in m.forbidden]
        options.append(allowed)
    return options


def brute_force_solve(
    m: ModelState, data: Sequence[SchoolRecord]
) -> tuple[str, Fraction | None, tuple[int, ...] | None]:
    """Exhaustive recursive search; returns (status, objective, assignment)."""
    n = len(data)
    options = _options(m, data)
    if any(not opts for opts in options):
        return ("Infeasible", None, None)
    dev_cost = [
        [abs(slot.minutes - rec.current_start) for slot in SLOTS] for rec in data
    ]
    enroll = [rec.enrollment for rec in data]
    load_bound = m.bounds.get(LOAD_OBJECTIVE)
    dev_bound = m.bounds.get(DEVIATION_OBJECTIVE)

    best: list = [None, None]  # objective, assignment

    def walk(i: int, l1: int, l2: int, l3: int, dev: int, bonus: Fraction) -> None:
        if i == n:
            peak = max(l1, l2, l3)
            if load_bound is not None and Fraction(peak, 100) > load_bound:
                return
            if dev_bound is not None and Fraction(dev, n) > dev_bound:
                return
            objective = m.alpha * Fraction(peak, 100) + m.beta * Fraction(dev, n) - bonus
            if best[0] is None or objective < best[0]:
                best[0] = objective
                best[1] = tuple(chosen)
            return
        rec_bonus = m.gamma
        for t in options[i]:
            chosen.append(t)
            extra = rec_bonus.get((data[i].id, t), Fraction(0))
            walk(
                i + 1,
                l1 + (enroll[i] if t == 1 else 0),
                l2 + (enroll[i] if t == 2 else 0),
                l3 + (enroll[i] if t == 3 else 0),
                dev + dev_cost[i][t - 1],
                bonus + extra,
            )
            chosen.pop()

    chosen: list[int] = []
    walk(0, 0, 0, 0, 0, Fraction(0))
    if best[0] is None:
        return ("Infeasible", None, None)
    return ("Optimal", best[0], best[1])


def brute_force_utility_max(
    spec: UtilitySpec, data: Sequence[SchoolRecord]
) -> tuple[Fraction, set[tuple[Fraction, int, int]], dict]:
    """Exhaustive utility maximization; returns (u_star, profiles, witnesses)."""
    n = len(data)
    school_pos = next(i for i, rec in enumerate(data) if rec.id == spec.school_id)
    dev_cost = [
        [abs(slot.minutes - rec.current_start) for slot in SLOTS] for rec in data
    ]
    enroll = [rec.enrollment for rec in data]

    best: list = [None]
    profiles: dict[tuple[Fraction, int, int], tuple[int, ...]] = {}

    def walk(i: int, l1: int, l2: int, l3: int, dev: int) -> None:
        if i == n:
            peak = max(l1, l2, l3)
            f_load = 1 if Fraction(peak, 100) <= spec.load_threshold else 0
            f_dev = 1 if Fraction(dev, n) <= spec.dev_threshold else 0
            f_time = spec.f_time(chosen[school_pos])
            total = spec.w_time * f_time + spec.w_load * f_load + spec.w_dev * f_dev
            if best[0] is None or total > best[0]:
                best[0] = total
                profiles.clear()
                profiles[(f_time, f_load, f_dev)] = tuple(chosen)
            elif total == best[0]:
                profiles.setdefault((f_time, f_load, f_dev), tuple(chosen))
            return
        for t in (1, 2, 3):
            chosen.append(t)
            walk(
                i + 1,
                l1 + (enroll[i] if t == 1 else 0),
                l2 + (enroll[i] if t == 2 else 0),
                l3 + (enroll[i] if t == 3 else 0),
                dev + dev_cost[i][t - 1],
            )
            chosen.pop()

    chosen: list[int] = []
    walk(0, 0, 0, 0, 0)
    return best[0], set(profiles), dict(profiles)
