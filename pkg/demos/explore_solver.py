"""Tour of the decision space and the exact solver.

Walks through computing schedule features, solving the default model,
steering the optimum with fixes and objective bounds, and reading an
infeasibility diagnosis.
"""

from fractions import Fraction

from bellsched import canonical_school_data, compute_features, default_model, solve
from bellsched.domain import Schedule
from bellsched.fmt import decimal_str
from bellsched.model import DEVIATION_OBJECTIVE, LOAD_OBJECTIVE, ModelState, min_achievable
from bellsched.toolkit import render_infeasibility, render_solution

data = canonical_school_data()
print(f"{len(data)} schools, {sum(r.enrollment for r in data):,} students riding buses\n")

# Any assignment of schools to the three slots is a schedule; features are exact.
everyone_early = Schedule((1,) * 10)
features = compute_features(everyone_early, data)
print("If every school started at 7:50 AM:")
print(f"  peak load {features.peak_load:,} students, average change {decimal_str(features.avg_deviation)} minutes\n")

# The default model weighs peak load (in hundreds) and average change equally.
result = solve(default_model(), data)
print("Default model optimum:")
print(render_solution(result, data))
print(f"  objective value: {result.objective_value} = 25.65 + 8.5\n")

# Fixing a school reshapes the trade-off; the solver stays exact.
pinned = ModelState(fixed={2: 1})  # Ortega at the earliest slot
result = solve(pinned, data)
print("With Ortega (Jose) PK pinned to 7:50 AM:")
print(render_solution(result, data))
print()

# Bounds are inclusive and exact; an impossible bound yields a diagnosis, not a crash.
impossible = ModelState(fixed={7: 3}, bounds={DEVIATION_OBJECTIVE: Fraction(16)})
result = solve(impossible, data)
print("Everett MS at 9:30 AM with average change capped at 16 minutes:")
print(render_infeasibility(result))
print()

# min_achievable answers "what is possible" directly.
floor = min_achievable(DEVIATION_OBJECTIVE, ModelState(fixed={7: 3}), data)
print(f"Minimum average change with Everett MS at 9:30 AM: {decimal_str(floor)} minutes")
floor = min_achievable(LOAD_OBJECTIVE, ModelState(), data)
print(f"Minimum peak load over all schedules: {floor * 100} students")
