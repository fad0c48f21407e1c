"""A stakeholder's hidden utility, its exact oracle, and the feedback tool.

The worked example is a parent at Ortega (Jose) PK who wants an earlier
start, tolerates a peak load up to 2,500 students, and tolerates an average
change up to 11.5 minutes. Counterintuitively, their best achievable outcome
keeps Ortega at the latest slot.
"""

from fractions import Fraction

from bellsched import canonical_school_data, check_utility, evaluate_utility, oracle_max, score
from bellsched.domain import Schedule
from bellsched.utility import UtilitySpec

data = canonical_school_data()

parent = UtilitySpec(
    id="ortega-parent",
    school_id=2,
    direction="earlier",
    w_time=Fraction("0.252"),
    w_load=Fraction("0.332"),
    w_dev=Fraction("0.416"),
    load_threshold=Fraction(25),  # hundreds of students
    dev_threshold=Fraction("11.5"),  # minutes
)

oracle = oracle_max(parent, data)
print(f"Best achievable utility: {oracle.u_star} = 0.748")
for profile, witness in oracle.witnesses.items():
    print(f"  maximizing profile {profile}; witness assigns Ortega to {witness.label_of(2)}")
print()

candidates = {
    "default proposal": Schedule((3, 3, 3, 1, 2, 1, 1, 2, 2, 3)),
    "Ortega at 7:50": Schedule((3, 1, 3, 1, 1, 2, 1, 2, 2, 3)),
    "final compromise": Schedule((3, 3, 3, 1, 1, 2, 1, 2, 2, 3)),
}
for name, schedule in candidates.items():
    ev = evaluate_utility(parent, schedule, data)
    pi = score(parent, schedule, data)
    print(f"{name}: utility {float(ev.total):.3f}, score {float(pi):.3f}, satisfied {sorted(ev.satisfied)}")
print()

# The feedback tool is what a role-played decision agent actually sees.
print("binary feedback on the default proposal:",
      check_utility(parent, candidates["default proposal"], "binary", data))
rich = check_utility(parent, candidates["default proposal"], "rich", data)
print("rich feedback on the default proposal:")
for key in ("total", "u_star", "satisfied", "unsatisfied"):
    print(f"  {key}: {rich[key]}")
for hint in rich["guidance"]:
    print(f"  hint: {hint}")
