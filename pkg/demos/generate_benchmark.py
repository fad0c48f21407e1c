"""Build a small benchmark population of decision agents.

Seeds come from conditional Pareto frontiers; each accepted utility makes its
seed schedule the unique best outcome at the profile level. The full default
run produces 100+ utilities (x4 agent configs); this demo caps at 8 for speed.
"""

import tempfile
from pathlib import Path

from bellsched import canonical_school_data, conditional_pareto_frontier
from bellsched.fmt import decimal_str
from bellsched.generator import GenerationConfig, generate_dataset, write_dataset

data = canonical_school_data()

frontier = conditional_pareto_frontier(school_id=2, slot_index=2, data=data)
print(f"Pareto frontier with Ortega (Jose) PK pinned to 8:40 AM: {len(frontier)} points")
for _, peak, dev in frontier[:5]:
    print(f"  peak {peak:,} students / average change {decimal_str(dev)} minutes")
print("  ...\n")

cfg = GenerationConfig(max_agents=8)
agents, manifest = generate_dataset(cfg, data)
counts = manifest["counts"]
print(f"accepted {counts['accepted']} utilities from {counts['seeds']} seeds "
      f"({counts['rejected_no_cell']} rejected)")
print(f"emitted {len(agents)} agent configs (2 communication styles x 2 feedback styles)\n")

for agent in agents[:4]:
    u = agent.utility
    weights = ", ".join(decimal_str(w) for w in (u.w_time, u.w_load, u.w_dev))
    print(f"{agent.id}: {agent.persona} at school {u.school_id}, wants {u.direction}, "
          f"weights ({weights}), L={decimal_str(u.load_threshold)}, "
          f"R={decimal_str(u.dev_threshold)}")

out = Path(tempfile.mkdtemp()) / "benchmark"
write_dataset(out, agents, manifest)
print(f"\ndataset written to {out} (manifest.json, utilities/, agents/)")
print("the same seed always reproduces byte-identical files")
