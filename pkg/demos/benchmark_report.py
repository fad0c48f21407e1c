"""Run a tiny scripted benchmark batch and aggregate it into a report.

Four variants of the same underlying preferences (vague/precise x binary/rich)
are driven against a scripted optimizer; outcomes land in a run manifest that
the aggregator turns into the evaluation table, plus a paired sign test.
"""

import tempfile
from dataclasses import replace
from pathlib import Path

from bellsched import canonical_school_data
from bellsched.metrics import aggregate, emit_report, paired_comparison, records_from_run
from bellsched.orchestrator import ConversationConfig, run_batch
from bellsched.replay import ortega_parent_agent, replay_provider_configs

data = canonical_school_data()
base = ortega_parent_agent()
agents = [
    replace(base, id=f"ortega-parent-{comm}-{feedback}", comm_style=comm, feedback_style=feedback)
    for comm in ("vague", "precise")
    for feedback in ("binary", "rich")
]

opt_provider, dec_provider = replay_provider_configs()
cfg = ConversationConfig(opt_provider=opt_provider, dec_provider=dec_provider, dataset_id="mini")

out = Path(tempfile.mkdtemp()) / "run"
manifest = run_batch(cfg, agents, data, out, parallel=2)
print(f"ran {manifest['n_conversations']} conversations, {manifest['n_errored']} errored\n")

records = records_from_run(out)
reports = aggregate(records, group_by=("comm_style", "feedback_style"))
print(emit_report(reports, "markdown"))

# Paired comparison needs matching agent ids across the two record sets.
comparison = paired_comparison(records, records, metric="pi")
print(f"self-comparison sanity check: mean diff {comparison['mean_diff']}, "
      f"sign-test p = {comparison['sign_test_p']}")
