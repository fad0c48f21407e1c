"""Replay the bundled eight-turn conversation and inspect its transcript.

Both sides are scripted providers, so the run is fully deterministic: the
parent starts by asking for an earlier Ortega start, explores the trade-offs,
and ends at a schedule that maximizes their hidden utility — with Ortega at
the latest slot after all.
"""

import tempfile

from bellsched import canonical_school_data
from bellsched.orchestrator import ConversationConfig, persist_transcript, run_conversation
from bellsched.replay import ortega_parent_agent, replay_provider_configs

data = canonical_school_data()
opt_provider, dec_provider = replay_provider_configs()
cfg = ConversationConfig(opt_provider=opt_provider, dec_provider=dec_provider, dataset_id="demo")

transcript = run_conversation(cfg, ortega_parent_agent(), data)

for event in transcript.events:
    kind = event["type"]
    if kind == "message":
        speaker = "PARENT" if event["actor"] == "decision" else "ASSISTANT"
        first_line = event["text"].splitlines()[0]
        print(f"[{event['seq']:>2}] {speaker}: {first_line[:100]}")
    elif kind == "check_utility":
        total = event["feedback"].get("total", "hidden")
        print(f"[{event['seq']:>2}] check_utility -> total {total}")
    elif kind == "tool_call":
        print(f"[{event['seq']:>2}] tool {event['tool']} ok={event['ok']}")

outcome = transcript.outcome
print()
print(f"termination: {outcome.termination}")
print(f"score pi = {float(outcome.pi):.2f} over {outcome.decision_turns} decision turns "
      f"and {outcome.solver_calls} solver calls")

out_dir = tempfile.mkdtemp()
path = persist_transcript(transcript, out_dir)
print(f"transcript persisted to {path}")
