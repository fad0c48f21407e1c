"""Acceptance gate: every criterion at its stated tolerance, one line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
pass lines; any failure fails the suite.
"""

from __future__ import annotations

import random
import sys
import time
from fractions import Fraction

import pytest

from bellsched.domain import Schedule, compute_features
from bellsched.generator import GenerationConfig, generate_dataset
from bellsched.metrics import _round_str, aggregate, emit_report
from bellsched.model import (
    DEVIATION_OBJECTIVE,
    INFEASIBLE,
    OPTIMAL,
    ModelState,
    solve,
)
from bellsched.orchestrator import (
    MAX_UTILITY_REACHED,
    ONE_SHOT,
    TURN_CAP,
    ConversationConfig,
    dump_transcript,
    run_conversation,
)
from bellsched.replay import ortega_parent_agent, replay_provider_configs
from bellsched.runtime import SCRIPTED, ProviderConfig
from bellsched.utility import evaluate_utility, oracle_max
from bruteforce import brute_force_solve, brute_force_utility_max
from test_metrics import _record
from test_model import _random_state


def _report(line: str) -> None:
    print(f"ACCEPTANCE PASS: {line}", file=sys.stderr)


def test_A1_feature_fixtures(data, default_schedule, ortega_750, ortega_840):
    cases = [
        (default_schedule, 2565, Fraction(17, 2)),
        (ortega_750, 2453, Fraction(39, 2)),
        (ortega_840, 2565, Fraction(23, 2)),
    ]
    for schedule, peak, dev in cases:
        features = compute_features(schedule, data)
        assert features.peak_load == peak
        assert features.avg_deviation == dev

    start = time.perf_counter()
    repeats = 300
    for _ in range(repeats):
        for schedule, _, _ in cases:
            compute_features(schedule, data)
    per_call = (time.perf_counter() - start) / (repeats * len(cases))
    assert per_call < 1e-3, f"compute_features took {per_call * 1e3:.3f} ms"
    _report(
        "feature fixtures exact: (2565, 8.5), (2453, 19.5), (2565, 11.5); "
        f"{per_call * 1e6:.0f} us per call"
    )


def test_A2_solver_oracle_equivalence(data):
    rng = random.Random(424242)
    start = time.perf_counter()
    matches = 0
    for _ in range(100):
        m = _random_state(rng)
        fast = solve(m, data)
        status, objective, _ = brute_force_solve(m, data)
        assert fast.status == status
        if status == OPTIMAL:
            assert fast.objective_value == objective
        matches += 1
    elapsed = time.perf_counter() - start
    assert matches == 100
    assert elapsed < 30, f"equivalence sweep took {elapsed:.1f}s"
    _report(f"solver-oracle equivalence 100/100 in {elapsed:.1f}s (< 30s)")


def test_A3_infeasibility_fixture(data):
    m = ModelState(fixed={7: 3}, bounds={DEVIATION_OBJECTIVE: Fraction(16)})
    result = solve(m, data)
    assert result.status == INFEASIBLE
    assert result.infeasibility.violated_bounds == [
        (DEVIATION_OBJECTIVE, Fraction(16), Fraction(33, 2))
    ]
    _report("Everett@9:30 + deviation <= 16 is infeasible; min achievable exactly 16.5")


def test_A4_utility_oracle_fixture(data, ortega_parent_spec, final_ortega):
    oracle = oracle_max(ortega_parent_spec, data)
    assert oracle.u_star == Fraction(748, 1000)
    assert oracle.maximizing_profiles == frozenset({(Fraction(0), 1, 1)})
    assert evaluate_utility(ortega_parent_spec, final_ortega, data).total == Fraction(748, 1000)
    _report("utility oracle: u*=0.748, unique profile (0,1,1); final schedule scores 0.748")


def test_A5_score_fixture():
    pi = Fraction(733, 1000) / Fraction(920, 1000)
    assert abs(pi - Fraction(7967, 10000)) <= Fraction(1, 10000)
    assert _round_str(pi, 2) == "0.80"
    _report(f"score fixture: 0.733/0.920 = {float(pi):.4f} (within 1e-4), displays 0.80")


@pytest.mark.slow
def test_A6_dataset_generation(data):
    cfg = GenerationConfig()  # seeded defaults
    agents, manifest = generate_dataset(cfg, data)
    accepted = manifest["counts"]["accepted"]
    assert accepted >= 100, f"only {accepted} utilities accepted"
    assert manifest["n_agents"] == 4 * accepted

    by_id = {}
    for agent in agents:
        by_id[agent.utility.id] = agent.utility
    assert len(by_id) == accepted

    for uid, spec in by_id.items():
        u_star, profiles, _ = brute_force_utility_max(spec, data)
        assert len(profiles) == 1, f"{uid} has {len(profiles)} maximizing profiles"
        seed = Schedule(tuple(manifest["utilities"][uid]["seed_slots"]))
        seed_eval = evaluate_utility(spec, seed, data)
        assert seed_eval.total == u_star
        assert seed_eval.profile in profiles
    _report(
        f"dataset generation: {accepted} utilities (>= 100), {manifest['n_agents']} agents "
        "(= 4x), every spec re-verified by independent enumeration"
    )


def test_A7_end_to_end_scripted_replay(data, final_ortega):
    opt, dec = replay_provider_configs()
    cfg = ConversationConfig(opt_provider=opt, dec_provider=dec, dataset_id="replay")
    first = run_conversation(cfg, ortega_parent_agent(), data)
    second = run_conversation(cfg, ortega_parent_agent(), data)
    outcome = first.outcome
    assert outcome.termination == MAX_UTILITY_REACHED
    assert outcome.pi == 1
    assert outcome.decision_turns == 8
    assert outcome.best_schedule == final_ortega
    assert dump_transcript(first) == dump_transcript(second)
    _report("scripted replay: max_utility_reached, pi=1.0, 8 turns, byte-identical")


def test_A8_protocol_properties(data):
    agent = ortega_parent_agent()

    # never-improving optimizer hits the 20-turn cap at pi = 0.416/0.748
    stubborn = ConversationConfig(
        opt_provider=ProviderConfig(
            kind=SCRIPTED, script=[{"content": "The current proposal stands."}] * 25
        ),
        dec_provider=ProviderConfig(
            kind=SCRIPTED, script=[{"content": "Still not right for us."}] * 25
        ),
        dataset_id="stubborn",
    )
    t = run_conversation(stubborn, agent, data)
    assert t.outcome.termination == TURN_CAP
    assert t.outcome.decision_turns == 20
    assert t.outcome.pi == Fraction(416, 1000) / Fraction(748, 1000)

    # one-shot transcripts contain exactly one decision message
    one_shot = ConversationConfig(
        opt_provider=ProviderConfig(kind=SCRIPTED, script=[{"content": "Here it is."}]),
        dec_provider=ProviderConfig(
            kind=SCRIPTED, script=[{"content": "All my preferences upfront."}]
        ),
        mode=ONE_SHOT,
        dataset_id="oneshot",
    )
    t2 = run_conversation(one_shot, agent, data)
    assert len([e for e in t2.events if e["actor"] == "decision"]) == 1

    # binary-mode feedback records leak no numeric utility values
    from dataclasses import replace as dc_replace

    binary_agent = dc_replace(agent, id="ortega-parent-vague-binary", feedback_style="binary")
    t3 = run_conversation(stubborn, binary_agent, data)
    checks = [e for e in t3.events if e["type"] == "check_utility"]
    assert checks
    for event in checks:
        assert set(event["feedback"]) == {"is_max"}
        assert isinstance(event["feedback"]["is_max"], bool)
    _report(
        "protocol properties: turn_cap at 20 with pi=0.416/0.748; one-shot has one "
        "decision message; binary feedback is a single bit"
    )


def test_A9_aggregation_logic():
    records = [_record(f"s{i}", 1) for i in range(284)]
    records += [_record(f"p{i}", Fraction(8, 10)) for i in range(152)]
    (report,) = aggregate(records)
    cells = emit_report([report]).splitlines()[1].split(",")
    assert cells[0] == "All" and cells[1] == "436"
    assert cells[2] == "0.93"
    assert cells[3] == "65.1%"
    _report("aggregation reproduces pooled row: n=436, avg 0.93, success 65.1%")
