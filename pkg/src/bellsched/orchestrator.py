"""Full conversation protocol: opening proposal, alternating turns, scoring.

A conversation starts with the harness presenting the default model's solved
schedule, then alternates decision-agent and optimization-agent turns until
the decision agent's maximum utility is reached, the agent ends the dialogue,
or the decision-turn cap is hit. Every presented schedule is scored; the best
one determines the conversation's score pi = best utility / max utility.
Transcripts are JSON Lines and replay byte-identically under scripted
providers.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

from .domain import Schedule, SchoolRecord
from .fmt import decimal_str, parse_rational
from .generator import DecisionAgentConfig
from .model import OPTIMAL, default_model, solve
from .runtime import (
    SCRIPTED,
    DecisionAgentState,
    OptimizationAgentState,
    ProviderConfig,
    ProviderError,
    TurnError,
    UtilityCheckEvent,
    build_optimization_prompt,
    make_provider,
    run_decision_turn,
    run_optimization_turn,
)
from .toolkit import CALL_SOLVER, render_solution
from .utility import BINARY, check_utility, evaluate_utility, oracle_max

CONVERSATION = "conversation"
ONE_SHOT = "one_shot"
AWARE_ONE_SHOT = "aware_one_shot"
MODES = (CONVERSATION, ONE_SHOT, AWARE_ONE_SHOT)

MAX_UTILITY_REACHED = "max_utility_reached"
AGENT_ENDED = "agent_ended"
TURN_CAP = "turn_cap"
ERROR = "error"

TRANSCRIPT_SCHEMA_VERSION = 1

_EPOCH_ISO = "1970-01-01T00:00:00+00:00"


@dataclass(frozen=True)
class ConversationConfig:
    opt_provider: ProviderConfig
    dec_provider: ProviderConfig
    mode: str = CONVERSATION
    max_decision_turns: int = 20
    design: str = "tpp"
    dataset_id: str = "dataset"
    rng_seed: int = 0
    clock: Callable[[], str] | None = None

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.max_decision_turns < 1:
            raise ValueError("max_decision_turns must be >= 1")

    @property
    def effective_turn_cap(self) -> int:
        return 1 if self.mode in (ONE_SHOT, AWARE_ONE_SHOT) else self.max_decision_turns


@dataclass
class ConversationOutcome:
    termination: str
    best_schedule: Schedule | None
    best_utility: Fraction
    u_star: Fraction
    pi: Fraction
    success: bool
    decision_turns: int
    solver_calls: int

    def to_json_dict(self) -> dict:
        return {
            "termination": self.termination,
            "best_schedule": list(self.best_schedule.slots) if self.best_schedule else None,
            "best_utility": decimal_str(self.best_utility),
            "u_star": decimal_str(self.u_star),
            "pi": float(self.pi),
            "success": self.success,
            "decision_turns": self.decision_turns,
            "solver_calls": self.solver_calls,
        }


@dataclass
class Transcript:
    header: dict
    events: list[dict] = field(default_factory=list)
    outcome: ConversationOutcome | None = None

    @property
    def conversation_id(self) -> str:
        h = self.header
        return f"{h['dataset_id']}__{h['agent_id']}__{h['design']}__{h['mode']}"


def detect_termination(
    reached_max: bool, agent_ended: bool, decision_turns: int, turn_cap: int
) -> str | None:
    """Termination reason after a decision turn, in priority order."""
    if reached_max:
        return MAX_UTILITY_REACHED
    if agent_ended:
        return AGENT_ENDED
    if decision_turns >= turn_cap:
        return TURN_CAP
    return None


def _default_clock(cfg: ConversationConfig) -> Callable[[], str]:
    if cfg.clock is not None:
        return cfg.clock
    if cfg.opt_provider.kind == SCRIPTED and cfg.dec_provider.kind == SCRIPTED:
        return lambda: _EPOCH_ISO  # replay determinism
    return lambda: datetime.now(timezone.utc).isoformat()


def render_opening(data: Sequence[SchoolRecord]) -> tuple[str, Schedule]:
    """Harness-authored first message: the solved default model's schedule."""
    result = solve(default_model(), data)
    assert result.status == OPTIMAL and result.schedule is not None
    text = (
        "Hello! I'm the district's scheduling assistant. Based on the current "
        "model, here is the proposed schedule:\n\n"
        + render_solution(result, data)
        + "\n\nLet me know what you think — I can adjust trade-offs between "
        "transportation load and schedule changes, or look at specific schools."
    )
    return text, result.schedule


class _Recorder:
    """Sequenced transcript event log with running best-solution tracking."""

    def __init__(self, data: Sequence[SchoolRecord], spec_u_star: Fraction):
        self.data = data
        self.events: list[dict] = []
        self.best_total = Fraction(0)
        self.best_schedule: Schedule | None = None
        self.u_star = spec_u_star
        self._seq = 0

    def add(self, actor: str, type_: str, **payload) -> None:
        self._seq += 1
        self.events.append({"seq": self._seq, "actor": actor, "type": type_, **payload})

    def schedule_payload(self, schedule: Schedule) -> dict:
        return {
            "slots": list(schedule.slots),
            "labels": schedule.as_labels(self.data),
        }

    def record_check(self, event: UtilityCheckEvent, spec, total: Fraction) -> None:
        self.add(
            "tool",
            "check_utility",
            style=event.style,
            initiated_by=event.initiated_by,
            schedule=self.schedule_payload(event.schedule),
            feedback=event.record,
        )
        if self.best_schedule is None or total > self.best_total:
            self.best_total = total
            self.best_schedule = event.schedule


def run_conversation(
    cfg: ConversationConfig,
    agent: DecisionAgentConfig,
    data: Sequence[SchoolRecord],
    history_sink: dict | None = None,
) -> Transcript:
    """Run one full interaction M(optimizer, decision agent) and score it.

    ``history_sink``, when given, receives the raw message histories of both
    sides under the keys "optimization" and "decision" (useful for audits).
    """
    cfg.validate()
    agent.validate()
    if cfg.mode == AWARE_ONE_SHOT and agent.prompt_variant == "default":
        agent = replace(agent, prompt_variant="optimization_aware")
    spec = agent.utility
    oracle = oracle_max(spec, data)
    clock = _default_clock(cfg)
    header = {
        "schema_version": TRANSCRIPT_SCHEMA_VERSION,
        "dataset_id": cfg.dataset_id,
        "agent_id": agent.id,
        "utility_id": spec.id,
        "persona": agent.persona,
        "comm_style": agent.comm_style,
        "feedback_style": agent.feedback_style,
        "prompt_variant": agent.prompt_variant,
        "design": cfg.design,
        "mode": cfg.mode,
        "max_decision_turns": cfg.effective_turn_cap,
        "providers": {
            "optimization": cfg.opt_provider.to_json_dict(),
            "decision": cfg.dec_provider.to_json_dict(),
        },
        "created_at": clock(),
    }
    transcript = Transcript(header)
    conversation_id = f"{cfg.dataset_id}__{agent.id}__{cfg.design}__{cfg.mode}"

    recorder = _Recorder(data, oracle.u_star)
    default_solution = solve(default_model(), data)
    opening_text, opening_schedule = render_opening(data)
    recorder.add(
        "harness",
        "opening",
        text=opening_text,
        schedule=recorder.schedule_payload(opening_schedule),
    )

    opt_state = OptimizationAgentState.create(
        provider=make_provider(cfg.opt_provider),
        data=data,
        model=default_model(),
        system_prompt=build_optimization_prompt(cfg.design, data, default_solution),
        opening_text=opening_text,
        conversation_id=conversation_id,
    )
    dec_state = DecisionAgentState.create(
        provider=make_provider(cfg.dec_provider),
        agent=agent,
        data=data,
        conversation_id=conversation_id,
    )
    if history_sink is not None:
        history_sink["optimization"] = opt_state.messages
        history_sink["decision"] = dec_state.messages

    def total_of(event: UtilityCheckEvent) -> Fraction:
        return evaluate_utility(spec, event.schedule, data).total

    decision_turns = 0
    solver_calls = 0
    termination: str | None = None
    presented_text = opening_text
    presented_schedules: list[Schedule] = [opening_schedule]

    try:
        while True:
            dec_result = run_decision_turn(dec_state, presented_text, presented_schedules)
            decision_turns += 1
            reached_max = False
            for event in dec_result.evaluations:
                recorder.record_check(event, spec, total_of(event))
                reached_max = reached_max or event.is_max
            recorder.add("decision", "message", text=dec_result.message)
            termination = detect_termination(
                reached_max, dec_result.ended, decision_turns, cfg.effective_turn_cap
            )
            if termination and not (
                termination == TURN_CAP and cfg.mode in (ONE_SHOT, AWARE_ONE_SHOT)
            ):
                break

            opt_result = run_optimization_turn(opt_state, dec_result.message)
            for call, result in opt_result.executed_tools:
                payload = {
                    "tool": call.tool,
                    "arguments": call.arguments,
                    "ok": result.ok,
                    "message": result.message,
                    "model_summary": result.model_summary,
                }
                if call.tool == CALL_SOLVER and result.solve_result is not None:
                    payload["solve_status"] = result.solve_result.status
                    if result.solve_result.schedule is not None:
                        payload["schedule"] = recorder.schedule_payload(
                            result.solve_result.schedule
                        )
                recorder.add("tool", "tool_call", **payload)
            solver_calls += opt_result.solver_calls
            if opt_result.tool_cap_hit:
                recorder.add("harness", "tool_cap_reached")
            recorder.add("optimization", "message", text=opt_result.visible_text)

            if cfg.mode in (ONE_SHOT, AWARE_ONE_SHOT):
                reached_max = False
                for schedule in opt_result.schedules_presented:
                    record = check_utility(spec, schedule, agent.feedback_style, data)
                    shared = (
                        {"is_max": record["is_max"]}
                        if agent.feedback_style == BINARY
                        else record
                    )
                    event = UtilityCheckEvent(
                        schedule, agent.feedback_style, shared, bool(record["is_max"]), "harness"
                    )
                    recorder.record_check(event, spec, total_of(event))
                    reached_max = reached_max or event.is_max
                termination = MAX_UTILITY_REACHED if reached_max else TURN_CAP
                break

            presented_text = opt_result.visible_text
            presented_schedules = opt_result.schedules_presented
    except (ProviderError, TurnError) as exc:
        recorder.add("harness", "error", message=str(exc))
        termination = ERROR

    recorder.add("harness", "termination", reason=termination)
    pi = recorder.best_total / oracle.u_star
    transcript.events = recorder.events
    transcript.outcome = ConversationOutcome(
        termination=termination or ERROR,
        best_schedule=recorder.best_schedule,
        best_utility=recorder.best_total,
        u_star=oracle.u_star,
        pi=pi,
        success=pi == 1,
        decision_turns=decision_turns,
        solver_calls=solver_calls,
    )
    return transcript


def transcript_filename(t: Transcript) -> str:
    h = t.header
    return f"{h['dataset_id']}__{h['agent_id']}__{h['design']}__{h['mode']}.jsonl"


def dump_transcript(t: Transcript) -> str:
    """Serialize a transcript to JSON Lines (header, events, outcome last)."""
    if t.outcome is None:
        raise ValueError("transcript has no outcome yet")
    lines = [json.dumps({"header": t.header}, sort_keys=True, separators=(",", ":"))]
    for event in t.events:
        lines.append(json.dumps({"event": event}, sort_keys=True, separators=(",", ":")))
    lines.append(
        json.dumps({"outcome": t.outcome.to_json_dict()}, sort_keys=True, separators=(",", ":"))
    )
    return "\n".join(lines) + "\n"


def persist_transcript(t: Transcript, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / transcript_filename(t)
    path.write_text(dump_transcript(t), "utf-8")
    return path


def load_transcript(path: str | Path) -> Transcript:
    lines = Path(path).read_text("utf-8").splitlines()
    header = json.loads(lines[0])["header"]
    events = []
    outcome = None
    for line in lines[1:]:
        doc = json.loads(line)
        if "event" in doc:
            events.append(doc["event"])
        elif "outcome" in doc:
            raw = doc["outcome"]
            best_utility = parse_rational(raw["best_utility"])
            u_star = parse_rational(raw["u_star"])
            outcome = ConversationOutcome(
                termination=raw["termination"],
                best_schedule=Schedule(tuple(raw["best_schedule"]))
                if raw.get("best_schedule")
                else None,
                best_utility=best_utility,
                u_star=u_star,
                pi=best_utility / u_star if u_star else Fraction(0),
                success=raw["success"],
                decision_turns=raw["decision_turns"],
                solver_calls=raw["solver_calls"],
            )
    return Transcript(header, events, outcome)


def run_batch(
    cfg: ConversationConfig,
    agents: Sequence[DecisionAgentConfig],
    data: Sequence[SchoolRecord],
    out_dir: str | Path,
    parallel: int = 1,
) -> dict:
    """Run one conversation per agent (optionally in parallel) and index outcomes."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results: dict[str, Transcript] = {}
    lock = threading.Lock()

    def one(agent: DecisionAgentConfig) -> None:
        transcript = run_conversation(cfg, agent, data)
        persist_transcript(transcript, out)
        with lock:
            results[agent.id] = transcript

    if parallel <= 1:
        for agent in agents:
            one(agent)
    else:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            list(pool.map(one, agents))

    outcomes = []
    n_errored = 0
    for agent in agents:
        t = results[agent.id]
        assert t.outcome is not None
        if t.outcome.termination == ERROR:
            n_errored += 1
        outcomes.append(
            {
                "agent_id": agent.id,
                "utility_id": agent.utility.id,
                "persona": agent.persona,
                "comm_style": agent.comm_style,
                "feedback_style": agent.feedback_style,
                "termination": t.outcome.termination,
                "pi": float(t.outcome.pi),
                "best_utility": decimal_str(t.outcome.best_utility),
                "u_star": decimal_str(t.outcome.u_star),
                "success": t.outcome.success,
                "decision_turns": t.outcome.decision_turns,
                "solver_calls": t.outcome.solver_calls,
                "transcript": transcript_filename(t),
            }
        )
    manifest = {
        "schema_version": TRANSCRIPT_SCHEMA_VERSION,
        "dataset_id": cfg.dataset_id,
        "design": cfg.design,
        "mode": cfg.mode,
        "model": cfg.opt_provider.model_name or "scripted",
        "max_decision_turns": cfg.effective_turn_cap,
        "providers": {
            "optimization": cfg.opt_provider.to_json_dict(),
            "decision": cfg.dec_provider.to_json_dict(),
        },
        "n_conversations": len(agents),
        "n_errored": n_errored,
        "outcomes": sorted(outcomes, key=lambda o: o["agent_id"]),
    }
    (out / "run.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", "utf-8")
    return manifest
