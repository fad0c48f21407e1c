from __future__ import annotations

import json
from types import SimpleNamespace

import pytest
import requests

from bellsched.generator import DecisionAgentConfig
from bellsched.model import default_model, solve
from bellsched.replay import ortega_parent_agent, replay_provider_configs
from bellsched.runtime import (
    SCRIPTED,
    AuthenticationError,
    ChatMessage,
    DecisionAgentState,
    HttpChatProvider,
    OptimizationAgentState,
    ProviderConfig,
    ProviderError,
    ScriptExhaustedError,
    ScriptedProvider,
    TurnError,
    build_decision_prompt,
    build_optimization_prompt,
    check_utility_schema,
    make_provider,
    run_decision_turn,
    run_optimization_turn,
    split_end_marker,
)

OPENING_FIRST_WORDS = "Looking at the schedule from what I know"


def _opt_state(data, script):
    default_solution = solve(default_model(), data)
    return OptimizationAgentState.create(
        provider=ScriptedProvider(script),
        data=data,
        model=default_model(),
        system_prompt=build_optimization_prompt("tpp", data, default_solution),
        opening_text="opening",
    )


def _dec_state(data, agent, script):
    return DecisionAgentState.create(
        provider=ScriptedProvider(script), agent=agent, data=data
    )


# --- providers --------------------------------------------------------------


def test_scripted_provider_replays_bundled_opening(data):
    _, dec_cfg = replay_provider_configs()
    provider = make_provider(dec_cfg)
    reply = provider.chat([ChatMessage("system", "x")], [])
    assert reply.content.startswith(OPENING_FIRST_WORDS)


def test_scripted_provider_exhaustion():
    provider = ScriptedProvider([{"content": "only turn"}])
    provider.chat([], [])
    with pytest.raises(ScriptExhaustedError, match="turn 1"):
        provider.chat([], [])


def test_scripted_provider_per_conversation_cursors():
    provider = ScriptedProvider({"*": [{"content": "a"}, {"content": "b"}]})
    assert provider.chat([], [], "c1").content == "a"
    assert provider.chat([], [], "c2").content == "a"
    assert provider.chat([], [], "c1").content == "b"


class _FakeSession:
    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls.append({"url": url, "json": json, "headers": headers})
        item = self.responses.pop(0)
        if isinstance(item, Exception):
            raise item
        status, body = item
        return SimpleNamespace(status_code=status, text=str(body), json=lambda: body)


def _http_cfg(**kw):
    defaults = dict(kind="http_chat", model_name="test-model", endpoint="http://llm.test/v1",
                    max_retries=3, retry_base_delay=0.0)
    defaults.update(kw)
    return ProviderConfig(**defaults)


def test_http_provider_success_parses_tool_calls():
    body = {
        "choices": [{
            "message": {
                "content": None,
                "tool_calls": [{
                    "id": "call_1",
                    "function": {"name": "call_solver", "arguments": "{}"},
                }],
            }
        }]
    }
    session = _FakeSession([(200, body)])
    provider = HttpChatProvider(_http_cfg(), session=session)
    reply = provider.chat([ChatMessage("system", "s"), ChatMessage("user", "hi")], [])
    assert reply.tool_calls[0].name == "call_solver"
    assert reply.tool_calls[0].arguments == {}
    assert session.calls[0]["url"] == "http://llm.test/v1/chat/completions"
    assert session.calls[0]["json"]["model"] == "test-model"


def test_http_provider_retries_then_fails():
    session = _FakeSession([
        requests.ConnectionError("boom"),
        (503, {"error": "overloaded"}),
        requests.Timeout("slow"),
    ])
    provider = HttpChatProvider(_http_cfg(), session=session)
    with pytest.raises(ProviderError, match="after retries"):
        provider.chat([ChatMessage("system", "s")], [])
    assert len(session.calls) == 3


def test_http_provider_auth_error_after_retries():
    session = _FakeSession([(401, "no key")] * 3)
    provider = HttpChatProvider(_http_cfg(), session=session)
    with pytest.raises(AuthenticationError):
        provider.chat([ChatMessage("system", "s")], [])
    assert len(session.calls) == 3


def test_http_provider_surfaces_malformed_arguments():
    body = {
        "choices": [{
            "message": {
                "content": None,
                "tool_calls": [{
                    "id": "c",
                    "function": {"name": "fix_start_time", "arguments": "{not json"},
                }],
            }
        }]
    }
    provider = HttpChatProvider(_http_cfg(), session=_FakeSession([(200, body)]))
    reply = provider.chat([ChatMessage("system", "s")], [])
    assert reply.tool_calls[0].arguments == "{not json"


# --- prompts ----------------------------------------------------------------


def test_optimization_prompt_contents(data):
    prompt = build_optimization_prompt("tpp", data, solve(default_model(), data))
    assert "25.65 (2,565 students)" in prompt
    assert "8.5 minutes" in prompt
    for rec in data:
        assert rec.name in prompt
    assert "the constraint must be binding" in prompt


def test_decision_prompt_utility_table(data, ortega_parent_spec):
    agent = DecisionAgentConfig(
        id="a", utility=ortega_parent_spec, persona="parent",
        comm_style="vague", feedback_style="rich",
    )
    prompt = build_decision_prompt(agent, data)
    assert "| Ortega (Jose) PK starts at 7:50 AM | 0.252 |" in prompt
    assert "| Ortega (Jose) PK starts at 8:40 AM | 0.126 |" in prompt
    assert "**0.748**" in prompt
    assert "I'd really love to see if we could start on the later side" in prompt
    assert "__END__" in prompt


def test_decision_prompt_binary_tool_description_reveals_no_values(data, ortega_parent_spec):
    binary_desc = check_utility_schema("binary")["description"]
    rich_desc = check_utility_schema("rich")["description"]
    assert "utility value" not in binary_desc
    assert "yes or no" in binary_desc
    assert "utility value" in rich_desc


def test_decision_prompt_variants(data, ortega_parent_spec):
    base = DecisionAgentConfig(
        id="a", utility=ortega_parent_spec, persona="parent",
        comm_style="precise", feedback_style="binary",
    )
    default_prompt = build_decision_prompt(base, data)
    assert "share everything upfront" not in default_prompt

    aware = DecisionAgentConfig(
        id="b", utility=ortega_parent_spec, persona="parent",
        comm_style="precise", feedback_style="binary",
        prompt_variant="optimization_aware",
    )
    aware_prompt = build_decision_prompt(aware, data)
    assert "share everything upfront" in aware_prompt

    no_ctx = DecisionAgentConfig(
        id="c", utility=ortega_parent_spec, persona="principal",
        comm_style="vague", feedback_style="rich", prompt_variant="no_context",
    )
    no_ctx_prompt = build_decision_prompt(no_ctx, data)
    assert no_ctx_prompt.startswith("# Extra Duty: Describe the Problem")


# --- optimization turns -------------------------------------------------------


def test_optimization_turn_fix_and_solve(data, ortega_750):
    script = [
        {"tool_calls": [
            {"tool": "fix_start_time",
             "arguments": {"school": "Ortega (Jose) PK", "time": "7:50 AM", "type": "fix"}},
            {"tool": "call_solver", "arguments": {}},
        ]},
        {"content": "done"},
    ]
    state = _opt_state(data, script)
    result = run_optimization_turn(state, "could Ortega start at 7:50?")
    assert result.visible_text == "done"
    assert result.solver_calls == 1
    assert result.schedules_presented == [ortega_750]
    tool_messages = [m for m in state.messages if m.role == "tool"]
    assert len(tool_messages) == 2
    assert "Model summary" in tool_messages[-1].content


def test_optimization_turn_plain_text(data):
    state = _opt_state(data, [{"content": "just words"}])
    result = run_optimization_turn(state, "hello")
    assert result.solver_calls == 0
    assert result.schedules_presented == []


def test_optimization_turn_infeasible_probe(data):
    script = [
        {"tool_calls": [
            {"tool": "fix_start_time",
             "arguments": {"school": "Everett MS", "time": "9:30 AM", "type": "fix"}},
            {"tool": "add_objective_upper_bound",
             "arguments": {"objective": "schedule_deviation", "v": 16}},
            {"tool": "call_solver", "arguments": {}},
        ]},
        {"content": "it is not possible to go below 16 minutes for the entire district"},
    ]
    state = _opt_state(data, script)
    result = run_optimization_turn(state, "Everett at 9:30 and keep changes under 16")
    assert result.solver_calls == 1
    assert result.schedules_presented == []
    solver_result = result.executed_tools[-1][1]
    assert not solver_result.ok
    assert "16.5" in solver_result.message
    assert "below 16" in result.visible_text


def test_optimization_turn_repair_round_trip(data):
    script = [
        {"tool_calls": [{"tool": "fix_start_time", "arguments": {"wrong": "args"}}]},
        {"content": "sorry, let me reconsider"},
    ]
    state = _opt_state(data, script)
    result = run_optimization_turn(state, "请")
    assert result.visible_text == "sorry, let me reconsider"
    repair = [m for m in state.messages if m.role == "tool"][-1]
    assert "Invalid tool call" in repair.content


def test_optimization_turn_second_malformed_errors(data):
    script = [
        {"tool_calls": [{"tool": "fix_start_time", "arguments": {"wrong": "args"}}]},
        {"tool_calls": [{"tool": "fix_start_time", "arguments": {"still": "bad"}}]},
    ]
    state = _opt_state(data, script)
    with pytest.raises(TurnError, match="malformed"):
        run_optimization_turn(state, "x")


def test_optimization_turn_tool_cap(data):
    script = [{"tool_calls": [{"tool": "call_solver", "arguments": {}}]}] * 10
    state = _opt_state(data, script)
    result = run_optimization_turn(state, "loop forever")
    assert result.tool_cap_hit
    assert result.solver_calls == state.tool_iteration_cap
    assert result.visible_text  # templated apology


# --- decision turns -----------------------------------------------------------


def test_decision_turn_max_reached_and_end_marker(data, final_ortega):
    agent = ortega_parent_agent()
    state = _dec_state(data, agent, [{"content": "This looks great, thanks! __END__"}])
    result = run_decision_turn(state, "presenting the final schedule", [final_ortega])
    assert result.ended
    assert result.message == "This looks great, thanks!"
    assert len(result.evaluations) == 1
    assert result.evaluations[0].is_max
    assert result.evaluations[0].initiated_by == "harness"


def test_decision_turn_default_not_max(data, default_schedule):
    agent = ortega_parent_agent()
    state = _dec_state(data, agent, [{"content": "not quite right yet"}])
    result = run_decision_turn(state, "opening", [default_schedule])
    assert not result.ended
    assert not result.evaluations[0].is_max


def test_decision_turn_two_schedules_two_evaluations(data, default_schedule, ortega_840):
    agent = ortega_parent_agent()
    state = _dec_state(data, agent, [{"content": "hmm"}])
    result = run_decision_turn(state, "two options", [default_schedule, ortega_840])
    assert len(result.evaluations) == 2


def test_decision_turn_agent_initiated_check_and_non_slot_time(data):
    agent = ortega_parent_agent()
    labels = {rec.name: "7:50 AM" for rec in data}
    bad = dict(labels)
    bad["Balboa HS"] = "9:00 AM"
    script = [
        {"tool_calls": [{"tool": "check_utility", "arguments": {"start_times": bad}}]},
        {"tool_calls": [{"tool": "check_utility", "arguments": {"start_times": labels}}]},
        {"content": "checked them"},
    ]
    state = _dec_state(data, agent, script)
    result = run_decision_turn(state, "look at these", [])
    assert len(result.evaluations) == 1  # only the valid call scored
    rejection = [m for m in state.messages if m.role == "tool"][0]
    assert "not a standardized time" in rejection.content


def test_binary_feedback_record_is_one_bit(data, default_schedule):
    agent = ortega_parent_agent()
    binary_agent = DecisionAgentConfig(
        id="b", utility=agent.utility, persona=agent.persona,
        comm_style=agent.comm_style, feedback_style="binary",
    )
    state = _dec_state(data, binary_agent, [{"content": "ok"}])
    result = run_decision_turn(state, "opening", [default_schedule])
    assert result.evaluations[0].record == {"is_max": False}


def test_split_end_marker():
    assert split_end_marker("done __END__") == ("done", True)
    assert split_end_marker("__END__") == ("", True)
    assert split_end_marker("no marker here") == ("no marker here", False)
    assert split_end_marker("not__END__a token") == ("not__END__a token", False)


def test_provider_config_validation():
    with pytest.raises(ValueError, match="model_name"):
        ProviderConfig(kind="http_chat").validate()
    with pytest.raises(ValueError, match="script"):
        ProviderConfig(kind="scripted").validate()
    with pytest.raises(ValueError, match="unknown provider"):
        ProviderConfig(kind="telepathy").validate()
    ProviderConfig(kind=SCRIPTED, script=[]).validate()
