"""LLM provider abstraction, prompt assembly, and per-turn agent loops.

Two providers speak the same interface: an HTTP client for the
chat-completions wire format with function calling, and a scripted provider
that replays canned responses for deterministic tests and benchmarks. On top
of them sit the optimization-agent turn loop (interpret feedback, edit the
model through tools, solve, report) and the decision-agent turn loop (score
every presented schedule through ``check_utility``, reply in character).
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import requests

from .domain import SLOTS, Schedule, SchoolRecord
from .fmt import decimal_str, fmt_deviation, fmt_load
from .generator import DecisionAgentConfig
from .model import (
    DEVIATION_OBJECTIVE,
    LOAD_OBJECTIVE,
    OPTIMAL,
    ModelState,
    SolveResult,
)
from .toolkit import (
    CALL_SOLVER,
    ToolArgumentError,
    ToolCall,
    ToolResult,
    execute_tool,
    tool_schemas,
)
from .utility import (
    BINARY,
    EARLIER,
    NonStandardTimeError,
    OracleResult,
    UtilitySpec,
    check_utility,
    oracle_max,
    parse_start_times,
)

API_KEY_ENV = "LLM_API_KEY"
BASE_URL_ENV = "LLM_BASE_URL"

HTTP_CHAT = "http_chat"
SCRIPTED = "scripted"

TPP_DESIGN = "tpp"


class ProviderError(RuntimeError):
    """The provider failed to return a usable assistant message."""


class AuthenticationError(ProviderError):
    """The endpoint rejected our credentials."""


class ScriptExhaustedError(ProviderError):
    """A scripted provider was asked for a turn it has no response for."""


class TurnError(RuntimeError):
    """A turn could not be completed (repeated malformed tool calls)."""


@dataclass
class WireToolCall:
    id: str
    name: str
    arguments: dict | str  # raw string kept when the JSON payload is malformed


@dataclass
class ChatMessage:
    role: str  # system | user | assistant | tool
    content: str | None = None
    tool_calls: list[WireToolCall] | None = None
    tool_call_id: str | None = None

    def __post_init__(self) -> None:
        if self.role == "tool" and not self.tool_call_id:
            raise ValueError("tool messages must reference a tool_call_id")

    def to_wire(self) -> dict:
        doc: dict = {"role": self.role, "content": self.content}
        if self.tool_calls:
            doc["tool_calls"] = [
                {
                    "id": call.id,
                    "type": "function",
                    "function": {
                        "name": call.name,
                        "arguments": call.arguments
                        if isinstance(call.arguments, str)
                        else json.dumps(call.arguments),
                    },
                }
                for call in self.tool_calls
            ]
        if self.tool_call_id:
            doc["tool_call_id"] = self.tool_call_id
        return doc


@dataclass(frozen=True)
class ProviderConfig:
    kind: str
    model_name: str = ""
    endpoint: str = ""  # falls back to $LLM_BASE_URL
    script_path: str = ""
    script: object = None  # inline script (list or {conversation id: list})
    temperature: float | None = None
    max_tokens: int | None = None
    max_retries: int = 3
    retry_base_delay: float = 0.5
    timeout: float = 60.0

    def validate(self) -> None:
        if self.kind == HTTP_CHAT:
            if not self.model_name:
                raise ValueError("http_chat provider needs a model_name")
            if self.script_path or self.script is not None:
                raise ValueError("http_chat provider must not carry a script")
        elif self.kind == SCRIPTED:
            if not self.script_path and self.script is None:
                raise ValueError("scripted provider needs script_path or an inline script")
            if self.model_name or self.endpoint:
                raise ValueError("scripted provider must not carry http fields")
        else:
            raise ValueError(f"unknown provider kind {self.kind!r}")

    def to_json_dict(self) -> dict:
        doc = {"kind": self.kind}
        if self.kind == HTTP_CHAT:
            doc["model_name"] = self.model_name
            if self.endpoint:
                doc["endpoint"] = self.endpoint
            if self.temperature is not None:
                doc["temperature"] = self.temperature
            if self.max_tokens is not None:
                doc["max_tokens"] = self.max_tokens
        else:
            doc["script_path"] = self.script_path
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ProviderConfig":
        cfg = cls(
            kind=doc["kind"],
            model_name=doc.get("model_name", ""),
            endpoint=doc.get("endpoint", ""),
            script_path=doc.get("script_path", ""),
            temperature=doc.get("temperature"),
            max_tokens=doc.get("max_tokens"),
            max_retries=int(doc.get("max_retries", 3)),
            timeout=float(doc.get("timeout", 60.0)),
        )
        cfg.validate()
        return cfg


class Provider(Protocol):
    def chat(
        self,
        messages: Sequence[ChatMessage],
        tools: Sequence[dict],
        conversation_id: str = "*",
    ) -> ChatMessage: ...


class ScriptedProvider:
    """Replays canned assistant responses keyed by conversation id and turn.

    A script is a list of entries (one per provider call, in order), each
    ``{"content": ...}`` and/or ``{"tool_calls": [{"tool":, "arguments":}]}``.
    A dict keyed by conversation id holds one list per conversation; the key
    ``"*"`` serves any conversation not listed explicitly.
    """

    def __init__(self, script: list | dict):
        if isinstance(script, list):
            script = {"*": script}
        self._script: dict[str, list] = dict(script)
        self._cursors: dict[str, int] = {}

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedProvider":
        return cls(json.loads(Path(path).read_text("utf-8")))

    def chat(
        self,
        messages: Sequence[ChatMessage],
        tools: Sequence[dict],
        conversation_id: str = "*",
    ) -> ChatMessage:
        entries = self._script.get(conversation_id, self._script.get("*"))
        if entries is None:
            raise ScriptExhaustedError(f"no script for conversation {conversation_id!r}")
        turn = self._cursors.get(conversation_id, 0)
        if turn >= len(entries):
            raise ScriptExhaustedError(
                f"script exhausted at turn {turn} for conversation {conversation_id!r}"
            )
        self._cursors[conversation_id] = turn + 1
        entry = entries[turn]
        tool_calls = None
        if entry.get("tool_calls"):
            tool_calls = [
                WireToolCall(
                    id=f"scripted_{turn}_{j}",
                    name=item["tool"],
                    arguments=item.get("arguments", {}),
                )
                for j, item in enumerate(entry["tool_calls"])
            ]
        return ChatMessage("assistant", entry.get("content"), tool_calls)


class HttpChatProvider:
    """Chat-completions client with retry/backoff and tool-calling support."""

    def __init__(self, cfg: ProviderConfig, session: requests.Session | None = None):
        cfg.validate()
        self.cfg = cfg
        self._session = session or requests.Session()

    def _base_url(self) -> str:
        base = self.cfg.endpoint or os.environ.get(BASE_URL_ENV, "")
        if not base:
            raise ProviderError(f"no endpoint configured and ${BASE_URL_ENV} is unset")
        return base.rstrip("/")

    def chat(
        self,
        messages: Sequence[ChatMessage],
        tools: Sequence[dict],
        conversation_id: str = "*",
    ) -> ChatMessage:
        if not messages or messages[0].role != "system":
            raise ValueError("message history must start with a system message")
        payload: dict = {
            "model": self.cfg.model_name,
            "messages": [m.to_wire() for m in messages],
        }
        if tools:
            payload["tools"] = [{"type": "function", "function": t} for t in tools]
        if self.cfg.temperature is not None:
            payload["temperature"] = self.cfg.temperature
        if self.cfg.max_tokens is not None:
            payload["max_tokens"] = self.cfg.max_tokens
        headers = {}
        api_key = os.environ.get(API_KEY_ENV, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"

        url = f"{self._base_url()}/chat/completions"
        last_error: Exception | None = None
        last_status: int | None = None
        for attempt in range(self.cfg.max_retries):
            if attempt:
                time.sleep(self.cfg.retry_base_delay * 2 ** (attempt - 1))
            try:
                resp = self._session.post(
                    url, json=payload, headers=headers, timeout=self.cfg.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            last_status = resp.status_code
            if resp.status_code in (401, 403) or resp.status_code >= 500:
                last_error = ProviderError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                continue
            if resp.status_code != 200:
                raise ProviderError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            return self._parse(resp.json())
        if last_status in (401, 403):
            raise AuthenticationError(f"authentication failed after retries: {last_error}")
        raise ProviderError(f"transport failed after retries: {last_error}")

    @staticmethod
    def _parse(doc: dict) -> ChatMessage:
        try:
            message = doc["choices"][0]["message"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed chat completion response: {exc}") from exc
        tool_calls = None
        if message.get("tool_calls"):
            tool_calls = []
            for j, item in enumerate(message["tool_calls"]):
                raw = item.get("function", {}).get("arguments", "{}")
                try:
                    arguments = json.loads(raw) if isinstance(raw, str) else raw
                    if not isinstance(arguments, dict):
                        arguments = raw  # surfaced for a repair round-trip
                except json.JSONDecodeError:
                    arguments = raw
                tool_calls.append(
                    WireToolCall(
                        id=item.get("id", f"call_{j}"),
                        name=item.get("function", {}).get("name", ""),
                        arguments=arguments,
                    )
                )
        return ChatMessage("assistant", message.get("content"), tool_calls)


def make_provider(cfg: ProviderConfig) -> Provider:
    cfg.validate()
    if cfg.kind == SCRIPTED:
        if cfg.script is not None:
            return ScriptedProvider(cfg.script)  # type: ignore[arg-type]
        return ScriptedProvider.from_file(cfg.script_path)
    return HttpChatProvider(cfg)


# --- prompt assembly -------------------------------------------------------


def _school_table(
    data: Sequence[SchoolRecord], proposed: Schedule | None = None
) -> str:
    header = "| School Name | Grade | Enrollment | Current Start |"
    divider = "| --- | --- | --- | --- |"
    if proposed is not None:
        header = header[:-1] + " Proposed Start |"
        divider = divider[:-1] + " --- |"
    lines = [header, divider]
    for rec in data:
        row = f"| {rec.name} | {rec.grade_level} | {rec.enrollment} | {rec.current_start_label} |"
        if proposed is not None:
            row = row[:-1] + f" {proposed.label_of(rec.id)} |"
        lines.append(row)
    return "\n".join(lines)


def build_optimization_prompt(
    design: str, data: Sequence[SchoolRecord], default_solution: SolveResult
) -> str:
    """System prompt for the tool-driven optimization agent.

    The school table and the default schedule's objective values are rendered
    from live computation, never hard-coded.
    """
    if design.lower() != TPP_DESIGN:
        raise ValueError(f"unsupported optimization design {design!r}")
    if default_solution.status != OPTIMAL or default_solution.features is None:
        raise ValueError("default solution must be an optimal solve result")
    slots = ", ".join(s.label for s in SLOTS)
    load_line = fmt_load(default_solution.features.peak_load)
    dev_line = fmt_deviation(default_solution.features.avg_deviation)
    table = _school_table(data, default_solution.schedule)
    return f"""# Task Overview: Interactive Optimization Assistant

You are an interactive optimization assistant. Your goal is to support structured decision-making by acting as a liaison between users and an underlying optimization model. The users are stakeholders and decision-makers who are unfamiliar with optimization modeling.

You are provided with a base optimization model, described in the model cheat sheet below. When the user responds to a proposed schedule with a request, statement, or question, address that feedback through appropriate adjustments to the model using the tools in your toolkit, and facilitate a user-driven exploration of the solution space.

# Problem Setting

We are managing scheduling for a school district of {len(data)} schools serving students from pre-k through 12th grade. Each school has a current start time, and the goal is to standardize the district schedule so that schools only start at: {slots}.

The optimization balances two objectives:
1. Minimizing transportation costs, approximated by the maximum number of students starting at the same time (divided by 100 for normalization).
2. Minimizing disruption, by reducing the average change from each school's current start time.

# Model Cheat Sheet

- Feasible start times: {slots}.
- Objectives (both minimized):
  - {LOAD_OBJECTIVE}: maximum students starting at the same time (in hundreds).
  - {DEVIATION_OBJECTIVE}: average minutes shifted from current starts.
- Key constraints:
  - assign_one_start_time: each school is assigned exactly one start time.
  - max_students_per_time: the peak load variable that {LOAD_OBJECTIVE} minimizes.

# School Data

Information about schools, original schedules, and proposed start times under the base model:

{table}

The objective values associated with the initial proposed schedule are:
- Student Load Balancing: {load_line}
- Schedule Deviation: {dev_line}

# User Overview

Feedback will come from stakeholders such as parents, teachers, and administrators. Stakeholders may express feedback about how they feel about the start time for a particular school. Some users will be explicit in their requests; others may be less certain about what they want.

Each user has an internalized set of preferences with varying degrees of importance, and not all of them may be mutually satisfiable. As this becomes apparent, help the user understand why certain outcomes are not mutually satisfiable and suggest reasonable alternatives: you are helping the user understand what is possible within the solution space.

# Dialogue Instructions

The user will come to you with a comment, question, or request. Follow these steps:
1. Interpret the user request. If unclear, ask for clarification.
2. Reason through the best way to address the user's feedback.
3. If necessary, use relevant tools from your toolbox to adjust the model.
4. Use the call_solver tool to generate a new solution.
5. Report back to the user:
   - Any changes made to the model, explicitly stating any constraints imposed on the objectives (e.g., "I imposed {DEVIATION_OBJECTIVE} ≤ 18 minutes based on your comment about minimizing disruption.").
   - The new schedule, using a table of school name and proposed start time.
   - The updated objective values (e.g., "The new solution achieves schedule deviation = 17.2 minutes and student load balancing = 24.3 (2,430 students).").
6. If the user is satisfied, stop. Otherwise, await further feedback and respond accordingly.

Use the current model summary visible in the chat history to keep track of objective weights and active constraints.

# Output Format

Format responses in GitHub-flavored markdown:
- Use tables with | and ---.
- Use bullet points for lists.
- Use bold or italics for emphasis.
- Use headings (###) where helpful.
- Do not use triple backticks.

# Modeling Tips

General: each tool call returns a summary of the current state of the model. Use it to confirm the model reflects the desired adjustments.

Variable fixing: the fix_start_time tool automatically removes any conflicting constraints for the given school. You do not need to separately call remove_constraint.

Objective bounds: the add_objective_upper_bound tool automatically removes any conflicting constraints for the given objective. A bound remains in place until replaced by another bound on the same objective or explicitly removed.

When imposing a constraint to lower an objective value, the constraint must be binding (restrictive enough to eliminate the incumbent solution): if the previous solution had {LOAD_OBJECTIVE} = 24.53, impose {LOAD_OBJECTIVE} ≤ 24.53 − ε.

Do not confuse an objective value with a constraint limit. When imposing a constraint such as {LOAD_OBJECTIVE} ≤ 25, report both the constraint applied (e.g., "I limited congestion to 2,500 students") and the achieved value (e.g., "The resulting congestion was 2,070 students").

If adding a constraint results in infeasibility, resolve the infeasibility before making further adjustments (relax or remove constraints as needed).

Since both objectives are minimized: "loosen/relax" means increasing an upper bound; "tighten" means decreasing it.
"""


_VAGUE_STYLE = """You have a vague and relaxed communication style: you speak in loose terms rather than hard numbers. For example, if you'd prefer a school to move to a later start time, rather than saying

> "I'd prefer we start at 9:30 AM"

you might instead say

> "I'd really love to see if we could start on the later side"
> "Let's try something even later if we can"

When reacting to the district-wide numbers, rather than quoting a target you use loose language like

> "I'm just wondering if there's anything we can do to lower that peak student load even more"
> "That's still feeling a bit too high for me"
> "Could you show me a couple of different options where we get that number down a bit more?"

Avoid numbers and hard requirements; reference practical concerns and frame requests conditionally."""

_PRECISE_STYLE = """You have a precise and quantitative communication style: you state targets, acceptance criteria, and trade-offs in measurable terms. For example:

> "keep the student load below 2,100"
> "I could accept up to a 15 minute average change, but no more"
> "move us to 8:40 AM and show me what that does to the peak load"

Use concrete numbers whenever you express a goal or a reaction."""


def _utility_table(spec: UtilitySpec, school_name: str) -> str:
    rows = []
    for slot in SLOTS:
        value = spec.w_time * spec.f_time(slot.index)
        rows.append(f"| {school_name} starts at {slot.label} | {decimal_str(value)} |")
    dev = decimal_str(spec.dev_threshold)
    load = decimal_str(spec.load_threshold)
    load_students = spec.load_threshold * 100
    load_shown = (
        f"{int(load_students):,}" if load_students.denominator == 1 else decimal_str(load_students)
    )
    rows.append(
        f"| District-wide average schedule deviation is at most {dev} minutes "
        f"| {decimal_str(spec.w_dev)} |"
    )
    rows.append(f"| District-wide average schedule deviation exceeds {dev} minutes | 0 |")
    rows.append(
        f"| Student load balancing is at most {load} ({load_shown} students) "
        f"| {decimal_str(spec.w_load)} |"
    )
    rows.append(f"| Student load balancing exceeds {load} ({load_shown} students) | 0 |")
    return "\n".join(["| Outcome | Utility |", "| --- | --- |", *rows])


def check_utility_schema(feedback_style: str) -> dict:
    """Function descriptor for the decision agent's feedback tool."""
    if feedback_style == BINARY:
        description = (
            "Check a proposed schedule against your internal criteria. Reports only "
            "whether the schedule achieves your maximum attainable outcome (yes or no)."
        )
    else:
        description = (
            "Calculate the utility of a proposed schedule from your internal table. "
            "Reports the current utility value, the maximum attainable utility, which "
            "components are satisfied, and guidance on the unsatisfied ones."
        )
    labels = [s.label for s in SLOTS]
    return {
        "name": "check_utility",
        "description": description,
        "parameters": {
            "type": "object",
            "properties": {
                "start_times": {
                    "type": "object",
                    "description": "Full school name -> proposed start time.",
                    "additionalProperties": {"type": "string", "enum": labels},
                }
            },
            "required": ["start_times"],
        },
    }


def build_decision_prompt(
    agent: DecisionAgentConfig,
    data: Sequence[SchoolRecord],
    oracle: OracleResult | None = None,
) -> str:
    """System prompt that turns an LLM into one benchmark decision agent."""
    agent.validate()
    spec = agent.utility
    school = next(rec for rec in data if rec.id == spec.school_id)
    if oracle is None:
        oracle = oracle_max(spec, data)
    u_star = decimal_str(oracle.u_star)
    slots = ", ".join(s.label for s in SLOTS)
    style_block = _VAGUE_STYLE if agent.comm_style == "vague" else _PRECISE_STYLE
    direction_word = "as early as possible" if spec.direction == EARLIER else "as late as possible"
    table = _school_table(data)
    utility_table = _utility_table(spec, school.name)

    if agent.feedback_style == BINARY:
        tool_rules = (
            "- You must not end the conversation unless check_utility reports that the "
            "maximum is reached.\n"
            "- Even if a solution sounds good, you are not satisfied until the tool says "
            "the maximum is reached."
        )
    else:
        tool_rules = (
            f"- You must not end the conversation unless total utility equals **{u_star}**.\n"
            "- Even if a solution sounds good, you are not satisfied unless utility is "
            "maximized."
        )

    sections = []
    if agent.prompt_variant == "no_context":
        sections.append(
            "# Extra Duty: Describe the Problem\n\n"
            "The assistant you are talking to knows nothing about this scheduling "
            "problem. Begin the conversation by describing, in your character's own "
            "words, the decision problem: the schools, the standardized start times, "
            "and the district's concerns about transportation load and schedule "
            "changes. Only then give your feedback."
        )

    sections.append(
        f"""# Task Overview: Evaluating an Interactive Optimization Assistant

You are part of a team evaluating an interactive optimization assistant. Your role is to simulate a character with a given set of knowledge, traits, and internalized preferences. You will interact with the assistant completely in-character, using only the information and reasoning available to a human in your character's situation.

The resulting conversations will be used to evaluate whether the assistant understands and adapts to your concerns, justifies trade-offs convincingly, and leads you to an outcome that maximizes your internal utility.

# About Your Character

Problem Setting: the district is standardizing the schedule of {len(data)} schools so that schools only start at: {slots}. The planning tool balances transportation costs (approximated by the maximum number of students starting at the same time) against disruption (the average change from each school's current start time).

Character Traits: you are a **{agent.persona}** at **{school.name}**.

Communication Style: {style_block}

Behavior:
- Think like a real-world {agent.persona} who interacts with teachers, students, and families daily.
- Do not use technical language like "preferences", "objectives", or "optimization".
- Focus on how proposed schedules affect your core concerns as a {agent.persona} at {school.name}.
- Respond naturally and critically, as in a conversation with a real planner.

General Knowledge: everyone in the district knows the following school data.

{table}

# Character Preferences

You want {school.name} to start {direction_word}, but you are conscious of how this affects the rest of the district in terms of transportation costs and district-wide schedule changes. You may be willing to accept a different start time if the rest of the district is significantly affected.

# Internal Evaluation Criteria

This section is internal only and must not be shared, referenced, or implied in your dialogue. Use it only to decide whether your character is satisfied with the current solution.

Your internal objective is to maximize a character-specific utility function, where different solution outcomes provide different utility values:

{utility_table}

The maximum total utility your character can achieve is **{u_star}**. REMEMBER: achieving this maximum may mean giving up on one or more of your desired outcomes.

## Utility Evaluation Tool: check_utility

- What it is: {check_utility_schema(agent.feedback_style)["description"]}
- When to use it: required for each new full schedule provided by the assistant. If only partial schedules are given, request the full schedule.
- How to use it: provide a start_times dictionary mapping full school names to one of {slots}. If another time is proposed, express confusion.

Additional rules:
{tool_rules}

# Dialogue Instructions

1. Start the conversation with your thoughts on the current proposed schedule, based on your character's preferences.
2. When a new schedule is provided, call check_utility on the provided solution(s) and use the output to guide your reply.
3. If the maximum is not reached, continue the conversation in-character and offer aligned feedback.
4. When satisfied, conclude the conversation by including the phrase __END__.
5. Never end before your outcome is maximized, even if the assistant frames a solution as "balanced" or "ideal".
6. Never reference internal terms like "model", "preferences", "objectives", "utility", or "solution".
7. Remain open to suggestions from the assistant that may help guide you to your best outcome."""
    )

    if agent.prompt_variant == "optimization_aware":
        sections.append(
            "# One-Shot Setting\n\n"
            "The assistant will respond only once: there is no back-and-forth. You are "
            "told to share everything upfront — put every preference, concern, and "
            "acceptable trade-off you are aware of into your single opening message, "
            "while staying true to your communication style."
        )

    return "\n\n".join(sections)


# --- turn loops ------------------------------------------------------------


_END_MARKER = "__END__"
_END_RE = re.compile(r"(?<![0-9A-Za-z])__END__(?![0-9A-Za-z])")


def split_end_marker(text: str) -> tuple[str, bool]:
    """Detect and strip the conversation-ending token."""
    if not _END_RE.search(text):
        return text, False
    return _END_RE.sub("", text).strip(), True


@dataclass
class AgentTurnResult:
    visible_text: str
    executed_tools: list[tuple[ToolCall, ToolResult]]
    schedules_presented: list[Schedule]
    solver_calls: int
    tool_cap_hit: bool = False


@dataclass
class OptimizationAgentState:
    provider: Provider
    model: ModelState
    data: Sequence[SchoolRecord]
    messages: list[ChatMessage]
    conversation_id: str = "*"
    tool_iteration_cap: int = 8

    @classmethod
    def create(
        cls,
        provider: Provider,
        data: Sequence[SchoolRecord],
        model: ModelState,
        system_prompt: str,
        opening_text: str,
        conversation_id: str = "*",
    ) -> "OptimizationAgentState":
        return cls(
            provider=provider,
            model=model,
            data=data,
            messages=[
                ChatMessage("system", system_prompt),
                ChatMessage("assistant", opening_text),
            ],
            conversation_id=conversation_id,
        )


def run_optimization_turn(state: OptimizationAgentState, incoming: str) -> AgentTurnResult:
    """One optimization-agent turn: loop provider/tools until plain text.

    Malformed tool arguments get one automatic repair round-trip (the
    validation message is returned to the LLM); a second failure errors the
    turn. Schedules are collected only from optimal ``call_solver`` results.
    """
    state.messages.append(ChatMessage("user", incoming))
    executed: list[tuple[ToolCall, ToolResult]] = []
    schedules: list[Schedule] = []
    solver_calls = 0
    repairs = 0
    last_text = ""
    for _ in range(state.tool_iteration_cap):
        reply = state.provider.chat(state.messages, tool_schemas(), state.conversation_id)
        state.messages.append(reply)
        if not reply.tool_calls:
            return AgentTurnResult(reply.content or "", executed, schedules, solver_calls)
        if reply.content:
            last_text = reply.content
        for wire in reply.tool_calls:
            try:
                if not isinstance(wire.arguments, dict):
                    raise ToolArgumentError(
                        f"{wire.name}: arguments are not a JSON object: {wire.arguments!r}"
                    )
                call = ToolCall(wire.name, wire.arguments)
                result = execute_tool(state.model, state.data, call)
            except ToolArgumentError as exc:
                if repairs >= 1:
                    raise TurnError(f"repeated malformed tool call: {exc}") from exc
                repairs += 1
                state.messages.append(
                    ChatMessage("tool", f"Invalid tool call: {exc}", tool_call_id=wire.id)
                )
                continue
            executed.append((call, result))
            if call.tool == CALL_SOLVER:
                solver_calls += 1
                if (
                    result.solve_result is not None
                    and result.solve_result.status == OPTIMAL
                    and result.solve_result.schedule is not None
                ):
                    schedules.append(result.solve_result.schedule)
            content = f"{result.message}\n\n{result.model_summary}"
            state.messages.append(ChatMessage("tool", content, tool_call_id=wire.id))
    apology = (
        last_text
        or "I was unable to finish adjusting the model this turn. "
        "Could you rephrase or simplify the request?"
    )
    return AgentTurnResult(apology, executed, schedules, solver_calls, tool_cap_hit=True)


@dataclass
class UtilityCheckEvent:
    schedule: Schedule
    style: str
    record: dict
    is_max: bool
    initiated_by: str  # harness | agent


@dataclass
class DecisionTurnResult:
    message: str  # visible reply, end marker stripped
    ended: bool
    evaluations: list[UtilityCheckEvent]


@dataclass
class DecisionAgentState:
    provider: Provider
    agent: DecisionAgentConfig
    data: Sequence[SchoolRecord]
    messages: list[ChatMessage]
    conversation_id: str = "*"
    tool_iteration_cap: int = 8
    _counter: int = 0

    @classmethod
    def create(
        cls,
        provider: Provider,
        agent: DecisionAgentConfig,
        data: Sequence[SchoolRecord],
        conversation_id: str = "*",
    ) -> "DecisionAgentState":
        return cls(
            provider=provider,
            agent=agent,
            data=data,
            messages=[ChatMessage("system", build_decision_prompt(agent, data))],
            conversation_id=conversation_id,
        )

    def next_call_id(self, prefix: str) -> str:
        self._counter += 1
        return f"{prefix}_{self._counter}"


def _evaluate_for_agent(
    state: DecisionAgentState, schedule: Schedule, initiated_by: str
) -> UtilityCheckEvent:
    spec = state.agent.utility
    record = check_utility(spec, schedule, state.agent.feedback_style, state.data)
    is_max = bool(record["is_max"])
    shared = dict(record)
    if state.agent.feedback_style == BINARY:
        shared = {"is_max": is_max}  # exactly one bit crosses this boundary
    return UtilityCheckEvent(schedule, state.agent.feedback_style, shared, is_max, initiated_by)


def run_decision_turn(
    state: DecisionAgentState,
    presented_text: str,
    presented_schedules: Sequence[Schedule],
) -> DecisionTurnResult:
    """One decision-agent turn.

    Every schedule presented by the optimization side is scored through
    ``check_utility`` before the reply is requested (the harness enforces the
    mandatory check), and the agent may issue further check_utility calls of
    its own before answering in plain text.
    """
    state.messages.append(ChatMessage("user", presented_text))
    evaluations: list[UtilityCheckEvent] = []
    tools = [check_utility_schema(state.agent.feedback_style)]

    if presented_schedules:
        wire_calls = []
        results = []
        for schedule in presented_schedules:
            event = _evaluate_for_agent(state, schedule, "harness")
            evaluations.append(event)
            call_id = state.next_call_id("harness")
            wire_calls.append(
                WireToolCall(
                    id=call_id,
                    name="check_utility",
                    arguments={"start_times": schedule.as_labels(state.data)},
                )
            )
            results.append((call_id, event.record))
        state.messages.append(ChatMessage("assistant", None, wire_calls))
        for call_id, record in results:
            state.messages.append(
                ChatMessage("tool", json.dumps(record, sort_keys=True), tool_call_id=call_id)
            )

    for _ in range(state.tool_iteration_cap):
        reply = state.provider.chat(state.messages, tools, state.conversation_id)
        state.messages.append(reply)
        if not reply.tool_calls:
            text, ended = split_end_marker(reply.content or "")
            return DecisionTurnResult(text, ended, evaluations)
        for wire in reply.tool_calls:
            args = wire.arguments if isinstance(wire.arguments, dict) else {}
            try:
                schedule = parse_start_times(args.get("start_times", {}), state.data)
            except NonStandardTimeError as exc:
                state.messages.append(ChatMessage("tool", str(exc), tool_call_id=wire.id))
                continue
            except ValueError as exc:
                state.messages.append(
                    ChatMessage("tool", f"check_utility: {exc}", tool_call_id=wire.id)
                )
                continue
            event = _evaluate_for_agent(state, schedule, "agent")
            evaluations.append(event)
            state.messages.append(
                ChatMessage(
                    "tool", json.dumps(event.record, sort_keys=True), tool_call_id=wire.id
                )
            )
    return DecisionTurnResult("", False, evaluations)
