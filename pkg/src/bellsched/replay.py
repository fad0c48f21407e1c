"""Bundled scripted-replay fixture: a complete scored conversation.

The scripts drive both sides of one conversation — a vague, rich-feedback
parent at Ortega (Jose) PK versus the tool-driven optimization agent — through
eight decision turns ending at the parent's maximum utility. Used by the
regression tests, the demos, and as a worked example of the transcript format.
"""

from __future__ import annotations

import json
from importlib import resources

from .generator import DecisionAgentConfig
from .runtime import SCRIPTED, ProviderConfig


def _read(name: str) -> str:
    return resources.files("bellsched.data.replay").joinpath(name).read_text("utf-8")


def ortega_parent_agent() -> DecisionAgentConfig:
    return DecisionAgentConfig.from_json(_read("ortega_parent_agent.json"))


def replay_provider_configs() -> tuple[ProviderConfig, ProviderConfig]:
    """(optimization side, decision side) scripted provider configs."""
    opt = ProviderConfig(
        kind=SCRIPTED, script=json.loads(_read("ortega_parent_optimization_script.json"))
    )
    dec = ProviderConfig(
        kind=SCRIPTED, script=json.loads(_read("ortega_parent_decision_script.json"))
    )
    return opt, dec
