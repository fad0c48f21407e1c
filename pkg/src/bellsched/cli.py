"""Command-line entry points for every workflow.

Exit codes: 0 success, 1 validation problem (bad arguments or input files),
2 runtime failure (provider, solver, or IO errors mid-run).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .domain import DataValidationError, canonical_school_data, load_school_data
from .fmt import decimal_str
from .generator import (
    DecisionAgentConfig,
    GenerationConfig,
    generate_dataset,
    load_dataset,
    write_dataset,
)
from .metrics import aggregate, emit_report, records_from_run
from .model import INFEASIBLE, ModelState, solve
from .orchestrator import (
    AWARE_ONE_SHOT,
    CONVERSATION,
    ONE_SHOT,
    ConversationConfig,
    persist_transcript,
    run_batch,
    run_conversation,
)
from .runtime import ProviderConfig
from .toolkit import render_infeasibility, render_solution
from .utility import UtilitySpec, oracle_max

_MODE_BY_FLAG = {
    "conversation": CONVERSATION,
    "one-shot": ONE_SHOT,
    "aware-one-shot": AWARE_ONE_SHOT,
}


class CliError(Exception):
    def __init__(self, message: str, exit_code: int = 1):
        super().__init__(message)
        self.exit_code = exit_code


def _load_provider_pair(path: str) -> tuple[ProviderConfig, ProviderConfig]:
    """Provider config file: either one config for both sides, or
    ``{"optimization": {...}, "decision": {...}}``."""
    try:
        doc = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read provider config {path}: {exc}") from exc
    try:
        if "optimization" in doc or "decision" in doc:
            opt = ProviderConfig.from_json_dict(doc["optimization"])
            dec = ProviderConfig.from_json_dict(doc["decision"])
        else:
            opt = ProviderConfig.from_json_dict(doc)
            dec = ProviderConfig.from_json_dict(doc)
        return opt, dec
    except (KeyError, ValueError) as exc:
        raise CliError(f"invalid provider config {path}: {exc}") from exc


def _load_data(path: str | None):
    try:
        if path:
            return load_school_data(Path(path).read_bytes())
        return canonical_school_data()
    except (OSError, DataValidationError) as exc:
        raise CliError(f"cannot load school data: {exc}") from exc


def _cmd_gen_dataset(args: argparse.Namespace) -> int:
    data = _load_data(args.data)
    cfg = GenerationConfig(
        rng_seed=args.seed,
        samples_per_cell=args.samples,
        max_agents=args.max_agents,
    )
    agents, manifest = generate_dataset(cfg, data)
    out = write_dataset(args.out, agents, manifest)
    counts = manifest["counts"]
    print(
        f"wrote {manifest['n_agents']} agent configs "
        f"({manifest['n_utilities']} utilities) to {out}"
    )
    print(
        f"seeds: {counts['seeds']}, accepted: {counts['accepted']}, "
        f"rejected: {counts['rejected_no_cell']}, duplicates: {counts['rejected_duplicate']}"
    )
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    data = _load_data(args.data)
    try:
        spec = UtilitySpec.from_json(Path(args.utility).read_text("utf-8"))
    except (OSError, KeyError, ValueError) as exc:
        raise CliError(f"cannot load utility spec: {exc}") from exc
    result = oracle_max(spec, data)
    print(f"u_star {decimal_str(result.u_star)}")
    for profile in sorted(result.maximizing_profiles):
        f_time, f_load, f_dev = profile
        witness = result.witnesses[profile]
        print(
            f"profile (f_time={decimal_str(f_time)}, f_load={f_load}, f_dev={f_dev}) "
            "witness:"
        )
        for rec in data:
            print(f"  {rec.name}: {witness.label_of(rec.id)}")
    return 0


def _cmd_solve(args: argparse.Namespace) -> int:
    data = _load_data(args.data)
    try:
        model = ModelState.from_json(Path(args.model).read_text("utf-8"), data)
    except (OSError, KeyError, ValueError) as exc:
        raise CliError(f"cannot load model: {exc}") from exc
    result = solve(model, data)
    if result.status == INFEASIBLE:
        print(render_infeasibility(result))
        return 0
    print(render_solution(result, data))
    print(f"objective value: {decimal_str(result.objective_value)}")
    return 0


def _conversation_config(args: argparse.Namespace) -> ConversationConfig:
    opt, dec = _load_provider_pair(args.provider)
    return ConversationConfig(
        opt_provider=opt,
        dec_provider=dec,
        mode=_MODE_BY_FLAG[args.mode],
        design=args.design,
        dataset_id=args.dataset_id,
        max_decision_turns=args.max_turns,
    )


def _cmd_converse(args: argparse.Namespace) -> int:
    data = _load_data(args.data)
    try:
        agent = DecisionAgentConfig.from_json(Path(args.agent).read_text("utf-8"))
    except (OSError, KeyError, ValueError) as exc:
        raise CliError(f"cannot load agent config: {exc}") from exc
    cfg = _conversation_config(args)
    transcript = run_conversation(cfg, agent, data)
    path = persist_transcript(transcript, args.out)
    outcome = transcript.outcome
    assert outcome is not None
    print(f"transcript: {path}")
    print(
        f"termination: {outcome.termination}, pi: {float(outcome.pi):.4f}, "
        f"decision turns: {outcome.decision_turns}, solver calls: {outcome.solver_calls}"
    )
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    data = _load_data(args.data)
    try:
        agents, _manifest = load_dataset(args.dataset)
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"cannot load dataset: {exc}") from exc
    cfg = _conversation_config(args)
    manifest = run_batch(cfg, agents, data, args.out, parallel=args.parallel)
    print(
        f"ran {manifest['n_conversations']} conversations "
        f"({manifest['n_errored']} errored); run manifest at {Path(args.out) / 'run.json'}"
    )
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    runs_dir = Path(args.runs)
    run_dirs = [runs_dir] if (runs_dir / "run.json").exists() else sorted(
        p.parent for p in runs_dir.glob("*/run.json")
    )
    if not run_dirs:
        raise CliError(f"no run.json found under {runs_dir}")
    records = []
    for run_dir in run_dirs:
        records.extend(records_from_run(run_dir))
    group_by = tuple(k for k in (args.group_by or "").split(",") if k)
    try:
        reports = aggregate(records, group_by)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    text = emit_report(reports, args.format)
    if args.out:
        Path(args.out).write_text(text, "utf-8")
        print(f"wrote report to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    opt, _dec = _load_provider_pair(args.provider)
    app = create_app(opt, _load_data(args.data), snapshot_dir=args.snapshot_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellsched",
        description="School start-time optimization agent and conversational benchmark.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", help="generate the benchmark decision-agent dataset")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.add_argument("--samples", type=int, default=10_000, help="weight samples per grid cell")
    p.add_argument("--max-agents", type=int, default=None, dest="max_agents")
    p.add_argument("--data", default=None, help="alternative schools.csv")
    p.set_defaults(func=_cmd_gen_dataset)

    p = sub.add_parser("oracle", help="compute a utility's maximum over all schedules")
    p.add_argument("--utility", required=True)
    p.add_argument("--data", default=None)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("solve", help="solve a model state file")
    p.add_argument("--model", required=True)
    p.add_argument("--data", default=None)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("converse", help="run one scored conversation")
    p.add_argument("--agent", required=True)
    p.add_argument("--design", default="tpp")
    p.add_argument("--provider", required=True)
    p.add_argument("--mode", choices=sorted(_MODE_BY_FLAG), default="conversation")
    p.add_argument("--out", required=True)
    p.add_argument("--dataset-id", default="dataset", dest="dataset_id")
    p.add_argument("--max-turns", type=int, default=20, dest="max_turns")
    p.add_argument("--data", default=None)
    p.set_defaults(func=_cmd_converse)

    p = sub.add_parser("bench", help="run every agent in a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--design", default="tpp")
    p.add_argument("--provider", required=True)
    p.add_argument("--mode", choices=sorted(_MODE_BY_FLAG), default="conversation")
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--dataset-id", default="dataset", dest="dataset_id")
    p.add_argument("--max-turns", type=int, default=20, dest="max_turns")
    p.add_argument("--data", default=None)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("report", help="aggregate run outcomes into a table")
    p.add_argument("--runs", required=True)
    p.add_argument("--group-by", default="", dest="group_by")
    p.add_argument("--format", choices=["csv", "md", "markdown"], default="csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("serve", help="start the HTTP session service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--provider", required=True)
    p.add_argument("--snapshot-dir", default=None, dest="snapshot_dir")
    p.add_argument("--data", default=None)
    p.set_defaults(func=_cmd_serve)

    return parser


def cli_dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # runtime failures map to exit code 2
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_dispatch())
