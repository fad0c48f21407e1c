"""Interactive school start-time optimization with a conversational benchmark.

The package has three layers:

- the decision space and exact solver (``domain``, ``model``, ``toolkit``);
- hidden stakeholder utilities, their oracle, and the benchmark generator
  (``utility``, ``generator``);
- the agent runtime and evaluation harness (``runtime``, ``orchestrator``,
  ``metrics``), plus a CLI and an HTTP session service (``cli``, ``service``).
"""

from .domain import (
    SLOTS,
    DataValidationError,
    InfeasibleSpaceError,
    Schedule,
    ScheduleFeatures,
    SchoolRecord,
    TimeSlot,
    canonical_school_data,
    compute_features,
    enumerate_schedules,
    load_school_data,
)
from .generator import (
    DecisionAgentConfig,
    GenerationConfig,
    conditional_pareto_frontier,
    generate_dataset,
    synthesize_utility,
)
from .metrics import AggregateReport, RunRecord, aggregate, emit_report, paired_comparison
from .model import (
    InfeasibilityReport,
    ModelState,
    SolveResult,
    default_model,
    min_achievable,
    model_summary,
    solve,
)
from .orchestrator import (
    ConversationConfig,
    ConversationOutcome,
    Transcript,
    detect_termination,
    persist_transcript,
    run_batch,
    run_conversation,
)
from .runtime import (
    AgentTurnResult,
    ChatMessage,
    ProviderConfig,
    build_decision_prompt,
    build_optimization_prompt,
    make_provider,
    run_decision_turn,
    run_optimization_turn,
)
from .toolkit import ToolCall, ToolResult, execute_tool, render_solution, tool_schemas
from .utility import (
    OracleResult,
    UtilityEvaluation,
    UtilitySpec,
    check_utility,
    evaluate_utility,
    oracle_max,
    score,
)

__version__ = "0.1.0"
