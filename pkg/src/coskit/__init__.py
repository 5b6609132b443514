"""Toolkit creation, plan/call orchestration, sandboxed execution, and
evaluation for tool-using language models."""

from .backend import (
    CALLING_INSTRUCTION,
    PLANNING_INSTRUCTION,
    Backend,
    BackendConfig,
    ChatMessage,
    ChatRequest,
    ChatResponse,
    HttpBackend,
    RecordingBackend,
    ReplayBackend,
    ScriptedBackend,
    build_baseline_prompt,
    build_calling_prompt,
    build_planning_prompt,
    build_toolkit_creation_prompt,
    make_backend,
    request_digest,
)
from .engine import (
    CallDecision,
    Plan,
    SolveTrace,
    call,
    create_toolkit,
    parse_plan_tools,
    plan,
    run_calling_test,
    run_planning_test,
    solve,
)
from .harness import (
    QueryCase,
    RunConfig,
    RunRecord,
    TaskSpec,
    load_task,
    report,
    run_eval,
)
from .metrics import (
    Matcher,
    PlanLabels,
    PlanScore,
    ReportTable,
    aggregate,
    macro_average,
    match_answer,
    plan_accuracy,
)
from .sandbox import (
    ExecutionRequest,
    ExecutionResult,
    ExecutionStatus,
    StubExecutor,
    SubprocessExecutor,
    execute,
    extract_answer,
    stub_execute,
)
from .toolkit import (
    Tool,
    Toolkit,
    load_toolkit,
    parse_toolkit,
    render_for_calling,
    render_for_planning,
    serialize_toolkit,
    validate_toolkit,
)

__version__ = "0.1.0"
