"""The chain-of-solving state machine: plan, call, execute, and the
separated plan-only / call-only test modes.

A solve runs three stages in fixed order: the planning stage produces
free-text reasoning from which tool selections are recovered lexically;
the calling stage turns plan plus selected tools into code; the
execution stage runs that code in the sandbox and the final answer is
read off its output. Stage failures are recorded on the trace, never
raised, so a batch run survives arbitrary model misbehavior.
"""
from __future__ import annotations

import re
import time
from dataclasses import dataclass, field

from .backend import (
    Backend,
    build_calling_prompt,
    build_planning_prompt,
    build_toolkit_creation_prompt,
)
from .errors import EmptyDecision, InvalidLabels, UnparseableToolkitOutput
from .metrics import Matcher, PlanLabels, PlanScore, match_answer, plan_accuracy
from .sandbox import (
    ExecutionRequest,
    ExecutionResult,
    Executor,
    tool_sources_for,
)
from .toolkit import Tool, Toolkit, build_toolkit

FENCE_RE = re.compile(r"```[A-Za-z0-9_+-]*[ \t]*\n(.*?)```", re.DOTALL)
_DEF_RE = re.compile(r"^\s*def\s+([A-Za-z_]\w*)", re.MULTILINE)

STAGE_PLAN = "plan"
STAGE_CALL = "call"
STAGE_EXECUTE = "execute"
PLAN_EMPTY = "PlanEmpty"


@dataclass(frozen=True)
class Plan:
    """Raw plan text plus the tool names it called, in first-mention order."""

    raw: str
    selected: tuple[str, ...]


@dataclass(frozen=True)
class CallDecision:
    """Code extracted from the calling-stage output, plus the full output."""

    code: str
    raw: str


@dataclass
class SolveTrace:
    query: str
    plan: Plan | None = None
    decision: CallDecision | None = None
    execution: ExecutionResult | None = None
    answer: str | None = None
    stage_timings: dict[str, float] = field(default_factory=dict)
    failed_stage: str | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.failed_stage is None and self.answer is not None


def parse_plan_tools(plan_text: str, kit: Toolkit) -> tuple[str, ...]:
    """Every toolkit name occurring in the text as a whole word, deduplicated,
    ordered by first occurrence."""
    hits: list[tuple[int, str]] = []
    for name in kit.names:
        match = re.search(rf"\b{re.escape(name)}\b", plan_text)
        if match:
            hits.append((match.start(), name))
    hits.sort()
    return tuple(name for _, name in hits)


def extract_code_blocks(text: str) -> list[str]:
    """All fenced code blocks in order, stripped of the trailing newline."""
    return [block.rstrip("\n") for block in FENCE_RE.findall(text)]


def extract_call_code(text: str) -> str:
    """Code from a calling-stage output: fenced blocks concatenated in order,
    or the whole output when nothing is fenced."""
    blocks = extract_code_blocks(text)
    code = "\n".join(blocks) if blocks else text.strip()
    if not code.strip():
        raise EmptyDecision("calling output contains no code")
    return code


def plan(query: str, kit: Toolkit, backend: Backend) -> Plan:
    response = backend.complete(build_planning_prompt(query, kit))
    return Plan(raw=response.text, selected=parse_plan_tools(response.text, kit))


def call(
    query: str,
    plan_text: str,
    kit: Toolkit,
    selected: tuple[str, ...] | list[str],
    backend: Backend,
) -> CallDecision:
    if not selected:
        raise ValueError("calling needs a non-empty tool selection")
    response = backend.complete(build_calling_prompt(query, plan_text, kit, tuple(selected)))
    if not response.text.strip():
        raise EmptyDecision("calling output is blank")
    return CallDecision(code=extract_call_code(response.text), raw=response.text)


def solve(
    query: str,
    kit: Toolkit,
    backend: Backend,
    executor: Executor,
    fallback_all_tools: bool = False,
) -> SolveTrace:
    """Full chain: plan, call, execute, answer; failures land on the trace.

    An empty tool selection fails the query as PlanEmpty unless
    ``fallback_all_tools`` passes the whole toolkit to the calling stage.
    """
    trace = SolveTrace(query=query)

    start = time.perf_counter()
    try:
        trace.plan = plan(query, kit, backend)
    except Exception as exc:
        trace.failed_stage = STAGE_PLAN
        trace.error = str(exc)
        return trace
    finally:
        trace.stage_timings[STAGE_PLAN] = time.perf_counter() - start

    selected = trace.plan.selected
    if not selected:
        if fallback_all_tools:
            selected = kit.names
        else:
            trace.failed_stage = STAGE_PLAN
            trace.error = PLAN_EMPTY
            return trace

    start = time.perf_counter()
    try:
        trace.decision = call(query, trace.plan.raw, kit, selected, backend)
    except Exception as exc:
        trace.failed_stage = STAGE_CALL
        trace.error = str(exc)
        return trace
    finally:
        trace.stage_timings[STAGE_CALL] = time.perf_counter() - start

    start = time.perf_counter()
    try:
        request = ExecutionRequest(
            tool_sources=tool_sources_for(kit.tools, selected),
            call_code=trace.decision.code,
        )
        trace.execution = executor.execute(request)
    except Exception as exc:
        trace.failed_stage = STAGE_EXECUTE
        trace.error = str(exc)
        return trace
    finally:
        trace.stage_timings[STAGE_EXECUTE] = time.perf_counter() - start

    trace.answer = trace.execution.answer_candidate
    if trace.answer is None:
        trace.failed_stage = STAGE_EXECUTE
        trace.error = f"execution status: {trace.execution.status.value}"
    return trace


def create_toolkit(
    task_id: str,
    task_description: str,
    samples: list[tuple[str, str]],
    backend: Backend,
) -> Toolkit:
    """Ask the model to decompose the task into tools and parse its output.

    The output format mirrors the creation prompt's demonstration:
    an introduction paragraph followed by one fenced code block per tool.
    """
    response = backend.complete(build_toolkit_creation_prompt(task_description, samples))
    tools = parse_creation_output(response.text)
    if not tools:
        raise UnparseableToolkitOutput("no tool blocks found in creation output")
    return build_toolkit(task_id, tools)


def parse_creation_output(text: str) -> list[Tool]:
    """Parse alternating intro-paragraph / fenced-code blocks into Tool records."""
    tools: list[Tool] = []
    cursor = 0
    for match in FENCE_RE.finditer(text):
        prose = text[cursor : match.start()]
        cursor = match.end()
        code = match.group(1).rstrip("\n")
        def_match = _DEF_RE.search(code)
        if not def_match:
            continue
        name = def_match.group(1)
        intro_lines = []
        for line in prose.strip().splitlines():
            line = line.strip()
            if not line or re.match(r"^Tool\s*\d*\s*:", line):
                continue
            intro_lines.append(re.sub(r"^Introduction:\s*", "", line))
        introduction = " ".join(intro_lines).strip() or f"Tool {name}."
        tools.append(Tool(name=name, introduction=introduction, body=code))
    return tools


def run_planning_test(
    query: str,
    labels: PlanLabels,
    kit: Toolkit,
    backend: Backend,
) -> tuple[Plan, PlanScore]:
    """Plan against the full toolkit and score the selection against labels."""
    labels.validate_against(kit.names)
    produced = plan(query, kit, backend)
    return produced, plan_accuracy(produced.selected, labels)


def run_calling_test(
    query: str,
    gold_plan: str,
    useful: tuple[str, ...] | list[str],
    gold: str,
    matcher: Matcher,
    kit: Toolkit,
    backend: Backend,
    executor: Executor,
) -> tuple[CallDecision, ExecutionResult, bool]:
    """Call with the gold plan and only the useful tools, then grade the answer."""
    if not useful:
        raise InvalidLabels("calling test needs a non-empty useful-tool set")
    if not gold_plan.strip():
        raise ValueError("calling test needs a non-empty gold plan")
    decision = call(query, gold_plan, kit, tuple(useful), backend)
    request = ExecutionRequest(
        tool_sources=tool_sources_for(kit.tools, useful),
        call_code=decision.code,
    )
    execution = executor.execute(request)
    candidate = execution.answer_candidate
    matched = candidate is not None and match_answer(candidate, gold, matcher)
    return decision, execution, matched
