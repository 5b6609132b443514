"""Verified tool-augmented instruction data: generate, verify, rectify, export.

For each sampled query the pipeline obtains a plan and a calling
decision, executes the decision, and keeps the pair only when the
executed answer matches gold. A verified pair becomes two instruction
records (planning and calling) sharing a provenance id. Code that fails
with a runtime error can go through a bounded rectification round: the
bad code and its traceback are sent back to the model and the patched
code is kept only if it then verifies.
"""
from __future__ import annotations

import json
import logging
import os
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from . import engine
from .backend import (
    Backend,
    CALLING_INSTRUCTION,
    PLANNING_INSTRUCTION,
    calling_input,
    planning_input,
    user_request,
)
from .errors import NoCodeBlock, UnverifiedRecord
from .harness import TaskSpec
from .metrics import Matcher, match_answer
from .sandbox import ExecutionRequest, ExecutionResult, ExecutionStatus, Executor, tool_sources_for
from .toolkit import Toolkit, load_toolkit

logger = logging.getLogger(__name__)

SPLIT_PLANNING = "planning"
SPLIT_CALLING = "calling"

RECTIFY_INSTRUCTION = (
    "The code below was meant to solve the problem with the given tools but "
    "failed with an error. Fix the code so it runs and prints the correct "
    "answer. Reply with the corrected code in a fenced code block."
)


@dataclass(frozen=True)
class AugmentedExample:
    """One instruction record derived from a verified plan/call response."""

    query: str
    toolkit_id: str
    plan_text: str
    call_code: str
    split: str  # planning | calling
    verified: bool = False
    rectified: int = 0
    provenance_id: str = ""
    gold: str = ""


@dataclass
class Dataset:
    examples: list[AugmentedExample]
    discarded: list[dict]
    summary: dict

    def planning(self) -> list[AugmentedExample]:
        return [e for e in self.examples if e.split == SPLIT_PLANNING]

    def calling(self) -> list[AugmentedExample]:
        return [e for e in self.examples if e.split == SPLIT_CALLING]


def _execute_code(
    call_code: str, kit: Toolkit, selected: Sequence[str], executor: Executor
) -> ExecutionResult:
    request = ExecutionRequest(
        tool_sources=tool_sources_for(kit.tools, selected),
        call_code=call_code,
    )
    return executor.execute(request)


def verify_example(
    call_code: str,
    kit: Toolkit,
    selected: Sequence[str],
    gold: str,
    matcher: Matcher,
    executor: Executor,
) -> bool:
    """Execute the code against the tools and compare with gold; any
    non-clean execution counts as unverified."""
    result = _execute_code(call_code, kit, selected, executor)
    if result.status is not ExecutionStatus.OK or result.answer_candidate is None:
        return False
    return match_answer(result.answer_candidate, gold, matcher)


def split_response(combined: str) -> tuple[str, str]:
    """Divide a combined response into its plan part and its call part.

    The call part starts at the first fenced code block; everything
    before it is the plan part, which must be non-empty.
    """
    if not combined.strip():
        raise NoCodeBlock("empty response")
    match = engine.FENCE_RE.search(combined)
    if match is None:
        raise NoCodeBlock("response has no fenced code block")
    plan_part = combined[: match.start()].strip()
    call_part = combined[match.start() :].strip()
    if not plan_part:
        raise NoCodeBlock("nothing precedes the code block; plan part is empty")
    return plan_part, call_part


def rectify(
    example: AugmentedExample,
    traceback_text: str,
    kit: Toolkit,
    matcher: Matcher,
    backend: Backend,
    executor: Executor,
    max_rounds: int = 1,
) -> AugmentedExample | None:
    """Regenerate failing code from its traceback; keep it only if it verifies."""
    if not traceback_text.strip():
        raise ValueError("rectification needs the runtime traceback")
    code = example.call_code
    tb = traceback_text
    for round_no in range(1, max_rounds + 1):
        selected = engine.parse_plan_tools(code, kit) or kit.names
        content = (
            f"{RECTIFY_INSTRUCTION}\n\n"
            f"{calling_input(kit, selected, example.plan_text, example.query)}\n\n"
            f"Failing code:\n```python\n{code}\n```\n\n"
            f"Error traceback:\n{tb}"
        )
        response = backend.complete(user_request(content, metadata=(("stage", "rectify"),)))
        try:
            code = engine.extract_call_code(response.text)
        except Exception:
            return None
        used = engine.parse_plan_tools(code, kit) or kit.names
        result = _execute_code(code, kit, used, executor)
        if result.status is ExecutionStatus.OK and result.answer_candidate is not None:
            if match_answer(result.answer_candidate, example.gold, matcher):
                return replace(example, call_code=code, verified=True, rectified=round_no)
        if result.status is not ExecutionStatus.RUNTIME_ERROR:
            return None
        tb = result.stderr
    return None


def augment_task(
    task: TaskSpec,
    n_per_split: int,
    backend: Backend,
    executor: Executor,
    max_rectify: int = 1,
    seed: int | None = None,
) -> Dataset:
    """Build up to ``n_per_split`` verified planning/calling record pairs.

    Queries are sampled without replacement from the task's query pool;
    candidates that fail verification (and, when eligible, rectification)
    are discarded with a reason. A pool smaller than the demand yields a
    partial dataset and a warning, not an error.
    """
    if n_per_split < 1:
        raise ValueError("n_per_split must be >= 1")
    kit = load_toolkit(task.toolkit_path)
    order = list(range(len(task.queries)))
    if seed is not None:
        random.Random(seed).shuffle(order)

    examples: list[AugmentedExample] = []
    discarded: list[dict] = []
    pairs = 0
    attempted = 0
    for index in order:
        if pairs >= n_per_split:
            break
        query = task.queries[index]
        attempted += 1
        provenance = f"{task.id}:{index}"

        def discard(reason: str, **extra) -> None:
            discarded.append({"provenance_id": provenance, "query": query.input, "reason": reason, **extra})

        try:
            produced = engine.plan(query.input, kit, backend)
        except Exception as exc:
            discard(f"plan failed: {exc}")
            continue
        if not produced.selected:
            discard("plan selected no tools")
            continue
        try:
            decision = engine.call(query.input, produced.raw, kit, produced.selected, backend)
        except Exception as exc:
            discard(f"call failed: {exc}")
            continue

        result = _execute_code(decision.code, kit, produced.selected, executor)
        verified = (
            result.status is ExecutionStatus.OK
            and result.answer_candidate is not None
            and match_answer(result.answer_candidate, query.gold, task.matcher)
        )
        rectified_rounds = 0
        code = decision.code
        if (
            not verified
            and result.status is ExecutionStatus.RUNTIME_ERROR
            and result.stderr.strip()
            and max_rectify > 0
        ):
            candidate = AugmentedExample(
                query=query.input,
                toolkit_id=kit.task_id,
                plan_text=produced.raw,
                call_code=code,
                split=SPLIT_CALLING,
                gold=query.gold,
                provenance_id=provenance,
            )
            corrected = rectify(
                candidate,
                result.stderr,
                kit,
                task.matcher,
                backend,
                executor,
                max_rounds=max_rectify,
            )
            if corrected is not None:
                verified = True
                code = corrected.call_code
                rectified_rounds = corrected.rectified
        if not verified:
            discard("answer did not verify", status=result.status.value)
            continue

        common = dict(
            query=query.input,
            toolkit_id=kit.task_id,
            plan_text=produced.raw,
            call_code=code,
            verified=True,
            rectified=rectified_rounds,
            provenance_id=provenance,
            gold=query.gold,
        )
        examples.append(AugmentedExample(split=SPLIT_PLANNING, **common))
        examples.append(AugmentedExample(split=SPLIT_CALLING, **common))
        pairs += 1

    if pairs < n_per_split:
        logger.warning(
            "sample pool exhausted for task %s: %d/%d verified pairs", task.id, pairs, n_per_split
        )
    summary = {
        "task": task.id,
        "requested_pairs": n_per_split,
        "verified_pairs": pairs,
        "attempted": attempted,
        "discarded": len(discarded),
        "yield_rate": pairs / attempted if attempted else 0.0,
        "exhausted": pairs < n_per_split,
    }
    return Dataset(examples=examples, discarded=discarded, summary=summary)


def load_corpus(task: TaskSpec, path: str | Path) -> TaskSpec:
    """Swap the task's query pool for a line-delimited (question, answer) corpus.

    Each line is a JSON object with ``question`` and ``answer`` fields, the
    common export format of math/QA datasets; toolkit, matcher, and demos
    come from the task.
    """
    import dataclasses

    from .harness import QueryCase

    queries = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        record = json.loads(line)
        try:
            queries.append(QueryCase(input=record["question"], gold=str(record["answer"])))
        except KeyError as exc:
            raise ValueError(f"{path}:{lineno} lacks field {exc}") from exc
    if not queries:
        raise ValueError(f"corpus {path} contains no records")
    return dataclasses.replace(task, queries=tuple(queries))


def instruction_record(example: AugmentedExample, kit: Toolkit) -> dict:
    """Materialize the {instruction, input, output} line for one example."""
    if example.split == SPLIT_PLANNING:
        return {
            "instruction": PLANNING_INSTRUCTION,
            "input": planning_input(kit, example.query),
            "output": example.plan_text,
        }
    used = engine.parse_plan_tools(example.call_code, kit) or kit.names
    return {
        "instruction": CALLING_INSTRUCTION,
        "input": calling_input(kit, used, example.plan_text, example.query),
        "output": example.call_code,
    }


def export(dataset: Dataset, kit: Toolkit, path: str | Path) -> int:
    """Write line-delimited instruction records; refuses unverified data.

    The write is atomic: validation happens before anything is written
    and the file appears only after every line is serialized.
    """
    unverified = [e.provenance_id for e in dataset.examples if not e.verified]
    if unverified:
        raise UnverifiedRecord(f"dataset contains unverified records: {sorted(set(unverified))}")
    lines = [
        json.dumps(instruction_record(example, kit), ensure_ascii=False)
        for example in dataset.examples
    ]
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    os.replace(tmp, path)
    return len(lines)


def write_review(dataset: Dataset, path: str | Path) -> int:
    """Persist discarded candidates for offline human repair."""
    path = Path(path)
    path.write_text(
        "".join(json.dumps(d, ensure_ascii=False) + "\n" for d in dataset.discarded),
        encoding="utf-8",
    )
    return len(dataset.discarded)
