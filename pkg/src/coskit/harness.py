"""Task registry, run orchestration, run-log persistence, and reporting.

A task file bundles queries, gold answers, a matcher, demos, and a
toolkit reference; ``run_eval`` dispatches one of five methods over the
queries (direct answer, chain-of-thought, the full plan/call chain, or
the separated plan-only / call-only protocols), persists one record per
query incrementally so an interrupted run resumes by query index, and
aggregates records into a report row. Workers share immutable task and
toolkit values; a single writer owns the log file.
"""
from __future__ import annotations

import dataclasses
import json
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .backend import (
    Backend,
    BackendConfig,
    build_baseline_prompt,
    last_nonempty_line,
    make_backend,
)
from .engine import SolveTrace, run_calling_test, run_planning_test, solve
from .errors import CosError, MalformedTask, MissingToolkit
from .metrics import Matcher, PlanLabels, ReportTable, aggregate, match_answer
from .sandbox import Executor, StubExecutor, SubprocessExecutor
from .toolkit import Toolkit, load_toolkit

METHODS = ("vanilla", "cot", "cos", "plan", "call")
TOOLKIT_METHODS = ("cos", "plan", "call")


@dataclass(frozen=True)
class QueryCase:
    """One evaluation query with its gold answer and optional test labels."""

    input: str
    gold: str
    labels_use: tuple[str, ...] | None = None
    labels_rdt: tuple[str, ...] | None = None
    gold_plan: str | None = None

    @property
    def labels(self) -> PlanLabels | None:
        if self.labels_use is None:
            return None
        return PlanLabels(frozenset(self.labels_use), frozenset(self.labels_rdt or ()))


@dataclass(frozen=True)
class TaskSpec:
    id: str
    description: str
    category: str
    matcher: Matcher
    toolkit_path: Path
    demos: Mapping[str, tuple[Mapping[str, str], ...]]
    queries: tuple[QueryCase, ...]

    def samples(self, n: int = 3) -> list[tuple[str, str]]:
        """Leading (input, gold) pairs, used as creation-prompt sample data."""
        return [(q.input, q.gold) for q in self.queries[:n]]


def load_task(path: str | Path) -> TaskSpec:
    """Parse and validate a .task file; toolkit reference must resolve."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedTask(f"cannot read task file {path}: {exc}") from exc
    for key in ("id", "description", "matcher", "toolkit", "queries"):
        if key not in doc:
            raise MalformedTask(f"task file {path} missing field {key!r}")
    try:
        matcher = Matcher(
            kind=doc["matcher"]["kind"],
            abs_tol=float(doc["matcher"].get("abs_tol", 1e-6)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedTask(f"bad matcher in {path}: {exc}") from exc
    toolkit_path = (path.parent / doc["toolkit"]).resolve()
    if not toolkit_path.exists():
        raise MissingToolkit(f"task {doc['id']!r} references missing toolkit {toolkit_path}")
    queries = []
    if not doc["queries"]:
        raise MalformedTask(f"task {doc['id']!r} has no queries")
    for i, q in enumerate(doc["queries"]):
        try:
            labels = q.get("labels")
            queries.append(
                QueryCase(
                    input=q["input"],
                    gold=str(q["gold"]),
                    labels_use=tuple(labels["use"]) if labels else None,
                    labels_rdt=tuple(labels["rdt"]) if labels else None,
                    gold_plan=q.get("gold_plan"),
                )
            )
        except (KeyError, TypeError) as exc:
            raise MalformedTask(f"bad query {i} in {path}: {exc}") from exc
        if not queries[-1].input or not queries[-1].gold:
            raise MalformedTask(f"query {i} in {path} has an empty input or gold")
    demos = {
        method: tuple(dict(d) for d in demo_list)
        for method, demo_list in doc.get("demos", {}).items()
    }
    return TaskSpec(
        id=doc["id"],
        description=doc["description"],
        category=doc.get("category", ""),
        matcher=matcher,
        toolkit_path=toolkit_path,
        demos=demos,
        queries=tuple(queries),
    )


@dataclass
class RunConfig:
    """Everything a run needs beyond the task itself."""

    method: str
    backend: BackendConfig | None = None
    executor: str = "stub"  # "stub" | "subprocess"
    stub_table_path: str | Path | None = None
    runner_cmd: str | None = None
    toolkit_override: str | None = None
    parallelism: int = 1
    output_dir: str | Path | None = None
    seed: int | None = None
    fallback_all_tools: bool = False

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise MalformedTask(f"unknown method: {self.method!r}")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


@dataclass
class RunRecord:
    """One persisted outcome per (run, query); append-only in the log."""

    task: str
    method: str
    query_index: int
    matched: bool | None = None
    score: float | None = None
    answer: str | None = None
    plan_selected: tuple[str, ...] | None = None
    status: str | None = None
    failed_stage: str | None = None
    error: str | None = None
    backend_id: str = ""
    timestamp: float = 0.0

    def to_json(self) -> str:
        doc = dataclasses.asdict(self)
        doc["plan_selected"] = list(self.plan_selected) if self.plan_selected else None
        return json.dumps(doc, ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "RunRecord":
        doc = json.loads(line)
        if doc.get("plan_selected") is not None:
            doc["plan_selected"] = tuple(doc["plan_selected"])
        return cls(**doc)

    def to_row(self) -> dict:
        return {
            "task": self.task,
            "method": self.method,
            "matched": self.matched,
            "score": self.score,
        }


def make_executor(cfg: RunConfig) -> Executor:
    if cfg.executor == "stub":
        if cfg.stub_table_path:
            return StubExecutor.from_file(cfg.stub_table_path)
        return StubExecutor()
    if cfg.executor == "subprocess":
        return SubprocessExecutor(runner_cmd=cfg.runner_cmd, max_children=cfg.parallelism)
    raise ValueError(f"unknown executor kind: {cfg.executor!r}")


def resolve_toolkit(task: TaskSpec, toolkit_override: str | None) -> Toolkit:
    """The task's own toolkit, or a sibling task's toolkit marked as borrowed."""
    if toolkit_override is None:
        return load_toolkit(task.toolkit_path)
    borrowed_path = task.toolkit_path.parent / f"{toolkit_override}.toolkit"
    if not borrowed_path.exists():
        raise MissingToolkit(f"borrowed toolkit not found: {borrowed_path}")
    kit = load_toolkit(borrowed_path)
    return dataclasses.replace(kit, borrowed_from=kit.task_id)


def _validate_method(task: TaskSpec, method: str) -> None:
    if method == "plan":
        missing = [i for i, q in enumerate(task.queries) if q.labels is None]
        if missing:
            raise MalformedTask(
                f"task {task.id!r} queries {missing} lack labels required by plan-only runs"
            )
    if method == "call":
        missing = [
            i
            for i, q in enumerate(task.queries)
            if not q.gold_plan or not q.labels_use
        ]
        if missing:
            raise MalformedTask(
                f"task {task.id!r} queries {missing} lack gold_plan/labels required by call-only runs"
            )


def _run_single(
    task: TaskSpec,
    kit: Toolkit | None,
    index: int,
    query: QueryCase,
    cfg: RunConfig,
    backend: Backend,
    executor: Executor,
) -> RunRecord:
    record = RunRecord(
        task=task.id,
        method=cfg.method,
        query_index=index,
        backend_id=getattr(backend, "backend_id", ""),
        timestamp=time.time(),
    )
    try:
        if cfg.method in ("vanilla", "cot"):
            demos = task.demos.get(cfg.method, ())
            response = backend.complete(build_baseline_prompt(query.input, cfg.method, demos))
            answer = last_nonempty_line(response.text)
            record.answer = answer
            record.matched = answer is not None and match_answer(answer, query.gold, task.matcher)
        elif cfg.method == "cos":
            trace: SolveTrace = solve(
                query.input, kit, backend, executor, fallback_all_tools=cfg.fallback_all_tools
            )
            record.plan_selected = trace.plan.selected if trace.plan else None
            record.answer = trace.answer
            record.status = trace.execution.status.value if trace.execution else None
            record.failed_stage = trace.failed_stage
            record.error = trace.error
            record.matched = trace.answer is not None and match_answer(
                trace.answer, query.gold, task.matcher
            )
        elif cfg.method == "plan":
            produced, plan_score = run_planning_test(query.input, query.labels, kit, backend)
            record.plan_selected = produced.selected
            record.score = plan_score.acc
        elif cfg.method == "call":
            decision, execution, matched = run_calling_test(
                query.input,
                query.gold_plan,
                query.labels_use,
                query.gold,
                task.matcher,
                kit,
                backend,
                executor,
            )
            record.answer = execution.answer_candidate
            record.status = execution.status.value
            record.matched = matched
    except Exception as exc:  # per-query failures never abort the batch
        record.error = f"{type(exc).__name__}: {exc}"
        if cfg.method == "plan":
            record.score = 0.0
        else:
            record.matched = False
    return record


def run_eval(
    task: TaskSpec,
    cfg: RunConfig,
    backend: Backend | None = None,
    executor: Executor | None = None,
) -> tuple[list[RunRecord], ReportTable]:
    """Evaluate one task under one method; returns all records plus the row.

    Records append to ``<output_dir>/run-<task>-<method>.log`` as queries
    finish; re-running skips indices already present in the log.
    """
    _validate_method(task, cfg.method)
    kit = resolve_toolkit(task, cfg.toolkit_override) if cfg.method in TOOLKIT_METHODS else None
    if backend is None:
        if cfg.backend is None:
            raise CosError("run_eval needs a backend or a backend config")
        backend = make_backend(cfg.backend)
    if executor is None:
        executor = make_executor(cfg)

    log_path: Path | None = None
    done: dict[int, RunRecord] = {}
    if cfg.output_dir is not None:
        out_dir = Path(cfg.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        log_path = out_dir / f"run-{task.id}-{cfg.method}.log"
        if log_path.exists():
            for line in log_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    existing = RunRecord.from_json(line)
                    done[existing.query_index] = existing

    indices = list(range(len(task.queries)))
    if cfg.seed is not None:
        random.Random(cfg.seed).shuffle(indices)
    pending = [i for i in indices if i not in done]

    new_records: list[RunRecord] = []
    write_lock = threading.Lock()

    def finish(record: RunRecord) -> None:
        new_records.append(record)
        if log_path is not None:
            with write_lock, log_path.open("a", encoding="utf-8") as fh:
                fh.write(record.to_json() + "\n")

    if cfg.parallelism == 1 or len(pending) <= 1:
        for i in pending:
            finish(_run_single(task, kit, i, task.queries[i], cfg, backend, executor))
    else:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            futures = {
                pool.submit(
                    _run_single, task, kit, i, task.queries[i], cfg, backend, executor
                ): i
                for i in pending
            }
            for future in as_completed(futures):
                finish(future.result())

    records = sorted([*done.values(), *new_records], key=lambda r: r.query_index)
    table = aggregate(r.to_row() for r in records)
    return records, table


def load_records(path: str | Path) -> list[RunRecord]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(RunRecord.from_json(line))
    return records


def report(log_paths: Sequence[str | Path], out_dir: str | Path) -> ReportTable:
    """Aggregate run logs into the task × method table and write both renders."""
    rows = []
    for p in log_paths:
        rows.extend(r.to_row() for r in load_records(p))
    table = aggregate(rows)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(table.render_csv(), encoding="utf-8")
    (out / "report.txt").write_text(table.render_text(), encoding="utf-8")
    return table
