"""Command-line interface.

Subcommands: ``toolkit create|validate``, ``solve``, ``eval``, ``report``,
``datagen``, and ``record`` (cassette capture). Exit codes: 0 success,
1 usage error, 2 run failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from . import datagen as datagen_mod
from . import engine
from .backend import Backend, BackendConfig, RecordingBackend, make_backend
from .errors import CosError
from .harness import RunConfig, load_task, report, run_eval
from .toolkit import load_toolkit, save_toolkit, validate_toolkit


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit(2); we map usage to 1
        raise UsageError(message)


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", choices=("replay", "http", "scripted"), default="replay")
    parser.add_argument("--cassette", help="replay cassette path")
    parser.add_argument("--no-strict", action="store_true", help="tolerate a missing cassette")
    parser.add_argument("--scripted-table", help="JSON file of {substring key: response}")
    parser.add_argument("--model", default="", help="model name for the http backend")
    parser.add_argument("--endpoint", default="", help="base URL for the http backend")


def _add_executor_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--executor", choices=("stub", "subprocess"), default="stub")
    parser.add_argument("--stub-table", help="stub execution table (JSONL)")
    parser.add_argument("--runner-cmd", help="runner command line; defaults to COS_RUNNER_CMD")


def _backend_config(args: argparse.Namespace) -> BackendConfig:
    if args.backend == "scripted":
        if not args.scripted_table:
            raise UsageError("--backend scripted requires --scripted-table")
        doc = json.loads(Path(args.scripted_table).read_text(encoding="utf-8"))
        table = tuple((k, v) for k, v in doc.items())
        return BackendConfig(kind="scripted", table=table)
    if args.backend == "replay":
        if not args.cassette:
            raise UsageError("--backend replay requires --cassette")
        return BackendConfig(kind="replay", cassette_path=args.cassette, strict=not args.no_strict)
    return BackendConfig(kind="http", model=args.model, endpoint=args.endpoint)


def _make_backend(args: argparse.Namespace) -> Backend:
    return make_backend(_backend_config(args))


def _resolve_task(args: argparse.Namespace) -> Path:
    candidate = Path(args.task)
    if candidate.exists():
        return candidate
    return Path(args.tasks_dir) / f"{args.task}.task"


def _run_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        method=args.method,
        backend=_backend_config(args),
        executor=args.executor,
        stub_table_path=args.stub_table,
        runner_cmd=args.runner_cmd,
        toolkit_override=args.toolkit_from,
        parallelism=args.jobs,
        output_dir=args.out,
        seed=args.seed,
        fallback_all_tools=args.fallback_all_tools,
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="coskit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    toolkit = sub.add_parser("toolkit", help="create or validate toolkits")
    toolkit_sub = toolkit.add_subparsers(dest="toolkit_command", required=True)

    create = toolkit_sub.add_parser("create", help="create a toolkit from a task via the model")
    create.add_argument("--task", required=True)
    create.add_argument("--tasks-dir", default="tasks")
    create.add_argument("--out", required=True, help="output .toolkit path")
    create.add_argument("--samples", type=int, default=3, help="sample queries in the prompt")
    _add_backend_flags(create)

    validate = toolkit_sub.add_parser("validate", help="check a toolkit file")
    validate.add_argument("path")

    solve_p = sub.add_parser("solve", help="run the full chain on one query")
    solve_p.add_argument("--task", required=True)
    solve_p.add_argument("--tasks-dir", default="tasks")
    solve_p.add_argument("--index", type=int, default=0, help="query index in the task")
    solve_p.add_argument("--query", help="ad-hoc query text instead of --index")
    solve_p.add_argument("--toolkit-from", default=None)
    solve_p.add_argument("--fallback-all-tools", action="store_true")
    _add_backend_flags(solve_p)
    _add_executor_flags(solve_p)

    for name in ("eval", "record"):
        cmd = sub.add_parser(
            name,
            help="evaluate a task" if name == "eval" else "evaluate while recording a cassette",
        )
        cmd.add_argument("--task", required=True, help="task id or .task path")
        cmd.add_argument("--tasks-dir", default="tasks")
        cmd.add_argument(
            "--method", choices=("vanilla", "cot", "cos", "plan", "call"), default="cos"
        )
        cmd.add_argument("--toolkit-from", default=None, help="borrow another task's toolkit")
        cmd.add_argument("--jobs", type=int, default=1)
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--out", default="runs", help="directory for run logs")
        cmd.add_argument("--fallback-all-tools", action="store_true")
        _add_backend_flags(cmd)
        _add_executor_flags(cmd)
        if name == "record":
            cmd.add_argument("--cassette-out", required=True, help="cassette file to append")

    report_p = sub.add_parser("report", help="aggregate run logs into report files")
    report_p.add_argument("logs", nargs="*", help="run log files")
    report_p.add_argument("--out", default="runs", help="directory for report.csv/report.txt")

    datagen_p = sub.add_parser("datagen", help="build verified instruction data for a task")
    datagen_p.add_argument("--task", required=True)
    datagen_p.add_argument("--tasks-dir", default="tasks")
    datagen_p.add_argument("--n", type=int, default=100, help="verified pairs per split")
    datagen_p.add_argument("--max-rectify", type=int, default=1)
    datagen_p.add_argument("--seed", type=int, default=None)
    datagen_p.add_argument(
        "--corpus", help="replace the task's queries with a (question, answer) JSONL corpus"
    )
    datagen_p.add_argument("--out", required=True, help="output .jsonl path")
    _add_backend_flags(datagen_p)
    _add_executor_flags(datagen_p)

    return parser


def _cmd_toolkit(args: argparse.Namespace) -> int:
    if args.toolkit_command == "validate":
        try:
            kit = load_toolkit(args.path)
        except CosError as exc:
            print(f"invalid: {exc}", file=sys.stderr)
            return 2
        violations = validate_toolkit(kit)
        if violations:
            for v in violations:
                print(f"violation: {v}", file=sys.stderr)
            return 2
        print(f"ok: {kit.task_id} ({len(kit.tools)} tools)")
        return 0
    task = load_task(_resolve_task(args))
    backend = _make_backend(args)
    kit = engine.create_toolkit(task.id, task.description, task.samples(args.samples), backend)
    save_toolkit(kit, args.out)
    print(f"wrote {args.out} ({len(kit.tools)} tools)")
    return 0


def _cmd_solve(args: argparse.Namespace) -> int:
    task = load_task(_resolve_task(args))
    from .harness import make_executor, resolve_toolkit

    kit = resolve_toolkit(task, args.toolkit_from)
    query = args.query if args.query else task.queries[args.index].input
    cfg = RunConfig(
        method="cos",
        executor=args.executor,
        stub_table_path=args.stub_table,
        runner_cmd=args.runner_cmd,
    )
    trace = engine.solve(
        query,
        kit,
        _make_backend(args),
        make_executor(cfg),
        fallback_all_tools=args.fallback_all_tools,
    )
    print(f"query: {query}")
    if trace.plan:
        print(f"selected: {', '.join(trace.plan.selected) or '(none)'}")
    if trace.execution:
        print(f"execution: {trace.execution.status.value}")
    if trace.failed_stage:
        print(f"failed at {trace.failed_stage}: {trace.error}", file=sys.stderr)
        return 2
    print(f"answer: {trace.answer}")
    return 0


def _cmd_eval(args: argparse.Namespace, record_cassette: str | None = None) -> int:
    task = load_task(_resolve_task(args))
    cfg = _run_config(args)
    backend = _make_backend(args)
    if record_cassette:
        backend = RecordingBackend(backend, record_cassette)
    records, table = run_eval(task, cfg, backend=backend)
    errored = sum(1 for r in records if r.error)
    cell = table.cell(task.id, cfg.method)
    print(f"{task.id} x {cfg.method}: accuracy {cell.accuracy:.2f} over {cell.count} queries")
    if errored:
        print(f"note: {errored} queries recorded errors (see the log)", file=sys.stderr)
    print(f"log: {Path(cfg.output_dir) / f'run-{task.id}-{cfg.method}.log'}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    table = report(args.logs, args.out)
    sys.stdout.write(table.render_text())
    return 0


def _cmd_datagen(args: argparse.Namespace) -> int:
    task = load_task(_resolve_task(args))
    if args.corpus:
        task = datagen_mod.load_corpus(task, args.corpus)
    backend = _make_backend(args)
    cfg = RunConfig(
        method="cos",
        executor=args.executor,
        stub_table_path=args.stub_table,
        runner_cmd=args.runner_cmd,
    )
    from .harness import make_executor

    dataset = datagen_mod.augment_task(
        task,
        args.n,
        backend,
        make_executor(cfg),
        max_rectify=args.max_rectify,
        seed=args.seed,
    )
    kit = load_toolkit(task.toolkit_path)
    written = datagen_mod.export(dataset, kit, args.out)
    review_path = Path(args.out).with_suffix(".review.jsonl")
    discarded = datagen_mod.write_review(dataset, review_path)
    s = dataset.summary
    print(
        f"{task.id}: {s['verified_pairs']}/{s['requested_pairs']} pairs "
        f"({written} records, {discarded} discarded, yield {s['yield_rate']:.2f})"
    )
    if s["exhausted"]:
        print("warning: sample pool exhausted before the requested count", file=sys.stderr)
    return 0


def cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    try:
        if args.command == "toolkit":
            return _cmd_toolkit(args)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "record":
            return _cmd_eval(args, record_cassette=args.cassette_out)
        if args.command == "report":
            return _cmd_report(args)
        if args.command == "datagen":
            return _cmd_datagen(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except CosError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError(f"unhandled command {args.command!r}")


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
