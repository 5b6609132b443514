"""Host ↔ runner integration: the stub-backed end-to-end suite re-run
against the real interpreter child must produce identical answers."""
from __future__ import annotations

import time

import pytest

from coskit.backend import ReplayBackend
from coskit.cli import cli
from coskit.engine import solve
from coskit.harness import RunConfig, load_task, run_eval
from coskit.sandbox import (
    ExecutionRequest,
    ExecutionStatus,
    StubExecutor,
    SubprocessExecutor,
    execute,
)
from coskit.toolkit import load_toolkit
from tests.conftest import TASK_IDS


@pytest.fixture(scope="module")
def replay(cassette_path):
    return ReplayBackend(cassette_path)


def test_full_suite_identical_answers_with_subprocess_executor(
    replay, stub_table_path, tasks_dir, runner_cmd
):
    stub = StubExecutor.from_file(stub_table_path)
    subprocess_executor = SubprocessExecutor(runner_cmd=runner_cmd)
    compared = 0
    for task_id in TASK_IDS:
        task = load_task(tasks_dir / f"{task_id}.task")
        kit = load_toolkit(task.toolkit_path)
        for query in task.queries:
            via_stub = solve(query.input, kit, replay, stub)
            via_child = solve(query.input, kit, replay, subprocess_executor)
            assert via_child.answer == via_stub.answer, (task_id, query.input)
            assert via_child.execution.status is ExecutionStatus.OK
            compared += 1
    assert compared == 80


def test_run_eval_with_subprocess_matches_stub(replay, stub_table_path, tasks_dir, runner_cmd):
    task = load_task(tasks_dir / "chinese_remainder.task")
    stub_records, stub_table = run_eval(
        task,
        RunConfig(method="cos"),
        backend=replay,
        executor=StubExecutor.from_file(stub_table_path),
    )
    child_records, child_table = run_eval(
        task,
        RunConfig(method="cos", parallelism=4),
        backend=replay,
        executor=SubprocessExecutor(runner_cmd=runner_cmd),
    )
    assert [r.answer for r in child_records] == [r.answer for r in stub_records]
    assert child_table.render_csv() == stub_table.render_csv()


def test_cli_subprocess_executor(tmp_path, tasks_dir, cassette_path, runner_cmd, monkeypatch):
    monkeypatch.setenv("COS_RUNNER_CMD", runner_cmd)
    code = cli(
        [
            "eval",
            "--task", "boolean_expression",
            "--tasks-dir", str(tasks_dir),
            "--method", "cos",
            "--backend", "replay",
            "--cassette", str(cassette_path),
            "--executor", "subprocess",
            "--out", str(tmp_path),
        ]
    )
    assert code == 0
    assert (tmp_path / "run-boolean_expression-cos.log").exists()


def test_infinite_loop_killed_within_twice_timeout(runner_cmd):
    req = ExecutionRequest(tool_sources=(), call_code="while True:\n    pass", timeout=1.0)
    start = time.monotonic()
    result = execute(req, runner_cmd=runner_cmd)
    elapsed = time.monotonic() - start
    assert result.status is ExecutionStatus.TIMEOUT
    assert result.wall_time >= 1.0
    assert elapsed < 2.0, f"kill took {elapsed:.2f}s"


def test_call_only_mode_with_subprocess(replay, tasks_dir, runner_cmd):
    task = load_task(tasks_dir / "date_understanding.task")
    records, table = run_eval(
        task,
        RunConfig(method="call"),
        backend=replay,
        executor=SubprocessExecutor(runner_cmd=runner_cmd),
    )
    assert all(r.matched for r in records)
    assert table.cell("date_understanding", "call").accuracy == pytest.approx(100.0)
