"""Execution host: spawns the runner child, enforces limits, classifies outcomes.

Each ``execute`` call owns exactly one child process: the request record
goes to the child's stdin, one response record comes back on its stdout,
and the child is killed if it exceeds the request timeout. A stub
executor backed by a lookup table covers every test path that does not
need a real interpreter child.
"""
from __future__ import annotations

import hashlib
import json
import os
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Protocol, Sequence

from . import wire
from .errors import SpawnFailure

RUNNER_CMD_ENV = "COS_RUNNER_CMD"
DEFAULT_TIMEOUT = 10.0
DEFAULT_MAX_OUTPUT_BYTES = 64 * 1024
KILL_GRACE = 0.5


class ExecutionStatus(str, Enum):
    OK = "ok"
    RUNTIME_ERROR = "runtime_error"
    TIMEOUT = "timeout"
    PROTOCOL_ERROR = "protocol_error"


@dataclass(frozen=True)
class ExecutionRequest:
    """Tool sources plus the call code to run against them."""

    tool_sources: tuple[tuple[str, str], ...]
    call_code: str
    timeout: float = DEFAULT_TIMEOUT
    max_output_bytes: int = DEFAULT_MAX_OUTPUT_BYTES

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if not self.call_code.strip():
            raise ValueError("call_code must be non-empty")


@dataclass(frozen=True)
class ExecutionResult:
    status: ExecutionStatus
    stdout: str
    stderr: str
    answer_candidate: str | None
    wall_time: float


def _answer_from(status: ExecutionStatus, stdout: str) -> str | None:
    if status is not ExecutionStatus.OK:
        return None
    for line in reversed(stdout.splitlines()):
        stripped = line.strip()
        if stripped:
            return stripped
    return None


def extract_answer(result: "ExecutionResult") -> str | None:
    """Last non-empty stdout line, only for clean executions."""
    return _answer_from(result.status, result.stdout)


def code_digest(call_code: str) -> str:
    return hashlib.sha256(call_code.encode("utf-8")).hexdigest()


def _truncate(text: str, limit: int) -> str:
    data = text.encode("utf-8")
    if len(data) <= limit:
        return text
    return data[:limit].decode("utf-8", errors="ignore")


def _result(
    status: ExecutionStatus,
    stdout: str,
    stderr: str,
    wall_time: float,
    limit: int,
) -> ExecutionResult:
    stdout = _truncate(stdout, limit)
    stderr = _truncate(stderr, limit)
    return ExecutionResult(
        status=status,
        stdout=stdout,
        stderr=stderr,
        answer_candidate=_answer_from(status, stdout),
        wall_time=wall_time,
    )


def execute(req: ExecutionRequest, runner_cmd: str | None = None) -> ExecutionResult:
    """Run the request in a fresh runner child and classify the outcome.

    Raises SpawnFailure when no runner is configured or it cannot start;
    every other outcome is reported as a result status.
    """
    cmd = runner_cmd or os.environ.get(RUNNER_CMD_ENV, "")
    if not cmd:
        raise SpawnFailure(f"no runner configured; set {RUNNER_CMD_ENV} or pass runner_cmd")
    try:
        proc = subprocess.Popen(
            shlex.split(cmd),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
        )
    except OSError as exc:
        raise SpawnFailure(f"could not start runner {cmd!r}: {exc}") from exc

    request_record = {
        "tool_sources": [[name, body] for name, body in req.tool_sources],
        "call_code": req.call_code,
        "soft_timeout": req.timeout,
    }
    start = time.perf_counter()
    try:
        out, err = proc.communicate(wire.encode_record(request_record), timeout=req.timeout)
    except subprocess.TimeoutExpired:
        proc.kill()
        try:
            proc.communicate(timeout=KILL_GRACE)
        except subprocess.TimeoutExpired:  # pragma: no cover - kernel refused the kill
            pass
        wall = time.perf_counter() - start
        return _result(
            ExecutionStatus.TIMEOUT,
            "",
            f"killed after {req.timeout}s",
            max(wall, req.timeout),
            req.max_output_bytes,
        )
    wall = time.perf_counter() - start

    try:
        response = wire.decode_record(out)
        status = {
            "ok": ExecutionStatus.OK,
            "runtime_error": ExecutionStatus.RUNTIME_ERROR,
        }[response["status"]]
        stdout = response["stdout"]
        stderr = response["stderr"]
        if not isinstance(stdout, str) or not isinstance(stderr, str):
            raise TypeError("stdout/stderr fields must be strings")
    except (ValueError, KeyError, TypeError) as exc:
        diag = err.decode("utf-8", errors="replace")
        return _result(
            ExecutionStatus.PROTOCOL_ERROR,
            "",
            f"malformed runner output ({exc}); child stderr: {diag}",
            wall,
            req.max_output_bytes,
        )
    return _result(status, stdout, stderr, wall, req.max_output_bytes)


class Executor(Protocol):
    def execute(self, req: ExecutionRequest) -> ExecutionResult: ...


class SubprocessExecutor:
    """Process-per-request executor with a cap on concurrent children."""

    name = "subprocess"

    def __init__(self, runner_cmd: str | None = None, max_children: int | None = None):
        self.runner_cmd = runner_cmd
        self._children = threading.BoundedSemaphore(max_children or os.cpu_count() or 4)

    def execute(self, req: ExecutionRequest) -> ExecutionResult:
        with self._children:
            return execute(req, runner_cmd=self.runner_cmd)


class StubExecutor:
    """Table-driven executor keyed by call-code digest; spawns nothing."""

    name = "stub"

    def __init__(self, table: Mapping[str, ExecutionResult] | None = None):
        self.table = dict(table or {})

    @classmethod
    def from_file(cls, path: str | Path) -> "StubExecutor":
        table: dict[str, ExecutionResult] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            status = ExecutionStatus(record["status"])
            stdout = record.get("stdout", "")
            table[record["digest"]] = ExecutionResult(
                status=status,
                stdout=stdout,
                stderr=record.get("stderr", ""),
                answer_candidate=_answer_from(status, stdout),
                wall_time=record.get("wall_time", 0.0),
            )
        return cls(table)

    def record(self, call_code: str, result: ExecutionResult) -> None:
        self.table[code_digest(call_code)] = result

    def execute(self, req: ExecutionRequest) -> ExecutionResult:
        hit = self.table.get(code_digest(req.call_code))
        if hit is None:
            return ExecutionResult(
                status=ExecutionStatus.PROTOCOL_ERROR,
                stdout="",
                stderr=f"stub miss for code digest {code_digest(req.call_code)[:12]}",
                answer_candidate=None,
                wall_time=0.0,
            )
        return hit


def stub_execute(req: ExecutionRequest, table: Mapping[str, ExecutionResult]) -> ExecutionResult:
    return StubExecutor(table).execute(req)


def ok_result(stdout: str, wall_time: float = 0.0) -> ExecutionResult:
    """Convenience constructor for table entries and tests."""
    return ExecutionResult(
        status=ExecutionStatus.OK,
        stdout=stdout,
        stderr="",
        answer_candidate=_answer_from(ExecutionStatus.OK, stdout),
        wall_time=wall_time,
    )


def tool_sources_for(kit_tools: Sequence, selected: Sequence[str]) -> tuple[tuple[str, str], ...]:
    """Sources of the selected tools, in toolkit order (load order matters:
    later tools may call earlier ones)."""
    wanted = set(selected)
    return tuple((tool.name, tool.body) for tool in kit_tools if tool.name in wanted)
