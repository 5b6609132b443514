from __future__ import annotations

import io
import subprocess
import sys
import time

import pytest

from coskit import wire
from coskit.errors import SpawnFailure
from coskit.sandbox import (
    ExecutionRequest,
    ExecutionResult,
    ExecutionStatus,
    StubExecutor,
    code_digest,
    execute,
    extract_answer,
    ok_result,
    stub_execute,
)

REQ = ExecutionRequest(tool_sources=(), call_code="print(1)")


def fake_runner(tmp_path, body: str) -> str:
    """Write a synthetic child script and return its command line."""
    script = tmp_path / "child.py"
    script.write_text(body, encoding="utf-8")
    return f"{sys.executable} {script}"


RESPONDER = """\
import json, sys
payload = json.dumps({payload}, separators=(",", ":")).encode()
sys.stdout.buffer.write(b"%d:%s\\n" % (len(payload), payload))
"""


def responder(tmp_path, status="ok", stdout="plan ok\\n42\\n", stderr=""):
    payload = f'{{"status": "{status}", "stdout": "{stdout}", "stderr": "{stderr}"}}'
    return fake_runner(tmp_path, RESPONDER.format(payload=payload))


class TestWire:
    def test_roundtrip(self):
        record = {"a": "line1\nline2", "n": 7, "nested": [1, {"k": "v"}]}
        assert wire.decode_record(wire.encode_record(record)) == record

    def test_roundtrip_one_mebibyte(self):
        record = {"body": "x" * (1024 * 1024), "unicode": "π ≈ 3.14159"}
        encoded = wire.encode_record(record)
        assert wire.decode_record(encoded) == record

    def test_single_line_framing(self):
        encoded = wire.encode_record({"text": "with\nnewlines"})
        assert encoded.endswith(b"\n")
        assert encoded[:-1].count(b"\n") == 0

    def test_malformed_prefix_rejected(self):
        with pytest.raises(ValueError):
            wire.decode_record(b"nonsense without a prefix\n")

    def test_truncated_payload_rejected(self):
        with pytest.raises(ValueError):
            wire.read_record(io.BytesIO(b'100:{"a": 1}'))


def result_with(status: ExecutionStatus, stdout: str) -> ExecutionResult:
    return ExecutionResult(status=status, stdout=stdout, stderr="",
                           answer_candidate=None, wall_time=0.0)


class TestExtractAnswer:
    def test_last_nonempty_line(self):
        assert extract_answer(result_with(ExecutionStatus.OK, "plan ok\n42\n")) == "42"

    def test_blank_stdout(self):
        assert extract_answer(result_with(ExecutionStatus.OK, "")) is None

    def test_non_ok_status_gates(self):
        assert extract_answer(result_with(ExecutionStatus.TIMEOUT, "partial\n7\n")) is None

    def test_whitespace_trimmed(self):
        assert extract_answer(result_with(ExecutionStatus.OK, "  answer  \n\n")) == "answer"


class TestExecute:
    def test_ok_classification(self, tmp_path):
        result = execute(REQ, runner_cmd=responder(tmp_path))
        assert result.status is ExecutionStatus.OK
        assert result.answer_candidate == "42"

    def test_runtime_error_classification(self, tmp_path):
        cmd = responder(tmp_path, status="runtime_error", stdout="", stderr="Traceback: boom")
        result = execute(REQ, runner_cmd=cmd)
        assert result.status is ExecutionStatus.RUNTIME_ERROR
        assert "Traceback" in result.stderr
        assert result.answer_candidate is None

    def test_timeout_kills_child(self, tmp_path):
        cmd = fake_runner(tmp_path, "import time\ntime.sleep(60)\n")
        req = ExecutionRequest(tool_sources=(), call_code="print(1)", timeout=1.0)
        start = time.monotonic()
        result = execute(req, runner_cmd=cmd)
        elapsed = time.monotonic() - start
        assert result.status is ExecutionStatus.TIMEOUT
        assert result.wall_time >= 1.0
        assert elapsed < 2.0

    def test_garbage_output_is_protocol_error(self, tmp_path):
        cmd = fake_runner(tmp_path, "print('this is not a framed record')\n")
        result = execute(REQ, runner_cmd=cmd)
        assert result.status is ExecutionStatus.PROTOCOL_ERROR

    def test_child_stderr_surfaces_in_protocol_error(self, tmp_path):
        cmd = fake_runner(
            tmp_path, "import sys\nsys.stderr.write('child crashed hard')\nsys.exit(3)\n"
        )
        result = execute(REQ, runner_cmd=cmd)
        assert result.status is ExecutionStatus.PROTOCOL_ERROR
        assert "child crashed hard" in result.stderr

    def test_missing_runner_is_spawn_failure(self, monkeypatch):
        monkeypatch.delenv("COS_RUNNER_CMD", raising=False)
        with pytest.raises(SpawnFailure):
            execute(REQ)

    def test_nonexistent_command_is_spawn_failure(self):
        with pytest.raises(SpawnFailure):
            execute(REQ, runner_cmd="/no/such/binary --one-shot")

    def test_stdout_truncated_at_limit(self, tmp_path):
        cmd = responder(tmp_path, stdout="x" * 5000)
        req = ExecutionRequest(tool_sources=(), call_code="print(1)", max_output_bytes=100)
        result = execute(req, runner_cmd=cmd)
        assert len(result.stdout.encode()) <= 100

    def test_request_validation(self):
        with pytest.raises(ValueError):
            ExecutionRequest(tool_sources=(), call_code="  ")
        with pytest.raises(ValueError):
            ExecutionRequest(tool_sources=(), call_code="x", timeout=0)

    def test_request_record_reaches_child(self, tmp_path):
        echo = fake_runner(
            tmp_path,
            "import sys, json\n"
            "data = sys.stdin.buffer.read()\n"
            "_, payload = data.split(b':', 1)\n"
            "record = json.loads(payload[:-1])\n"
            "out = json.dumps({'status': 'ok', 'stdout': record['call_code'], 'stderr': ''},"
            " separators=(',', ':')).encode()\n"
            "sys.stdout.buffer.write(b'%d:%s\\n' % (len(out), out))\n",
        )
        req = ExecutionRequest(tool_sources=(("t", "def t(): pass"),), call_code="MARKER-42")
        result = execute(req, runner_cmd=echo)
        assert result.status is ExecutionStatus.OK
        assert result.answer_candidate == "MARKER-42"


class TestStubExecutor:
    def test_recorded_hit(self):
        stub = StubExecutor()
        stub.record("codeA", ok_result("7\n"))
        result = stub.execute(ExecutionRequest(tool_sources=(), call_code="codeA"))
        assert result.status is ExecutionStatus.OK
        assert result.answer_candidate == "7"

    def test_miss_is_protocol_error(self):
        result = StubExecutor().execute(REQ)
        assert result.status is ExecutionStatus.PROTOCOL_ERROR
        assert "stub miss" in result.stderr

    def test_never_spawns(self, monkeypatch):
        def explode(*args, **kwargs):
            raise AssertionError("stub executor must not spawn processes")

        monkeypatch.setattr(subprocess, "Popen", explode)
        stub = StubExecutor({code_digest("c"): ok_result("1\n")})
        assert stub.execute(ExecutionRequest(tool_sources=(), call_code="c")).answer_candidate == "1"

    def test_stub_execute_function(self):
        table = {code_digest("c"): ok_result("5\n")}
        assert stub_execute(ExecutionRequest(tool_sources=(), call_code="c"), table).stdout == "5\n"

    def test_from_file(self, tmp_path, stub_table_path):
        stub = StubExecutor.from_file(stub_table_path)
        assert len(stub.table) > 0
        sample = next(iter(stub.table.values()))
        assert isinstance(sample, ExecutionResult)
        assert sample.status is ExecutionStatus.OK
        assert sample.answer_candidate is not None
