"""Black-box conformance tests for the one-shot runner.

These speak the raw wire protocol over a spawned process; they do not
import the host package, so the runner can be validated standalone.
"""
from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

RUNNER = Path(__file__).resolve().parents[1] / "cos_runner.py"

ADD = ("add", "def add(a, b):\n    return a + b")
SCALE = ("scale", "def scale(x, k):\n    return x * k")

IS_OPENER = ("is_opener", 'def is_opener(ch):\n    return ch in "([{<"')
CLOSER_FOR = (
    "closer_for",
    'def closer_for(ch):\n    return {"(": ")", "[": "]", "{": "}", "<": ">"}[ch]',
)
PUSH = ("push", "def push(stack, item):\n    stack.append(item)\n    return stack")
POP = ("pop", "def pop(stack):\n    return stack.pop()")

HOURS_FROM = ("hours_from", "def hours_from(minutes):\n    return minutes / 60")
DESCRIBE_HOURS = (
    "describe_hours",
    'def describe_hours(h):\n    return "%g hours" % h',
)


def encode(record: dict) -> bytes:
    payload = json.dumps(record, separators=(",", ":")).encode()
    return b"%d:%s\n" % (len(payload), payload)


def decode(data: bytes) -> dict:
    length_text, rest = data.split(b":", 1)
    length = int(length_text)
    return json.loads(rest[:length].decode())


def run_runner(tool_sources, call_code, soft_timeout=5.0, args=("--one-shot",), timeout=10.0):
    request = {
        "tool_sources": [list(pair) for pair in tool_sources],
        "call_code": call_code,
        "soft_timeout": soft_timeout,
    }
    proc = subprocess.run(
        [sys.executable, str(RUNNER), *args],
        input=encode(request),
        capture_output=True,
        timeout=timeout,
    )
    return proc


class TestCallingPatterns:
    def test_sequential_tool_calls(self):
        code = "total = add(2, 3)\ntotal = add(total, 4)\nresult = scale(total, 10)\nprint(result)"
        proc = run_runner([ADD, SCALE], code)
        assert proc.returncode == 0
        response = decode(proc.stdout)
        assert response["status"] == "ok"
        assert response["stdout"] == "90\n"

    def test_conditional_loop_and_branch(self):
        code = (
            'tokens = "( [ { }".split()\n'
            "stack = []\n"
            "for ch in tokens:\n"
            "    if is_opener(ch):\n"
            "        push(stack, ch)\n"
            "    else:\n"
            "        pop(stack)\n"
            "closers = []\n"
            "while stack:\n"
            "    closers.append(closer_for(pop(stack)))\n"
            'print(" ".join(closers))'
        )
        proc = run_runner([IS_OPENER, CLOSER_FOR, PUSH, POP], code)
        response = decode(proc.stdout)
        assert response["status"] == "ok"
        assert response["stdout"] == "] )\n"

    def test_nested_tool_call(self):
        # one tool's output feeds straight into the next tool's input
        proc = run_runner([HOURS_FROM, DESCRIBE_HOURS], "print(describe_hours(hours_from(90)))")
        response = decode(proc.stdout)
        assert response["status"] == "ok"
        assert response["stdout"] == "1.5 hours\n"

    def test_tools_share_one_namespace(self):
        caller = ("twice_sum", "def twice_sum(a, b):\n    return add(a, b) * 2")
        proc = run_runner([ADD, caller], "print(twice_sum(3, 4))")
        response = decode(proc.stdout)
        assert response["status"] == "ok"
        assert response["stdout"] == "14\n"


class TestErrorReporting:
    def test_runtime_error_carries_traceback(self):
        proc = run_runner([ADD], "print(add(2, undefined_name))")
        assert proc.returncode == 0  # properly reported result
        response = decode(proc.stdout)
        assert response["status"] == "runtime_error"
        assert "Traceback" in response["stderr"]
        assert "undefined_name" in response["stderr"]

    def test_division_by_zero_reported(self):
        proc = run_runner([], "print(1 / 0)")
        response = decode(proc.stdout)
        assert response["status"] == "runtime_error"
        assert "ZeroDivisionError" in response["stderr"]

    def test_broken_tool_blocks_call_code(self):
        broken = ("broken", "def broken(:\n    pass")
        proc = run_runner(
            [broken, ADD], 'open("/tmp/should-not-exist-cos", "w").write("x")'
        )
        assert proc.returncode == 0
        response = decode(proc.stdout)
        assert response["status"] == "runtime_error"
        assert "broken" in response["stderr"]
        assert not Path("/tmp/should-not-exist-cos").exists()

    def test_partial_stdout_kept_on_error(self):
        proc = run_runner([], 'print("before")\nraise RuntimeError("after")')
        response = decode(proc.stdout)
        assert response["status"] == "runtime_error"
        assert response["stdout"] == "before\n"


class TestProtocol:
    def test_roundtrip_one_mebibyte_of_tool_source(self):
        big_body = "def big():\n    return 1\n# " + "x" * (1024 * 1024)
        proc = run_runner([("big", big_body), ADD], "print(add(big(), 1))")
        response = decode(proc.stdout)
        assert response["status"] == "ok"
        assert response["stdout"] == "2\n"

    def test_user_prints_never_escape_the_record(self):
        proc = run_runner([], 'print("A" * 100)')
        # stdout holds exactly one framed record; the user text lives inside it
        assert proc.stdout.count(b"\n") == 1
        response = decode(proc.stdout)
        assert response["stdout"] == "A" * 100 + "\n"

    def test_user_stderr_captured(self):
        proc = run_runner([], 'import sys\nsys.stderr.write("warning!")\nprint("ok")')
        response = decode(proc.stdout)
        assert response["status"] == "ok"
        assert "warning!" in response["stderr"]
        assert proc.stderr == b""

    def test_malformed_stdin_fails_with_diagnostic(self):
        proc = subprocess.run(
            [sys.executable, str(RUNNER), "--one-shot"],
            input=b"garbage that is not framed",
            capture_output=True,
            timeout=10.0,
        )
        assert proc.returncode != 0
        assert b"protocol failure" in proc.stderr

    def test_missing_call_code_fails(self):
        proc = subprocess.run(
            [sys.executable, str(RUNNER), "--one-shot"],
            input=encode({"tool_sources": []}),
            capture_output=True,
            timeout=10.0,
        )
        assert proc.returncode != 0

    def test_requires_one_shot_flag(self):
        proc = subprocess.run(
            [sys.executable, str(RUNNER)], input=b"", capture_output=True, timeout=10.0
        )
        assert proc.returncode == 2
        assert b"usage" in proc.stderr

    def test_one_shot_contract(self):
        # a second request on stdin is never read; the process exits after one
        double = encode({"tool_sources": [], "call_code": "print(1)", "soft_timeout": 5}) + encode(
            {"tool_sources": [], "call_code": "print(2)", "soft_timeout": 5}
        )
        proc = subprocess.run(
            [sys.executable, str(RUNNER), "--one-shot"],
            input=double,
            capture_output=True,
            timeout=10.0,
        )
        assert proc.returncode == 0
        assert proc.stdout.count(b"\n") == 1
        assert decode(proc.stdout)["stdout"] == "1\n"

    def test_soft_timeout_best_effort(self):
        proc = run_runner([], "while True:\n    pass", soft_timeout=0.5, timeout=8.0)
        response = decode(proc.stdout)
        assert response["status"] == "runtime_error"
        assert "soft timeout" in response["stderr"].lower() or "SoftTimeout" in response["stderr"]
