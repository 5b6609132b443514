#!/usr/bin/env python3
"""One-shot execution runner.

Reads exactly one framed request record from stdin, defines the tool
functions in a shared fresh namespace (so tools may call each other),
runs the call code in that namespace with its output captured, and
emits exactly one framed response record on stdout before exiting.

Wire format, both directions: ``<payload byte length>:<compact JSON>\\n``.
Request: {"tool_sources": [[name, body], ...], "call_code": str,
"soft_timeout": seconds}. Response: {"status": "ok" | "runtime_error",
"stdout": str, "stderr": str}.

Exit code 0 for any properly reported result (including runtime errors
in the user code); nonzero only when the protocol itself fails. Invoked
as ``cos_runner.py --one-shot``; the host's kill is the authoritative
timeout, the soft timeout here is best effort.
"""
from __future__ import annotations

import io
import json
import signal
import sys
import traceback
from contextlib import redirect_stderr, redirect_stdout

EXIT_OK = 0
EXIT_PROTOCOL = 1
EXIT_USAGE = 2


class SoftTimeout(Exception):
    pass


def read_request(stream) -> dict:
    prefix = bytearray()
    while True:
        ch = stream.read(1)
        if not ch:
            raise ValueError("stdin closed before a request arrived")
        if ch == b":":
            break
        if not ch.isdigit() or len(prefix) > 19:
            raise ValueError("bad length prefix")
        prefix += ch
    if not prefix:
        raise ValueError("empty length prefix")
    length = int(prefix)
    payload = bytearray()
    while len(payload) < length:
        chunk = stream.read(length - len(payload))
        if not chunk:
            raise ValueError("stdin closed mid-request")
        payload += chunk
    return json.loads(payload.decode("utf-8"))


def write_response(stream, record: dict) -> None:
    payload = json.dumps(record, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    stream.write(b"%d:%s\n" % (len(payload), payload))
    stream.flush()


def arm_soft_timeout(seconds) -> None:
    if not seconds or not hasattr(signal, "SIGALRM"):
        return

    def on_alarm(signum, frame):
        raise SoftTimeout(f"soft timeout after {seconds}s")

    try:
        signal.signal(signal.SIGALRM, on_alarm)
        signal.setitimer(signal.ITIMER_REAL, float(seconds))
    except (ValueError, OSError):
        pass


def run_once(request: dict) -> dict:
    """Load tools, run the call code, report the outcome as a record."""
    namespace: dict = {"__name__": "__cos_call__"}
    captured_out = io.StringIO()
    captured_err = io.StringIO()

    for name, body in request.get("tool_sources", []):
        try:
            with redirect_stdout(captured_out), redirect_stderr(captured_err):
                exec(compile(body, f"<tool:{name}>", "exec"), namespace)
        except BaseException:
            return {
                "status": "runtime_error",
                "stdout": captured_out.getvalue(),
                "stderr": f"tool {name!r} failed to load:\n" + traceback.format_exc(),
            }

    arm_soft_timeout(request.get("soft_timeout"))
    error_text = ""
    status = "ok"
    try:
        with redirect_stdout(captured_out), redirect_stderr(captured_err):
            exec(compile(request["call_code"], "<call>", "exec"), namespace)
    except BaseException:
        status = "runtime_error"
        error_text = traceback.format_exc()
    finally:
        if hasattr(signal, "SIGALRM"):
            try:
                signal.setitimer(signal.ITIMER_REAL, 0.0)
            except (ValueError, OSError):
                pass

    stderr_text = captured_err.getvalue()
    if error_text:
        stderr_text = stderr_text + error_text
    return {"status": status, "stdout": captured_out.getvalue(), "stderr": stderr_text}


def main(argv: list[str]) -> int:
    if argv != ["--one-shot"]:
        print("usage: cos_runner.py --one-shot", file=sys.stderr)
        return EXIT_USAGE
    stdin = sys.stdin.buffer
    stdout = sys.stdout.buffer
    try:
        request = read_request(stdin)
        if not isinstance(request, dict) or "call_code" not in request:
            raise ValueError("request record lacks call_code")
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"protocol failure: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    response = run_once(request)
    write_response(stdout, response)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
