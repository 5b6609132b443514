"""Framing for the host↔runner wire protocol.

One record per line: ``<payload byte length>:<compact JSON payload>\\n``.
The payload is single-line JSON (newlines inside strings are escaped), so
a record is both line-delimited and length-delimited; the length prefix
makes reads exact even if a stream is embedded in other output.
"""
from __future__ import annotations

import json
from typing import Any, BinaryIO

MAX_RECORD_BYTES = 64 * 1024 * 1024  # guards against a corrupt length prefix


def encode_record(obj: Any) -> bytes:
    payload = json.dumps(obj, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    return b"%d:%s\n" % (len(payload), payload)


def read_record(stream: BinaryIO) -> Any:
    """Read one framed record; raises ValueError on malformed framing."""
    prefix = bytearray()
    while True:
        ch = stream.read(1)
        if not ch:
            raise ValueError("stream closed before a record arrived")
        if ch == b":":
            break
        if not ch.isdigit() or len(prefix) > 19:
            raise ValueError(f"bad length prefix: {bytes(prefix + ch)!r}")
        prefix += ch
    if not prefix:
        raise ValueError("empty length prefix")
    length = int(prefix)
    if length > MAX_RECORD_BYTES:
        raise ValueError(f"record too large: {length} bytes")
    payload = bytearray()
    while len(payload) < length:
        chunk = stream.read(length - len(payload))
        if not chunk:
            raise ValueError("stream closed mid-record")
        payload += chunk
    terminator = stream.read(1)
    if terminator not in (b"\n", b""):
        raise ValueError(f"missing record terminator, got {terminator!r}")
    return json.loads(payload.decode("utf-8"))


def decode_record(data: bytes) -> Any:
    """Parse a single record from a byte buffer (e.g. captured stdout)."""
    import io

    return read_record(io.BytesIO(data))
