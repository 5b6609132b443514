"""Chat-completion backends and the prompt builders for every run method.

Three interchangeable backends sit behind one ``complete`` contract:

* ``HttpBackend`` talks to a chat-completions endpoint (credentials from
  ``COS_API_BASE`` / ``COS_API_KEY`` / ``COS_MODEL``), retrying network
  failures with exponential backoff.
* ``ReplayBackend`` replays recorded responses keyed by a canonical
  request digest, which makes every downstream run model-free and
  deterministic.
* ``ScriptedBackend`` serves canned responses from a substring table,
  for tests and synthetic data runs.

Prompt builders are pure functions: equal inputs yield byte-equal
requests, so replay digests are stable across processes.
"""
from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import CassetteMiss, MalformedFile, NetworkError, Timeout
from .toolkit import Toolkit, render_for_calling, render_for_planning

# Instructions used verbatim in every planning / calling prompt and in
# exported instruction records. Do not edit: downstream filters and
# finetuning data match on the exact byte sequence.
PLANNING_INSTRUCTION = (
    "You are presented with a question and several tools that may be useful. "
    "Select the useful tools and plan how to solve the problem."
)
CALLING_INSTRUCTION = "Use the tool given in the input to write code to solve the problem."

CREATION_INSTRUCTION = (
    "You are given the description of a task and several sample problems with "
    "their answers. Break the task down into subtasks and create a toolkit of "
    "Python functions that together can solve any problem of this kind. For "
    "every tool, write a short introduction describing its purpose, inputs, "
    "and outputs, followed by its implementation in a fenced code block."
)
CREATION_FORMAT_DEMO = (
    "Follow this format for every tool:\n\n"
    "Tool 1: <tool_name>\n"
    "Introduction: <what the tool does, its inputs and outputs>\n"
    "```python\n"
    "def <tool_name>(...):\n"
    "    ...\n"
    "```"
)

DEFAULT_TEMPERATURE = 0.3
DEFAULT_MAX_TOKENS = 1024

ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str


@dataclass(frozen=True)
class ChatRequest:
    """One chat-completion request; immutable and digestable.

    ``metadata`` carries run-log annotations (for example the baseline
    method tag) and is deliberately excluded from the replay digest.
    """

    messages: tuple[ChatMessage, ...]
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    metadata: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("a request needs at least one message")
        for msg in self.messages:
            if msg.role not in ROLES:
                raise ValueError(f"unknown role: {msg.role!r}")
        if self.messages[-1].role != "user":
            raise ValueError("the last message must come from the user")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature out of range: {self.temperature}")
        if self.max_tokens <= 0:
            raise ValueError(f"max_tokens must be positive: {self.max_tokens}")

    @property
    def last_user_content(self) -> str:
        return self.messages[-1].content


@dataclass(frozen=True)
class ChatResponse:
    text: str
    backend_id: str
    latency: float = 0.0


def user_request(content: str, **kwargs) -> ChatRequest:
    return ChatRequest(messages=(ChatMessage("user", content),), **kwargs)


def request_digest(req: ChatRequest) -> str:
    """Canonical content digest: messages + temperature + max_tokens only."""
    canon = json.dumps(
        {
            "messages": [[m.role, m.content] for m in req.messages],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Backends


class Backend(ABC):
    backend_id: str = "backend"

    @abstractmethod
    def complete(self, req: ChatRequest) -> ChatResponse:
        """Produce one response for the request; raises on failure."""


class ReplayBackend(Backend):
    """Replays recorded responses; lookups are read-only after load."""

    backend_id = "replay"

    def __init__(self, cassette_path: str | Path, strict: bool = True):
        self.cassette_path = Path(cassette_path)
        self.strict = strict
        if strict and not self.cassette_path.exists():
            raise MalformedFile(f"replay cassette not found: {self.cassette_path}")
        self._responses: dict[str, str] = {}
        if self.cassette_path.exists():
            for line in self.cassette_path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                record = json.loads(line)
                self._responses[record["digest"]] = record["response"]

    def __len__(self) -> int:
        return len(self._responses)

    def complete(self, req: ChatRequest) -> ChatResponse:
        digest = request_digest(req)
        if digest not in self._responses:
            head = req.last_user_content[:80].replace("\n", " ")
            raise CassetteMiss(f"no recorded response for digest {digest[:12]}… ({head!r})")
        return ChatResponse(text=self._responses[digest], backend_id=self.backend_id)


class RecordingBackend(Backend):
    """Wraps another backend and appends (digest, request, response) records."""

    def __init__(self, inner: Backend, cassette_path: str | Path):
        self.inner = inner
        self.cassette_path = Path(cassette_path)
        self.backend_id = f"record({inner.backend_id})"
        self._lock = threading.Lock()
        self._seen: set[str] = set()

    def complete(self, req: ChatRequest) -> ChatResponse:
        resp = self.inner.complete(req)
        digest = request_digest(req)
        record = {
            "digest": digest,
            "request": {
                "messages": [[m.role, m.content] for m in req.messages],
                "temperature": req.temperature,
                "max_tokens": req.max_tokens,
            },
            "response": resp.text,
        }
        with self._lock:
            if digest not in self._seen:
                self._seen.add(digest)
                with self.cassette_path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        return resp


class ScriptedBackend(Backend):
    """Fixed response table; the first key (in insertion order) that is a
    substring of the last user message wins."""

    backend_id = "scripted"

    def __init__(self, table: Mapping[str, str] | Iterable[tuple[str, str]]):
        self.table = list(table.items()) if isinstance(table, Mapping) else list(table)

    def complete(self, req: ChatRequest) -> ChatResponse:
        content = req.last_user_content
        for key, response in self.table:
            if key in content:
                return ChatResponse(text=response, backend_id=self.backend_id)
        raise CassetteMiss(f"no scripted response matches: {content[:80]!r}")


class HttpBackend(Backend):
    """Chat-completions HTTP endpoint with retries and an in-flight cap."""

    def __init__(
        self,
        endpoint: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        timeout: float = 60.0,
        retries: int = 2,
        max_inflight: int = 8,
    ):
        self.endpoint = (endpoint or os.environ.get("COS_API_BASE", "")).rstrip("/")
        self.model = model or os.environ.get("COS_MODEL", "")
        self.api_key = api_key or os.environ.get("COS_API_KEY", "")
        if not self.endpoint or not self.model:
            raise NetworkError("HTTP backend needs COS_API_BASE and COS_MODEL")
        self.timeout = timeout
        self.retries = retries
        self.backend_id = f"http:{self.model}"
        self._inflight = threading.BoundedSemaphore(max_inflight)

    def complete(self, req: ChatRequest) -> ChatResponse:
        import requests

        payload = {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in req.messages],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = f"{self.endpoint}/chat/completions"
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(0.5 * 2 ** (attempt - 1))
            start = time.perf_counter()
            try:
                with self._inflight:
                    resp = requests.post(url, json=payload, headers=headers, timeout=self.timeout)
                resp.raise_for_status()
                text = resp.json()["choices"][0]["message"]["content"]
                return ChatResponse(
                    text=text,
                    backend_id=self.backend_id,
                    latency=time.perf_counter() - start,
                )
            except requests.Timeout as exc:
                last_error = Timeout(f"request timed out after {self.timeout}s")
                last_error.__cause__ = exc
            except (requests.ConnectionError, requests.HTTPError, KeyError, ValueError) as exc:
                last_error = NetworkError(str(exc))
                last_error.__cause__ = exc
        assert last_error is not None
        raise last_error


@dataclass(frozen=True)
class BackendConfig:
    """Declarative backend selection, as stored in run configurations."""

    kind: str  # "http" | "replay" | "scripted"
    cassette_path: str = ""
    strict: bool = True
    table: tuple[tuple[str, str], ...] = ()
    endpoint: str = ""
    model: str = ""
    timeout: float = 60.0
    retries: int = 2


def make_backend(cfg: BackendConfig) -> Backend:
    if cfg.kind == "replay":
        return ReplayBackend(cfg.cassette_path, strict=cfg.strict)
    if cfg.kind == "scripted":
        return ScriptedBackend(cfg.table)
    if cfg.kind == "http":
        return HttpBackend(
            endpoint=cfg.endpoint or None,
            model=cfg.model or None,
            timeout=cfg.timeout,
            retries=cfg.retries,
        )
    raise ValueError(f"unknown backend kind: {cfg.kind!r}")


# ---------------------------------------------------------------------------
# Prompt builders


def planning_input(kit: Toolkit, query: str) -> str:
    """Input half of a planning prompt: full toolkit (no bodies) + query."""
    return f"{render_for_planning(kit)}\n\nQuestion: {query}"


def calling_input(kit: Toolkit, selected: Sequence[str], plan: str, query: str) -> str:
    """Input half of a calling prompt: selected tools with bodies, plan, query."""
    return f"{render_for_calling(kit, selected)}\n\nPlan:\n{plan}\n\nQuestion: {query}"


def build_planning_prompt(query: str, kit: Toolkit) -> ChatRequest:
    content = f"{PLANNING_INSTRUCTION}\n\n{planning_input(kit, query)}"
    return user_request(content, metadata=(("stage", "planning"),))


def build_calling_prompt(query: str, plan: str, kit: Toolkit, selected: Sequence[str]) -> ChatRequest:
    content = f"{CALLING_INSTRUCTION}\n\n{calling_input(kit, selected, plan, query)}"
    return user_request(content, metadata=(("stage", "calling"),))


def build_toolkit_creation_prompt(
    task_description: str, samples: Sequence[tuple[str, str]]
) -> ChatRequest:
    """Creation prompt: instruction, format demo, sample data, task description."""
    if not samples:
        raise ValueError("toolkit creation needs at least one data sample")
    sample_lines = []
    for sample_input, gold in samples:
        sample_lines.append(f"Input: {sample_input}\nAnswer: {gold}")
    content = (
        f"{CREATION_INSTRUCTION}\n\n"
        f"{CREATION_FORMAT_DEMO}\n\n"
        f"Sample problems:\n" + "\n\n".join(sample_lines) + "\n\n"
        f"Task description: {task_description}"
    )
    return user_request(content, metadata=(("stage", "creation"),))


def build_baseline_prompt(
    query: str,
    method: str,
    demos: Sequence[Mapping[str, str]] = (),
) -> ChatRequest:
    """Vanilla (direct answer) and CoT (reason first) baseline prompts."""
    if method == "vanilla":
        content = f"Question: {query}\nAnswer:"
    elif method == "cot":
        parts = []
        for demo in demos:
            parts.append(
                f"Question: {demo['question']}\n"
                f"Answer: {demo['reasoning']} So the answer is {demo['answer']}."
            )
        parts.append(f"Question: {query}\nAnswer: Let's think step by step.")
        content = "\n\n".join(parts)
    else:
        raise ValueError(f"unknown baseline method: {method!r}")
    return user_request(content, metadata=(("method", method),))


def last_nonempty_line(text: str) -> str | None:
    """Answer extraction for baseline runs: last non-empty line, trimmed."""
    for line in reversed(text.splitlines()):
        stripped = line.strip()
        if stripped:
            return stripped
    return None
