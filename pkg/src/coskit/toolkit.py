"""Tools and toolkits: file parsing, validation, and prompt rendering.

A toolkit is an ordered set of named tools, each carrying a short
introduction and an opaque source body. Toolkits are immutable after
parsing and safe to share across concurrent workers. The two renderers
produce the prompt fragments used by the planning stage (introductions
only) and the calling stage (introductions plus bodies of a selection).
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DuplicateToolName, EmptyToolkit, MalformedFile, UnknownToolName

_IDENTIFIER_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

PROVENANCE_RAW = "raw"


@dataclass(frozen=True)
class Tool:
    """A named capability: introduction for prompting, body for execution."""

    name: str
    introduction: str
    body: str
    addresses: str | None = None


@dataclass(frozen=True)
class Toolkit:
    """An ordered collection of tools created for one task.

    ``borrowed_from`` is None for a toolkit created for its own task and
    holds the source task id when the toolkit was borrowed from another
    task for cross-task runs.
    """

    task_id: str
    tools: tuple[Tool, ...]
    borrowed_from: str | None = None

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(tool.name for tool in self.tools)

    @property
    def provenance(self) -> str:
        if self.borrowed_from is None:
            return PROVENANCE_RAW
        return f"borrowed:{self.borrowed_from}"

    def tool(self, name: str) -> Tool:
        for tool in self.tools:
            if tool.name == name:
                return tool
        raise UnknownToolName(f"no tool named {name!r} in toolkit {self.task_id!r}")


def validate_toolkit(kit: Toolkit) -> list[str]:
    """Return every invariant violation in the toolkit; empty list = valid."""
    violations: list[str] = []
    if not kit.task_id:
        violations.append("empty task_id")
    if not kit.tools:
        violations.append("toolkit has no tools")
    seen: set[str] = set()
    for tool in kit.tools:
        if not _IDENTIFIER_RE.match(tool.name or ""):
            violations.append(f"invalid identifier: {tool.name!r}")
        if tool.name in seen:
            violations.append(f"duplicate tool name: {tool.name}")
        seen.add(tool.name)
        if not tool.introduction.strip():
            violations.append(f"empty introduction: {tool.name}")
        if not tool.body.strip():
            violations.append(f"empty body: {tool.name}")
    return violations


def build_toolkit(task_id: str, tools: Iterable[Tool], borrowed_from: str | None = None) -> Toolkit:
    """Assemble and validate a toolkit, raising on any violation."""
    kit = Toolkit(task_id=task_id, tools=tuple(tools), borrowed_from=borrowed_from)
    if not kit.tools:
        raise EmptyToolkit(f"toolkit {task_id!r} has no tools")
    names = kit.names
    dupes = {name for name in names if names.count(name) > 1}
    if dupes:
        raise DuplicateToolName(f"duplicate tool names in {task_id!r}: {sorted(dupes)}")
    violations = validate_toolkit(kit)
    if violations:
        raise MalformedFile(f"invalid toolkit {task_id!r}: " + "; ".join(violations))
    return kit


def parse_toolkit(text: str) -> Toolkit:
    """Parse a .toolkit document (JSON) into a validated Toolkit."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"unparseable toolkit file: {exc}") from exc
    if not isinstance(doc, dict) or "task_id" not in doc or "tools" not in doc:
        raise MalformedFile("toolkit file must be an object with task_id and tools")
    provenance = doc.get("provenance", PROVENANCE_RAW)
    borrowed_from = None
    if isinstance(provenance, str) and provenance.startswith("borrowed:"):
        borrowed_from = provenance.split(":", 1)[1]
    elif provenance != PROVENANCE_RAW:
        raise MalformedFile(f"unknown provenance: {provenance!r}")
    tools = []
    for entry in doc["tools"]:
        if not isinstance(entry, dict):
            raise MalformedFile(f"tool entry is not an object: {entry!r}")
        try:
            tools.append(
                Tool(
                    name=entry["name"],
                    introduction=entry["introduction"],
                    body=entry["body"],
                    addresses=entry.get("addresses"),
                )
            )
        except KeyError as exc:
            raise MalformedFile(f"tool entry missing field {exc}") from exc
    return build_toolkit(doc["task_id"], tools, borrowed_from=borrowed_from)


def serialize_toolkit(kit: Toolkit) -> str:
    """Inverse of parse_toolkit; parse(serialize(kit)) == kit field-for-field."""
    doc = {
        "task_id": kit.task_id,
        "provenance": kit.provenance,
        "tools": [
            {
                "name": tool.name,
                "introduction": tool.introduction,
                "body": tool.body,
                **({"addresses": tool.addresses} if tool.addresses is not None else {}),
            }
            for tool in kit.tools
        ],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def load_toolkit(path: str | Path) -> Toolkit:
    return parse_toolkit(Path(path).read_text(encoding="utf-8"))


def save_toolkit(kit: Toolkit, path: str | Path) -> None:
    Path(path).write_text(serialize_toolkit(kit), encoding="utf-8")


def render_for_planning(kit: Toolkit) -> str:
    """Render name + introduction for every tool, in toolkit order, no bodies."""
    blocks = [f"Tool: {tool.name}\nIntroduction: {tool.introduction}" for tool in kit.tools]
    return "\n\n".join(blocks)


def render_for_calling(kit: Toolkit, selected: Sequence[str]) -> str:
    """Render introduction plus full body of exactly the selected tools.

    Blocks appear in selection order; an unknown name raises UnknownToolName.
    """
    blocks = []
    for name in selected:
        tool = kit.tool(name)
        blocks.append(
            f"Tool: {tool.name}\n"
            f"Introduction: {tool.introduction}\n"
            f"Implementation:\n```python\n{tool.body}\n```"
        )
    return "\n\n".join(blocks)
