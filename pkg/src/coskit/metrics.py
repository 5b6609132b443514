"""Planning accuracy, answer matchers, and per-task aggregation.

The planning score compares the set of tools a plan called against the
gold useful/redundant partition of the toolkit:

    acc = max((|called ∩ useful| - |called ∩ redundant|)
              / (|called ∩ useful| + |called ∩ redundant|), 0)

with acc = 0 when nothing was called (selecting nothing solves nothing).
Answer matchers cover numeric values, dimension lists, and normalized
strings; aggregation groups run records into a task × method table.
"""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import InvalidLabels, UnknownToolInCall

MATCHER_KINDS = ("numeric", "dim_list", "string")

_CURRENCY_CHARS = "$€£¥,"
_INT_RE = re.compile(r"-?\d+")
_BRACKET_RE = re.compile(r"\[([^\[\]]*)\]")


@dataclass(frozen=True)
class PlanLabels:
    """Gold partition of a toolkit into useful and redundant tools."""

    k_use: frozenset[str]
    k_rdt: frozenset[str]

    def validate_against(self, toolkit_names: Iterable[str]) -> None:
        names = set(toolkit_names)
        if self.k_use & self.k_rdt:
            raise InvalidLabels(f"overlapping labels: {sorted(self.k_use & self.k_rdt)}")
        if self.k_use | self.k_rdt != names:
            missing = names - (self.k_use | self.k_rdt)
            extra = (self.k_use | self.k_rdt) - names
            raise InvalidLabels(f"labels do not cover the toolkit (missing={sorted(missing)}, unknown={sorted(extra)})")


@dataclass(frozen=True)
class PlanScore:
    correct: int
    error: int
    acc: float


@dataclass(frozen=True)
class Matcher:
    """Answer comparison rule; ``abs_tol`` applies to the numeric kind only."""

    kind: str = "string"
    abs_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.kind not in MATCHER_KINDS:
            raise ValueError(f"unknown matcher kind: {self.kind!r}")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be non-negative")


def plan_accuracy(k_call: Iterable[str], labels: PlanLabels) -> PlanScore:
    """Score a called-tool set against the labels (clipped at zero)."""
    called = set(k_call)
    unknown = called - (labels.k_use | labels.k_rdt)
    if unknown:
        raise UnknownToolInCall(f"called tools outside the labels: {sorted(unknown)}")
    correct = len(called & labels.k_use)
    error = len(called & labels.k_rdt)
    if correct + error == 0:
        acc = 0.0
    else:
        acc = max((correct - error) / (correct + error), 0.0)
    return PlanScore(correct=correct, error=error, acc=acc)


def _parse_number(text: str) -> float | None:
    cleaned = text.strip()
    for ch in _CURRENCY_CHARS:
        cleaned = cleaned.replace(ch, "")
    cleaned = cleaned.strip()
    if not cleaned:
        return None
    try:
        return float(cleaned)
    except ValueError:
        return None


def _parse_dim_list(text: str) -> list[int] | None:
    match = _BRACKET_RE.search(text)
    if match is None:
        return None
    return [int(tok) for tok in _INT_RE.findall(match.group(1))]


def _normalize_string(text: str) -> str:
    return re.sub(r"\s+", " ", text.strip()).casefold()


def match_answer(candidate: str, gold: str, matcher: Matcher) -> bool:
    """Compare a candidate answer to gold; unparseable candidates are wrong,
    not errors."""
    if not gold:
        raise ValueError("gold answer must be non-empty")
    if matcher.kind == "numeric":
        a = _parse_number(candidate)
        b = _parse_number(gold)
        if a is None or b is None:
            return False
        return abs(a - b) <= matcher.abs_tol
    if matcher.kind == "dim_list":
        a_dims = _parse_dim_list(candidate)
        b_dims = _parse_dim_list(gold)
        if a_dims is None or b_dims is None:
            return False
        return a_dims == b_dims
    return _normalize_string(candidate) == _normalize_string(gold)


def macro_average(values: Sequence[float]) -> float:
    """Unweighted mean across tasks (the report's Average column)."""
    if not values:
        return 0.0
    return sum(values) / len(values)


# ---------------------------------------------------------------------------
# Aggregation


@dataclass(frozen=True)
class ReportCell:
    task: str
    method: str
    accuracy: float  # percentage in [0, 100]
    count: int


_METHOD_ORDER = {"vanilla": 0, "cot": 1, "cos": 2, "plan": 3, "call": 4}

REPORT_FOOTNOTE = (
    "Planning cells are means of per-query plan scores "
    "(not the fraction of perfect plans)."
)


class ReportTable:
    """Task × method accuracy table with a macro-average column."""

    def __init__(self, cells: Iterable[ReportCell]):
        self.cells = sorted(cells, key=lambda c: (self._method_key(c.method), c.task))

    @staticmethod
    def _method_key(method: str) -> tuple[int, str]:
        return (_METHOD_ORDER.get(method, len(_METHOD_ORDER)), method)

    @property
    def tasks(self) -> list[str]:
        return sorted({c.task for c in self.cells})

    @property
    def methods(self) -> list[str]:
        seen = {c.method for c in self.cells}
        return sorted(seen, key=self._method_key)

    def cell(self, task: str, method: str) -> ReportCell | None:
        for c in self.cells:
            if c.task == task and c.method == method:
                return c
        return None

    def row_average(self, method: str) -> float:
        values = [c.accuracy for c in self.cells if c.method == method]
        return macro_average(values)

    def render_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        tasks = self.tasks
        writer.writerow(["method", *tasks, "Average"])
        for method in self.methods:
            row: list[str] = [method]
            for task in tasks:
                cell = self.cell(task, method)
                row.append(f"{cell.accuracy:.2f}" if cell else "")
            writer.writerow([*row, f"{self.row_average(method):.2f}"])
        return buf.getvalue()

    def render_text(self) -> str:
        tasks = self.tasks
        if not tasks:
            return "(no records)\n"
        headers = ["method", *tasks, "Average"]
        rows: list[list[str]] = []
        for method in self.methods:
            row = [method]
            for task in tasks:
                cell = self.cell(task, method)
                row.append(f"{cell.accuracy:.2f}" if cell else "-")
            row.append(f"{self.row_average(method):.2f}")
            rows.append(row)
        widths = [max(len(headers[i]), *(len(r[i]) for r in rows)) for i in range(len(headers))]
        lines = [" | ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
        lines.append("-+-".join("-" * w for w in widths))
        for row in rows:
            lines.append(" | ".join(v.ljust(widths[i]) for i, v in enumerate(row)))
        counts = ", ".join(
            f"{task}={max(c.count for c in self.cells if c.task == task)}" for task in tasks
        )
        lines.append("")
        lines.append(f"queries per task: {counts}")
        lines.append(REPORT_FOOTNOTE)
        return "\n".join(lines) + "\n"


def aggregate(records: Iterable[Mapping]) -> ReportTable:
    """Fold run records into per-(task, method) accuracies.

    A record carries either ``score`` (planning runs, averaged) or
    ``matched`` (answer runs, fraction correct); accuracies are reported
    as percentages.
    """
    groups: dict[tuple[str, str], list[Mapping]] = {}
    for record in records:
        groups.setdefault((record["task"], record["method"]), []).append(record)
    cells = []
    for (task, method), members in groups.items():
        if any(r.get("score") is not None for r in members):
            values = [float(r["score"] or 0.0) for r in members]
            accuracy = macro_average(values) * 100.0
        else:
            matched = sum(1 for r in members if r.get("matched"))
            accuracy = matched / len(members) * 100.0
        cells.append(ReportCell(task=task, method=method, accuracy=accuracy, count=len(members)))
    return ReportTable(cells)
