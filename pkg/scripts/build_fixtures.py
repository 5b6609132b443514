#!/usr/bin/env python3
"""Regenerate the shipped fixtures: tasks, toolkits, replay cassette, stub table.

Everything downstream tests rely on is derived here from one authored
description per task: tool sources, queries with gold answers, the plan
text the "model" replays, and the call code it emits. The script is
self-checking: it refuses to write fixtures whose plans do not parse to
the labeled tools or whose call code does not reproduce the gold answer.

Run from the repo root after an editable install:

    python scripts/build_fixtures.py
"""
from __future__ import annotations

import io
import json
import sys
from contextlib import redirect_stdout
from dataclasses import dataclass, field
from pathlib import Path

from coskit.backend import (
    build_baseline_prompt,
    build_calling_prompt,
    build_planning_prompt,
    request_digest,
)
from coskit.engine import parse_plan_tools
from coskit.metrics import Matcher, match_answer
from coskit.sandbox import code_digest
from coskit.toolkit import Tool, build_toolkit, save_toolkit

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"

WRONG_BY_KIND = {"numeric": "999999", "dim_list": "[0, 0]", "string": "unknown"}
WRONG_VANILLA_INDICES = {1, 4}


@dataclass
class Q:
    input: str
    gold: str
    use: list[str]
    plan: str
    code: str


@dataclass
class TaskDef:
    id: str
    category: str
    description: str
    matcher: Matcher
    tools: list[Tool]
    queries: list[Q]
    cot_demos: list[dict] = field(default_factory=list)
    baselines: bool = True
    borrow_tools_from: str | None = None  # prompts/labels target this toolkit


# ---------------------------------------------------------------------------
# arithmetic: 5 tools, numeric answers

ARITH_TOOLS = [
    Tool(
        "add",
        "Return the sum of two numbers a and b.",
        "def add(a, b):\n    return a + b",
        "addition of two numbers",
    ),
    Tool(
        "subtract",
        "Return the difference a minus b.",
        "def subtract(a, b):\n    return a - b",
        "subtraction of two numbers",
    ),
    Tool(
        "multiply",
        "Return the product of two numbers a and b.",
        "def multiply(a, b):\n    return a * b",
        "multiplication of two numbers",
    ),
    Tool(
        "divide",
        "Return the quotient a over b as a float.",
        "def divide(a, b):\n    return a / b",
        "division of two numbers",
    ),
    Tool(
        "power",
        "Return a raised to the exponent b.",
        "def power(a, b):\n    return a ** b",
        "exponentiation",
    ),
]

ARITH_QUERIES = [
    Q(
        "Compute (3 + 5) * 4.",
        "32",
        ["add", "multiply"],
        "First combine 3 and 5 with the add tool, then feed the sum and 4 "
        "to the multiply tool to get the result.",
        "print(multiply(add(3, 5), 4))",
    ),
    Q(
        "What is 100 - 37?",
        "63",
        ["subtract"],
        "A single call to the subtract tool with 100 and 37 answers this.",
        "print(subtract(100, 37))",
    ),
    Q(
        "Compute 2 to the 10th.",
        "1024",
        ["power"],
        "Use the power tool with base 2 and exponent 10.",
        "print(power(2, 10))",
    ),
    Q(
        "What is (18 / 3) + 7?",
        "13",
        ["divide", "add"],
        "Use the divide tool on 18 and 3, then the add tool to bring in 7.",
        "print(add(divide(18, 3), 7))",
    ),
    Q(
        "Compute 12 * 12 - 50.",
        "94",
        ["multiply", "subtract"],
        "The multiply tool squares 12, then the subtract tool removes 50.",
        "print(subtract(multiply(12, 12), 50))",
    ),
    Q(
        "What is 7 + 8 + 9?",
        "24",
        ["add"],
        "Chain the add tool twice: first 7 and 8, then the sum with 9.",
        "print(add(add(7, 8), 9))",
    ),
    Q(
        "Compute (5 - 2) ** 3.",
        "27",
        ["subtract", "power"],
        "Take 5 minus 2 with the subtract tool, then cube it with the power tool.",
        "print(power(subtract(5, 2), 3))",
    ),
    Q(
        "What is 144 / 12?",
        "12",
        ["divide"],
        "One call to the divide tool with 144 and 12 is enough.",
        "print(divide(144, 12))",
    ),
    Q(
        "Compute 25 * 4 + 10.",
        "110",
        ["multiply", "add"],
        "Use the multiply tool on 25 and 4, then the add tool to include 10.",
        "print(add(multiply(25, 4), 10))",
    ),
    Q(
        "What is ((2 + 3) * (10 - 4)) / 2?",
        "15",
        ["add", "subtract", "multiply", "divide"],
        "Use the add tool for 2 plus 3 and the subtract tool for 10 minus 4, "
        "then the multiply tool on both results, and finally the divide tool by 2.",
        "print(divide(multiply(add(2, 3), subtract(10, 4)), 2))",
    ),
]

# ---------------------------------------------------------------------------
# date_understanding: 3 tools, string answers (MM/DD/YYYY)

DATE_TOOLS = [
    Tool(
        "parse_date",
        "Parse a date string in MM/DD/YYYY format into a date object.",
        'def parse_date(text):\n    from datetime import datetime\n'
        '    return datetime.strptime(text, "%m/%d/%Y").date()',
        "reading a calendar date",
    ),
    Tool(
        "shift_days",
        "Return the date n days after the given date; n may be negative.",
        "def shift_days(d, n):\n    from datetime import timedelta\n"
        "    return d + timedelta(days=n)",
        "moving along the calendar",
    ),
    Tool(
        "format_date",
        "Format a date object back into MM/DD/YYYY.",
        'def format_date(d):\n    return d.strftime("%m/%d/%Y")',
        "printing a calendar date",
    ),
]


def _date_plan(reference: str, amount: str) -> str:
    return (
        f"Read {reference} with the parse_date tool, move it {amount} using the "
        "shift_days tool, and print the result with the format_date tool."
    )


DATE_QUERIES = [
    Q(
        "Today is 04/19/1969. What is the date 10 days from today? Answer in MM/DD/YYYY.",
        "04/29/1969",
        ["parse_date", "shift_days", "format_date"],
        _date_plan("the given date", "10 days forward"),
        'print(format_date(shift_days(parse_date("04/19/1969"), 10)))',
    ),
    Q(
        "Yesterday was 12/31/2020. What is the date today? Answer in MM/DD/YYYY.",
        "01/01/2021",
        ["parse_date", "shift_days", "format_date"],
        _date_plan("yesterday's date", "one day forward"),
        'd = parse_date("12/31/2020")\nd = shift_days(d, 1)\nprint(format_date(d))',
    ),
    Q(
        "Today is 03/01/2020. What was the date 2 days ago? Answer in MM/DD/YYYY.",
        "02/28/2020",
        ["parse_date", "shift_days", "format_date"],
        _date_plan("today's date", "2 days backward"),
        'print(format_date(shift_days(parse_date("03/01/2020"), -2)))',
    ),
    Q(
        "Today is 01/15/2015. What is the date one week from today? Answer in MM/DD/YYYY.",
        "01/22/2015",
        ["parse_date", "shift_days", "format_date"],
        _date_plan("today's date", "7 days forward"),
        'd = parse_date("01/15/2015")\nd = shift_days(d, 7)\nprint(format_date(d))',
    ),
    Q(
        "Today is 11/28/2021. What is the date 5 days from today? Answer in MM/DD/YYYY.",
        "12/03/2021",
        ["parse_date", "shift_days", "format_date"],
        _date_plan("today's date", "5 days forward"),
        'print(format_date(shift_days(parse_date("11/28/2021"), 5)))',
    ),
    Q(
        "Tomorrow is 06/01/2022. What was the date 3 days before today? Answer in MM/DD/YYYY.",
        "05/28/2022",
        ["parse_date", "shift_days", "format_date"],
        "Read tomorrow's date with the parse_date tool, step back 4 days with "
        "the shift_days tool (1 day to today plus 3 more), and print it with "
        "the format_date tool.",
        'print(format_date(shift_days(parse_date("06/01/2022"), -4)))',
    ),
    Q(
        "Today is 02/27/2019. What is the date 3 days from today? Answer in MM/DD/YYYY.",
        "03/02/2019",
        ["parse_date", "shift_days", "format_date"],
        _date_plan("today's date", "3 days forward"),
        'print(format_date(shift_days(parse_date("02/27/2019"), 3)))',
    ),
    Q(
        "Today is 07/04/1776. What was the date 10 days ago? Answer in MM/DD/YYYY.",
        "06/24/1776",
        ["parse_date", "shift_days", "format_date"],
        _date_plan("today's date", "10 days backward"),
        'print(format_date(shift_days(parse_date("07/04/1776"), -10)))',
    ),
    Q(
        "Today is 09/09/1999. What is the date 100 days from today? Answer in MM/DD/YYYY.",
        "12/18/1999",
        ["parse_date", "shift_days", "format_date"],
        _date_plan("today's date", "100 days forward"),
        'd = parse_date("09/09/1999")\nd = shift_days(d, 100)\nprint(format_date(d))',
    ),
    Q(
        "Today is 10/10/2010. What was the date one week ago? Answer in MM/DD/YYYY.",
        "10/03/2010",
        ["parse_date", "shift_days", "format_date"],
        _date_plan("today's date", "7 days backward"),
        'print(format_date(shift_days(parse_date("10/10/2010"), -7)))',
    ),
]

# ---------------------------------------------------------------------------
# matrix_shape: 5 tools, dimension-list answers

MATRIX_TOOLS = [
    Tool(
        "matmul_shape",
        "Given the shapes of two matrices as lists, return the shape of their "
        "matrix product; raises if the inner dimensions disagree.",
        "def matmul_shape(a, b):\n"
        '    if a[-1] != b[0]:\n        raise ValueError("inner dimensions do not match")\n'
        "    return a[:-1] + b[1:]",
        "shape of a matrix product",
    ),
    Tool(
        "elementwise_shape",
        "Return the shape of an elementwise combination (addition, subtraction, "
        "or Hadamard product) of two matrices; the shapes must be identical.",
        "def elementwise_shape(a, b):\n"
        '    if a != b:\n        raise ValueError("shapes differ")\n'
        "    return list(a)",
        "shape of elementwise operations",
    ),
    Tool(
        "transpose_shape",
        "Return the shape of the transpose of a matrix.",
        "def transpose_shape(a):\n    return list(reversed(a))",
        "shape of a transpose",
    ),
    Tool(
        "concat_shape",
        "Return the shape of two matrices concatenated along an axis "
        "(0 stacks rows, 1 stacks columns).",
        "def concat_shape(a, b, axis):\n"
        "    out = list(a)\n    out[axis] = a[axis] + b[axis]\n    return out",
        "shape of a concatenation",
    ),
    Tool(
        "flatten_shape",
        "Return the shape of a matrix flattened into a single row vector.",
        "def flatten_shape(a):\n"
        "    n = 1\n    for d in a:\n        n *= d\n    return [1, n]",
        "shape of a flattened matrix",
    ),
]

MATRIX_QUERIES = [
    Q(
        "Matrix A has shape [3, 4] and matrix B has shape [4, 5]. What is the shape of A @ B?",
        "[3, 5]",
        ["matmul_shape"],
        "The matmul_shape tool applied to [3, 4] and [4, 5] gives the product shape.",
        "print(matmul_shape([3, 4], [4, 5]))",
    ),
    Q(
        "Matrix A has shape [2, 3] and matrix B has shape [2, 3]. What is the shape of A + B?",
        "[2, 3]",
        ["elementwise_shape"],
        "Addition keeps the common shape, so the elementwise_shape tool answers this.",
        "print(elementwise_shape([2, 3], [2, 3]))",
    ),
    Q(
        "Matrix A has shape [6, 2]. What is the shape of A transposed?",
        "[2, 6]",
        ["transpose_shape"],
        "Apply the transpose_shape tool to [6, 2].",
        "print(transpose_shape([6, 2]))",
    ),
    Q(
        "Matrix A has shape [3, 4] and matrix B has shape [4, 2]. "
        "What is the shape of (A @ B) transposed?",
        "[2, 3]",
        ["matmul_shape", "transpose_shape"],
        "Get the product shape with the matmul_shape tool, then flip it with "
        "the transpose_shape tool.",
        "print(transpose_shape(matmul_shape([3, 4], [4, 2])))",
    ),
    Q(
        "Matrix A has shape [5, 7] and matrix B has shape [5, 7]. "
        "What is the shape of A and B concatenated along axis 0?",
        "[10, 7]",
        ["concat_shape"],
        "Stacking rows is exactly what the concat_shape tool computes with axis 0.",
        "print(concat_shape([5, 7], [5, 7], 0))",
    ),
    Q(
        "Matrix A has shape [2, 2] and matrix B has shape [2, 2]. "
        "What is the shape of the Hadamard product of A and B?",
        "[2, 2]",
        ["elementwise_shape"],
        "A Hadamard product is elementwise, so use the elementwise_shape tool.",
        "print(elementwise_shape([2, 2], [2, 2]))",
    ),
    Q(
        "Matrix A has shape [4, 3]. What is the shape of A flattened to a row vector?",
        "[1, 12]",
        ["flatten_shape"],
        "The flatten_shape tool turns [4, 3] into a single row.",
        "print(flatten_shape([4, 3]))",
    ),
    Q(
        "Matrix A has shape [2, 5], matrix B has shape [5, 5], and matrix D has "
        "shape [2, 5]. What is the shape of (A @ B) + D?",
        "[2, 5]",
        ["matmul_shape", "elementwise_shape"],
        "First the matmul_shape tool for A @ B, then the elementwise_shape tool "
        "to combine with D.",
        "print(elementwise_shape(matmul_shape([2, 5], [5, 5]), [2, 5]))",
    ),
    Q(
        "Matrix A has shape [3, 3] and matrix B has shape [3, 4]. "
        "What is the shape of A and B concatenated along axis 1?",
        "[3, 7]",
        ["concat_shape"],
        "Joining columns is the concat_shape tool with axis 1.",
        "print(concat_shape([3, 3], [3, 4], 1))",
    ),
    Q(
        "Matrix A has shape [2, 3] and matrix B has shape [3, 2]. "
        "What is the shape of (B transposed) @ (A transposed)?",
        "[2, 2]",
        ["transpose_shape", "matmul_shape"],
        "Use the transpose_shape tool on each shape, then the matmul_shape tool "
        "on the two results.",
        "print(matmul_shape(transpose_shape([3, 2]), transpose_shape([2, 3])))",
    ),
]

# ---------------------------------------------------------------------------
# navigate: 2 tools, True/False answers

NAVIGATE_TOOLS = [
    Tool(
        "move",
        "Advance the (x, y) position a number of steps along the unit heading "
        "(dx, dy); returns the new position.",
        "def move(position, heading, steps):\n"
        "    return (position[0] + heading[0] * steps, position[1] + heading[1] * steps)",
        "movement in a single direction",
    ),
    Tool(
        "turn",
        "Rotate the heading: direction is 'left', 'right', or 'around'; "
        "returns the new heading.",
        "def turn(heading, direction):\n"
        "    dx, dy = heading\n"
        '    if direction == "left":\n        return (-dy, dx)\n'
        '    if direction == "right":\n        return (dy, -dx)\n'
        '    if direction == "around":\n        return (-dx, -dy)\n'
        '    raise ValueError("unknown direction: %s" % direction)',
        "change of orientation",
    ),
]


def _nav_code(steps: list[tuple[str, object]]) -> str:
    lines = ["pos = (0, 0)", "heading = (0, 1)"]
    for op, arg in steps:
        if op == "move":
            lines.append(f"pos = move(pos, heading, {arg})")
        else:
            lines.append(f'heading = turn(heading, "{arg}")')
    lines.append("print(pos == (0, 0))")
    return "\n".join(lines)


_NAV_PLAN = (
    "Simulate the walk from the origin: update the position with the move tool "
    "for each stretch of steps and update the heading with the turn tool at "
    "each turn, then compare the final position with the origin."
)

NAVIGATE_QUERIES = [
    Q(
        "If you follow these instructions, do you end up back at the starting point? "
        "Take 3 steps. Turn around. Take 3 steps.",
        "True",
        ["move", "turn"],
        _NAV_PLAN,
        _nav_code([("move", 3), ("turn", "around"), ("move", 3)]),
    ),
    Q(
        "If you follow these instructions, do you end up back at the starting point? "
        "Take 5 steps. Turn left. Take 2 steps.",
        "False",
        ["move", "turn"],
        _NAV_PLAN,
        _nav_code([("move", 5), ("turn", "left"), ("move", 2)]),
    ),
    Q(
        "If you follow these instructions, do you end up back at the starting point? "
        "Turn right. Take 4 steps. Turn around. Take 4 steps.",
        "True",
        ["move", "turn"],
        _NAV_PLAN,
        _nav_code([("turn", "right"), ("move", 4), ("turn", "around"), ("move", 4)]),
    ),
    Q(
        "If you follow these instructions, do you end up back at the starting point? "
        "Take 2 steps. Take 3 steps. Turn around. Take 5 steps.",
        "True",
        ["move", "turn"],
        _NAV_PLAN,
        _nav_code([("move", 2), ("move", 3), ("turn", "around"), ("move", 5)]),
    ),
    Q(
        "If you follow these instructions, do you end up back at the starting point? "
        "Take 1 step. Turn left. Take 1 step. Turn left. Take 1 step. Turn left. Take 1 step.",
        "True",
        ["move", "turn"],
        _NAV_PLAN,
        _nav_code(
            [
                ("move", 1),
                ("turn", "left"),
                ("move", 1),
                ("turn", "left"),
                ("move", 1),
                ("turn", "left"),
                ("move", 1),
            ]
        ),
    ),
    Q(
        "If you follow these instructions, do you end up back at the starting point? "
        "Take 3 steps. Take 2 more steps.",
        "False",
        ["move"],
        "There are no turns here, so only the move tool is needed: walk 3 and "
        "then 2 steps along the initial heading and check the final position.",
        "pos = (0, 0)\nheading = (0, 1)\npos = move(pos, heading, 3)\n"
        "pos = move(pos, heading, 2)\nprint(pos == (0, 0))",
    ),
    Q(
        "If you follow these instructions, do you end up back at the starting point? "
        "Turn left. Take 3 steps. Turn around. Take 3 steps. Turn right. Take 2 steps.",
        "False",
        ["move", "turn"],
        _NAV_PLAN,
        _nav_code(
            [
                ("turn", "left"),
                ("move", 3),
                ("turn", "around"),
                ("move", 3),
                ("turn", "right"),
                ("move", 2),
            ]
        ),
    ),
    Q(
        "If you follow these instructions, do you end up back at the starting point? "
        "Take 10 steps. Turn around. Take 10 steps.",
        "True",
        ["move", "turn"],
        _NAV_PLAN,
        _nav_code([("move", 10), ("turn", "around"), ("move", 10)]),
    ),
    Q(
        "If you follow these instructions, do you end up back at the starting point? "
        "Take 4 steps. Turn right. Take 4 steps. Turn right. Take 4 steps. "
        "Turn right. Take 4 steps.",
        "True",
        ["move", "turn"],
        _NAV_PLAN,
        _nav_code(
            [
                ("move", 4),
                ("turn", "right"),
                ("move", 4),
                ("turn", "right"),
                ("move", 4),
                ("turn", "right"),
                ("move", 4),
            ]
        ),
    ),
    Q(
        "If you follow these instructions, do you end up back at the starting point? "
        "Turn around. Take 2 steps. Turn around. Take 2 steps.",
        "True",
        ["move", "turn"],
        _NAV_PLAN,
        _nav_code([("turn", "around"), ("move", 2), ("turn", "around"), ("move", 2)]),
    ),
]

# q5 walks a 1-step square; verify the expectation matches the simulation below.

# ---------------------------------------------------------------------------
# chinese_remainder: 2 tools, exact numeric answers

CRT_TOOLS = [
    Tool(
        "crt_solve",
        "Return the smallest non-negative integer x with x % m == r for every "
        "(r, m) pair from the parallel lists of remainders and moduli "
        "(moduli pairwise coprime).",
        "def crt_solve(remainders, moduli):\n"
        "    x = 0\n    step = 1\n"
        "    for r, m in zip(remainders, moduli):\n"
        "        while x % m != r % m:\n            x += step\n"
        "        step *= m\n"
        "    return x",
        "solving simultaneous congruences",
    ),
    Tool(
        "verify_solution",
        "Check whether x satisfies x % m == r for every (r, m) pair; "
        "returns True or False.",
        "def verify_solution(x, remainders, moduli):\n"
        "    return all(x % m == r % m for r, m in zip(remainders, moduli))",
        "checking a candidate solution",
    ),
]


def _crt_plan(verify: bool) -> str:
    base = (
        "Collect the remainders and moduli from the statement and hand them to "
        "the crt_solve tool for the smallest non-negative solution."
    )
    if verify:
        base += " Then confirm it with the verify_solution tool before printing."
    return base


CRT_QUERIES = [
    Q(
        "Find the smallest non-negative integer x such that x = 2 (mod 3) and x = 3 (mod 5).",
        "8",
        ["crt_solve"],
        _crt_plan(False),
        "print(crt_solve([2, 3], [3, 5]))",
    ),
    Q(
        "Find the smallest non-negative integer x such that x = 1 (mod 2) and x = 2 (mod 3).",
        "5",
        ["crt_solve"],
        _crt_plan(False),
        "print(crt_solve([1, 2], [2, 3]))",
    ),
    Q(
        "Find the smallest non-negative integer x such that x = 0 (mod 4) and x = 1 (mod 3).",
        "4",
        ["crt_solve"],
        _crt_plan(False),
        "print(crt_solve([0, 1], [4, 3]))",
    ),
    Q(
        "Find the smallest non-negative integer x such that x = 3 (mod 7) and x = 4 (mod 5).",
        "24",
        ["crt_solve", "verify_solution"],
        _crt_plan(True),
        "x = crt_solve([3, 4], [7, 5])\n"
        "assert verify_solution(x, [3, 4], [7, 5])\n"
        "print(x)",
    ),
    Q(
        "Find the smallest non-negative integer x such that x = 2 (mod 3), "
        "x = 3 (mod 5), and x = 2 (mod 7).",
        "23",
        ["crt_solve"],
        _crt_plan(False),
        "print(crt_solve([2, 3, 2], [3, 5, 7]))",
    ),
    Q(
        "Find the smallest non-negative integer x such that x = 5 (mod 6) and x = 4 (mod 11).",
        "59",
        ["crt_solve"],
        _crt_plan(False),
        "print(crt_solve([5, 4], [6, 11]))",
    ),
    Q(
        "Find the smallest non-negative integer x such that x = 1 (mod 5) and x = 2 (mod 6).",
        "26",
        ["crt_solve"],
        _crt_plan(False),
        "print(crt_solve([1, 2], [5, 6]))",
    ),
    Q(
        "Find the smallest non-negative integer x such that x = 0 (mod 9) and x = 8 (mod 10).",
        "18",
        ["crt_solve"],
        _crt_plan(False),
        "print(crt_solve([0, 8], [9, 10]))",
    ),
    Q(
        "Find the smallest non-negative integer x such that x = 6 (mod 7) and x = 1 (mod 4).",
        "13",
        ["crt_solve", "verify_solution"],
        _crt_plan(True),
        "x = crt_solve([6, 1], [7, 4])\n"
        "assert verify_solution(x, [6, 1], [7, 4])\n"
        "print(x)",
    ),
    Q(
        "Find the smallest non-negative integer x such that x = 2 (mod 11) and x = 3 (mod 4).",
        "35",
        ["crt_solve"],
        _crt_plan(False),
        "print(crt_solve([2, 3], [11, 4]))",
    ),
]

# ---------------------------------------------------------------------------
# dyck_language: 4 tools, string answers (closing sequences)

DYCK_TOOLS = [
    Tool(
        "is_opener",
        "Return True if the character is an opening bracket: ( [ { or <.",
        'def is_opener(ch):\n    return ch in "([{<"',
        "classifying a bracket",
    ),
    Tool(
        "closer_for",
        "Return the closing bracket matching the given opening bracket.",
        'def closer_for(ch):\n    return {"(": ")", "[": "]", "{": "}", "<": ">"}[ch]',
        "pairing brackets",
    ),
    Tool(
        "push",
        "Append an item to the stack (a list) and return the stack.",
        "def push(stack, item):\n    stack.append(item)\n    return stack",
        "stack push",
    ),
    Tool(
        "pop",
        "Remove and return the top item of the stack.",
        "def pop(stack):\n    return stack.pop()",
        "stack pop",
    ),
]


def _dyck_code(sequence: str) -> str:
    return (
        f'tokens = "{sequence}".split()\n'
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


_DYCK_PLAN = (
    "Walk the sequence keeping a stack: the is_opener tool decides whether to "
    "push the character with the push tool or to pop the matched opener with "
    "the pop tool; afterwards close what remains using the closer_for tool "
    "from the top of the stack down."
)


def _dyck_q(sequence: str, gold: str) -> Q:
    return Q(
        "Complete the rest of the sequence, making sure that the brackets are "
        f"closed properly. Input: {sequence}",
        gold,
        ["is_opener", "push", "pop", "closer_for"],
        _DYCK_PLAN,
        _dyck_code(sequence),
    )


DYCK_QUERIES = [
    _dyck_q("( [ { }", "] )"),
    _dyck_q("< ( )", ">"),
    _dyck_q("{ [ ] ( )", "}"),
    _dyck_q("( ( [ [", "] ] ) )"),
    Q(
        "Which single closing bracket completes this sequence? Input: (",
        ")",
        ["closer_for"],
        "A single opener is pending, so the closer_for tool gives its match directly.",
        'print(closer_for("("))',
    ),
    _dyck_q("( { [ ] } ( )", ")"),
    _dyck_q("< < ( ) >", ">"),
    _dyck_q("{ ( [ ( ) ]", ") }"),
    _dyck_q("[ ( ) [ ]", "]"),
    _dyck_q("( < [ ] > ( ) (", ") )"),
]

# ---------------------------------------------------------------------------
# boolean_expression: 2 tools, True/False answers

BOOLEAN_TOOLS = [
    Tool(
        "eval_boolean",
        "Evaluate a boolean expression string built from True, False, and, or, "
        "not, and parentheses; returns True or False.",
        "def eval_boolean(expr):\n"
        '    allowed = {"True", "False", "and", "or", "not", "(", ")"}\n'
        '    for token in expr.replace("(", " ( ").replace(")", " ) ").split():\n'
        "        if token not in allowed:\n"
        '            raise ValueError("unexpected token: %s" % token)\n'
        '    return eval(expr, {"__builtins__": {}}, {})',
        "evaluating a boolean expression",
    ),
    Tool(
        "negate",
        "Return the logical negation of a boolean value.",
        "def negate(value):\n    return not value",
        "flipping a truth value",
    ),
]


def _bool_q(expr: str, gold: str) -> Q:
    return Q(
        f"What is the truth value of: {expr}?",
        gold,
        ["eval_boolean"],
        "The whole expression goes straight into the eval_boolean tool.",
        f'print(eval_boolean("{expr}"))',
    )


def _bool_neg_q(expr: str, gold: str) -> Q:
    return Q(
        f"What is the negation of: {expr}?",
        gold,
        ["eval_boolean", "negate"],
        "Evaluate the expression with the eval_boolean tool, then flip the "
        "result with the negate tool.",
        f'print(negate(eval_boolean("{expr}")))',
    )


BOOLEAN_QUERIES = [
    _bool_q("not ( True and False ) or False", "True"),
    _bool_q("True and not False", "True"),
    _bool_q("( False or False ) and True", "False"),
    _bool_q("not not True", "True"),
    _bool_q("False or ( True and True )", "True"),
    _bool_neg_q("True and True", "False"),
    _bool_q("not ( False or True )", "False"),
    _bool_q("( True or False ) and ( False or True )", "True"),
    _bool_q("not False and not False", "True"),
    _bool_neg_q("False or False", "True"),
]

# ---------------------------------------------------------------------------
# tracking_shuffled_objects: 4 tools, string answers

TRACKING_TOOLS = [
    Tool(
        "assign",
        "Create the initial mapping from owner names to their items, "
        "given parallel lists of names and items.",
        "def assign(names, items):\n    return dict(zip(names, items))",
        "recording the initial assignment",
    ),
    Tool(
        "swap_items",
        "Swap the items held by two owners in the mapping; returns the mapping.",
        "def swap_items(holding, a, b):\n"
        "    holding[a], holding[b] = holding[b], holding[a]\n"
        "    return holding",
        "one pairwise swap",
    ),
    Tool(
        "item_of",
        "Return the item currently held by the given owner.",
        "def item_of(holding, name):\n    return holding[name]",
        "reading the final assignment",
    ),
    Tool(
        "apply_swaps",
        "Apply a sequence of (a, b) swap pairs to the mapping in order; "
        "returns the mapping.",
        "def apply_swaps(holding, swaps):\n"
        "    for a, b in swaps:\n"
        "        holding[a], holding[b] = holding[b], holding[a]\n"
        "    return holding",
        "a whole swap sequence",
    ),
]

_CAST = ["Alice", "Bob", "Claire"]


def _track_q(
    intro: str,
    items: list[str],
    swaps: list[tuple[str, str]],
    who: str,
    gold: str,
    batch: bool,
) -> Q:
    swap_text = " Then ".join(f"{a} and {b} swap." for a, b in swaps)
    question = f"{intro} {swap_text} At the end, what does {who} have?"
    items_py = ", ".join(f'"{item}"' for item in items)
    names_py = ", ".join(f'"{name}"' for name in _CAST)
    if batch:
        pairs = ", ".join(f'("{a}", "{b}")' for a, b in swaps)
        code = (
            f"holding = assign([{names_py}], [{items_py}])\n"
            f"apply_swaps(holding, [{pairs}])\n"
            f'print(item_of(holding, "{who}"))'
        )
        use = ["assign", "apply_swaps", "item_of"]
        plan = (
            "Record who starts with what using the assign tool, run the whole "
            "swap sequence with the apply_swaps tool, and read off the final "
            "holder with the item_of tool."
        )
    else:
        swap_lines = "\n".join(f'swap_items(holding, "{a}", "{b}")' for a, b in swaps)
        code = (
            f"holding = assign([{names_py}], [{items_py}])\n"
            f"{swap_lines}\n"
            f'print(item_of(holding, "{who}"))'
        )
        use = ["assign", "swap_items", "item_of"]
        plan = (
            "Record who starts with what using the assign tool, perform each "
            "exchange with the swap_items tool in the stated order, and read "
            "the result with the item_of tool."
        )
    return Q(question, gold, use, plan, code)


TRACKING_QUERIES = [
    _track_q(
        "Alice, Bob, and Claire have a red ball, a blue ball, and a green ball respectively.",
        ["red ball", "blue ball", "green ball"],
        [("Alice", "Bob"), ("Bob", "Claire")],
        "Claire",
        "red ball",
        batch=False,
    ),
    _track_q(
        "Alice, Bob, and Claire have a red ball, a blue ball, and a green ball respectively.",
        ["red ball", "blue ball", "green ball"],
        [("Alice", "Claire"), ("Alice", "Bob"), ("Bob", "Claire")],
        "Alice",
        "blue ball",
        batch=True,
    ),
    _track_q(
        "Alice, Bob, and Claire have a basketball, a soccer ball, and a tennis ball respectively.",
        ["basketball", "soccer ball", "tennis ball"],
        [("Bob", "Claire"), ("Alice", "Bob")],
        "Bob",
        "basketball",
        batch=False,
    ),
    _track_q(
        "Alice, Bob, and Claire have a basketball, a soccer ball, and a tennis ball respectively.",
        ["basketball", "soccer ball", "tennis ball"],
        [("Alice", "Bob"), ("Alice", "Claire"), ("Alice", "Bob")],
        "Claire",
        "soccer ball",
        batch=True,
    ),
    _track_q(
        "At a dance, Alice is partnered with Ophelia, Bob with Patrick, and Claire with Quinn.",
        ["Ophelia", "Patrick", "Quinn"],
        [("Alice", "Claire"), ("Bob", "Claire")],
        "Claire",
        "Patrick",
        batch=False,
    ),
    _track_q(
        "Alice, Bob, and Claire are reading Hamlet, Ulysses, and Dune respectively.",
        ["Hamlet", "Ulysses", "Dune"],
        [("Alice", "Bob"), ("Claire", "Alice"), ("Bob", "Claire")],
        "Bob",
        "Ulysses",
        batch=True,
    ),
    _track_q(
        "In the match, Alice plays striker, Bob plays goalkeeper, and Claire plays defender.",
        ["striker", "goalkeeper", "defender"],
        [("Bob", "Alice"), ("Claire", "Bob")],
        "Alice",
        "goalkeeper",
        batch=False,
    ),
    _track_q(
        "Alice, Bob, and Claire brought a kite, a drum, and a puzzle respectively.",
        ["kite", "drum", "puzzle"],
        [("Alice", "Claire"), ("Alice", "Bob"), ("Alice", "Claire")],
        "Alice",
        "kite",
        batch=True,
    ),
    _track_q(
        "Alice, Bob, and Claire have a red ball, a blue ball, and a green ball respectively.",
        ["red ball", "blue ball", "green ball"],
        [("Bob", "Claire")],
        "Bob",
        "green ball",
        batch=False,
    ),
    _track_q(
        "Alice, Bob, and Claire sit in seat 1, seat 2, and seat 3 respectively.",
        ["seat 1", "seat 2", "seat 3"],
        [("Alice", "Bob"), ("Bob", "Claire"), ("Claire", "Alice")],
        "Claire",
        "seat 2",
        batch=True,
    ),
]

# ---------------------------------------------------------------------------
# dynamic_counting: cross-toolkit fixture; solved with the dyck toolkit

COUNTING_TOOLS = [
    Tool(
        "tally",
        "Count how many items in the sequence equal the target symbol.",
        "def tally(items, target):\n"
        "    return sum(1 for item in items if item == target)",
        "counting occurrences",
    ),
    Tool(
        "running_depth",
        "Given +1/-1 increments, return the running depth after each step.",
        "def running_depth(increments):\n"
        "    depth = 0\n    out = []\n"
        "    for step in increments:\n        depth += step\n        out.append(depth)\n"
        "    return out",
        "tracking a running count",
    ),
]


def _count_code(sequence: str) -> str:
    return (
        f'tokens = "{sequence}".split()\n'
        "stack = []\n"
        "for ch in tokens:\n"
        "    if is_opener(ch):\n"
        "        push(stack, ch)\n"
        "    else:\n"
        "        pop(stack)\n"
        "print(len(stack))"
    )


_COUNT_PLAN = (
    "Track the brackets with a stack: the is_opener tool says whether to use "
    "the push tool or the pop tool; the number left on the stack at the end "
    "is the count of unclosed brackets."
)


def _count_q(sequence: str, gold: str) -> Q:
    return Q(
        f"How many brackets remain unclosed at the end of this sequence? Input: {sequence}",
        gold,
        ["is_opener", "push", "pop"],
        _COUNT_PLAN,
        _count_code(sequence),
    )


COUNTING_QUERIES = [
    _count_q("( ( ) (", "2"),
    _count_q("[ [ ]", "1"),
    _count_q("( ) ( )", "0"),
    _count_q("{ { { } {", "3"),
]

# ---------------------------------------------------------------------------

TASKS = [
    TaskDef(
        id="arithmetic",
        category="Mathematics",
        description=(
            "Evaluate small arithmetic expressions with the four basic "
            "operations and exponentiation. Ships 10 hand-built fixture queries."
        ),
        matcher=Matcher(kind="numeric", abs_tol=1e-6),
        tools=ARITH_TOOLS,
        queries=ARITH_QUERIES,
        cot_demos=[
            {
                "question": "What is 2 + 2?",
                "reasoning": "2 plus 2 equals 4.",
                "answer": "4",
            },
            {
                "question": "Compute 3 * 5.",
                "reasoning": "3 times 5 equals 15.",
                "answer": "15",
            },
        ],
    ),
    TaskDef(
        id="date_understanding",
        category="Common Sense",
        description=(
            "Shift calendar dates forwards or backwards and report the result "
            "in MM/DD/YYYY. Ships 10 hand-built fixture queries."
        ),
        matcher=Matcher(kind="string"),
        tools=DATE_TOOLS,
        queries=DATE_QUERIES,
        cot_demos=[
            {
                "question": "Today is 01/01/2000. What is the date tomorrow in MM/DD/YYYY?",
                "reasoning": "One day after January 1st is January 2nd.",
                "answer": "01/02/2000",
            },
            {
                "question": "Today is 05/10/2021. What was the date 5 days ago in MM/DD/YYYY?",
                "reasoning": "Five days before May 10th is May 5th.",
                "answer": "05/05/2021",
            },
        ],
    ),
    TaskDef(
        id="matrix_shape",
        category="Mathematics",
        description=(
            "Infer the shape of the result of matrix operations (product, "
            "elementwise ops, transpose, concatenation, flatten). "
            "Ships 10 hand-built fixture queries."
        ),
        matcher=Matcher(kind="dim_list"),
        tools=MATRIX_TOOLS,
        queries=MATRIX_QUERIES,
        cot_demos=[
            {
                "question": "Matrix A has shape [2, 4] and B has shape [4, 3]. Shape of A @ B?",
                "reasoning": "A product takes the outer dimensions, 2 and 3.",
                "answer": "[2, 3]",
            },
            {
                "question": "Matrix A has shape [5, 1]. Shape of A transposed?",
                "reasoning": "Transposing reverses the dimensions.",
                "answer": "[1, 5]",
            },
        ],
    ),
    TaskDef(
        id="navigate",
        category="Common Sense",
        description=(
            "Decide whether a sequence of movement instructions returns to the "
            "starting point. Answers are True or False. "
            "Ships 10 hand-built fixture queries."
        ),
        matcher=Matcher(kind="string"),
        tools=NAVIGATE_TOOLS,
        queries=NAVIGATE_QUERIES,
        cot_demos=[
            {
                "question": (
                    "If you follow these instructions, do you end up back at the "
                    "starting point? Take 2 steps. Turn around. Take 2 steps."
                ),
                "reasoning": "Two steps out and two steps back cancel out.",
                "answer": "True",
            },
            {
                "question": (
                    "If you follow these instructions, do you end up back at the "
                    "starting point? Take 1 step. Turn left. Take 1 step."
                ),
                "reasoning": "The two legs are perpendicular, so the walk ends away from the start.",
                "answer": "False",
            },
        ],
    ),
    TaskDef(
        id="chinese_remainder",
        category="Mathematics",
        description=(
            "Find the smallest non-negative integer satisfying simultaneous "
            "congruences with coprime moduli. Ships 10 hand-built fixture queries."
        ),
        matcher=Matcher(kind="numeric", abs_tol=0.0),
        tools=CRT_TOOLS,
        queries=CRT_QUERIES,
        cot_demos=[
            {
                "question": (
                    "Find the smallest non-negative integer x such that "
                    "x = 1 (mod 3) and x = 2 (mod 5)."
                ),
                "reasoning": "Numbers that are 2 mod 5 run 2, 7, 12; 7 is 1 mod 3.",
                "answer": "7",
            },
            {
                "question": (
                    "Find the smallest non-negative integer x such that "
                    "x = 0 (mod 2) and x = 1 (mod 5)."
                ),
                "reasoning": "Numbers that are 1 mod 5 run 1, 6, 11; 6 is even.",
                "answer": "6",
            },
        ],
    ),
    TaskDef(
        id="dyck_language",
        category="Logical Reasoning",
        description=(
            "Complete a bracket sequence with the closing brackets that balance "
            "it. Ships 10 hand-built fixture queries."
        ),
        matcher=Matcher(kind="string"),
        tools=DYCK_TOOLS,
        queries=DYCK_QUERIES,
        cot_demos=[
            {
                "question": (
                    "Complete the rest of the sequence, making sure that the "
                    "brackets are closed properly. Input: ( ["
                ),
                "reasoning": "The bracket opened last closes first: ] then ).",
                "answer": "] )",
            },
            {
                "question": (
                    "Complete the rest of the sequence, making sure that the "
                    "brackets are closed properly. Input: { ( )"
                ),
                "reasoning": "The parentheses already closed, leaving the brace.",
                "answer": "}",
            },
        ],
    ),
    TaskDef(
        id="boolean_expression",
        category="Logical Reasoning",
        description=(
            "Evaluate boolean expressions over True/False with and, or, not, "
            "and parentheses. Ships 10 hand-built fixture queries."
        ),
        matcher=Matcher(kind="string"),
        tools=BOOLEAN_TOOLS,
        queries=BOOLEAN_QUERIES,
        cot_demos=[
            {
                "question": "What is the truth value of: True and False?",
                "reasoning": "A conjunction with a False operand is False.",
                "answer": "False",
            },
            {
                "question": "What is the truth value of: not False?",
                "reasoning": "Negating False gives True.",
                "answer": "True",
            },
        ],
    ),
    TaskDef(
        id="tracking_shuffled_objects",
        category="Decomposition",
        description=(
            "Track which item each person holds after a sequence of pairwise "
            "swaps. Ships 10 hand-built fixture queries."
        ),
        matcher=Matcher(kind="string"),
        tools=TRACKING_TOOLS,
        queries=TRACKING_QUERIES,
        cot_demos=[
            {
                "question": (
                    "Alice and Bob have a pen and a pencil respectively. "
                    "Alice and Bob swap. At the end, what does Alice have?"
                ),
                "reasoning": "After the single swap Alice holds Bob's pencil.",
                "answer": "pencil",
            },
            {
                "question": (
                    "Alice, Bob, and Claire have a cat, a dog, and a fish respectively. "
                    "Bob and Claire swap. At the end, what does Claire have?"
                ),
                "reasoning": "Claire takes Bob's dog in the swap.",
                "answer": "dog",
            },
        ],
    ),
    TaskDef(
        id="dynamic_counting",
        category="Logical Reasoning",
        description=(
            "Count how many brackets remain unclosed in a sequence. Fixture for "
            "the cross-task toolkit mode: run it with the dyck_language toolkit "
            "via --toolkit-from. Ships 4 hand-built fixture queries."
        ),
        matcher=Matcher(kind="string"),
        tools=COUNTING_TOOLS,
        queries=COUNTING_QUERIES,
        baselines=False,
        borrow_tools_from="dyck_language",
    ),
]


# ---------------------------------------------------------------------------
# generation


def run_code(tools: list[Tool], selected: list[str], code: str) -> str:
    """Execute call code against the selected tools, mirroring the runner."""
    namespace: dict = {"__name__": "__cos_call__"}
    wanted = set(selected)
    for tool in tools:
        if tool.name in wanted:
            exec(compile(tool.body, f"<tool:{tool.name}>", "exec"), namespace)
    captured = io.StringIO()
    with redirect_stdout(captured):
        exec(compile(code, "<call>", "exec"), namespace)
    return captured.getvalue()


def main() -> int:
    for sub in ("tasks", "toolkits", "cassettes", "stubs"):
        (FIXTURES / sub).mkdir(parents=True, exist_ok=True)

    kits = {}
    for task in TASKS:
        kit = build_toolkit(task.id, task.tools)
        kits[task.id] = kit
        save_toolkit(kit, FIXTURES / "toolkits" / f"{task.id}.toolkit")

    cassette: dict[str, dict] = {}
    stub: dict[str, dict] = {}

    def record(req, response: str) -> None:
        digest = request_digest(req)
        entry = {
            "digest": digest,
            "request": {
                "messages": [[m.role, m.content] for m in req.messages],
                "temperature": req.temperature,
                "max_tokens": req.max_tokens,
            },
            "response": response,
        }
        if digest in cassette:
            assert cassette[digest]["response"] == response, "digest collision"
        cassette[digest] = entry

    for task in TASKS:
        prompt_kit = kits[task.borrow_tools_from] if task.borrow_tools_from else kits[task.id]
        matcher = task.matcher
        task_doc = {
            "id": task.id,
            "description": task.description,
            "category": task.category,
            "matcher": {"kind": matcher.kind, "abs_tol": matcher.abs_tol},
            "toolkit": f"../toolkits/{task.id}.toolkit",
            "demos": {"vanilla": [], "cot": task.cot_demos},
            "queries": [],
        }

        for index, q in enumerate(task.queries):
            plan_text = q.plan
            selected = parse_plan_tools(plan_text, prompt_kit)
            assert list(selected) == q.use, (
                f"{task.id}[{index}]: plan parses to {list(selected)}, expected {q.use}"
            )

            stdout = run_code(prompt_kit.tools, q.use, q.code)
            answer = stdout.strip().splitlines()[-1].strip()
            assert match_answer(answer, q.gold, matcher), (
                f"{task.id}[{index}]: code prints {answer!r}, gold {q.gold!r}"
            )

            record(build_planning_prompt(q.input, prompt_kit), plan_text)
            call_response = f"Here is the code implementing the plan.\n```python\n{q.code}\n```"
            record(build_calling_prompt(q.input, plan_text, prompt_kit, selected), call_response)

            stub[code_digest(q.code)] = {
                "digest": code_digest(q.code),
                "status": "ok",
                "stdout": stdout,
                "stderr": "",
                "wall_time": 0.0,
            }

            if task.baselines:
                wrong = WRONG_BY_KIND[matcher.kind]
                vanilla_answer = wrong if index in WRONG_VANILLA_INDICES else q.gold
                record(build_baseline_prompt(q.input, "vanilla", ()), vanilla_answer)
                cot_text = (
                    "Let's think step by step. Working carefully through the "
                    f"steps gives {q.gold}. So the answer is {q.gold}.\n{q.gold}"
                )
                record(build_baseline_prompt(q.input, "cot", task.cot_demos), cot_text)

            query_doc = {"input": q.input, "gold": q.gold, "gold_plan": plan_text}
            if not task.borrow_tools_from:
                rdt = [name for name in prompt_kit.names if name not in q.use]
                query_doc["labels"] = {"use": q.use, "rdt": rdt}
            task_doc["queries"].append(query_doc)

        task_path = FIXTURES / "tasks" / f"{task.id}.task"
        task_path.write_text(
            json.dumps(task_doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )

    cassette_path = FIXTURES / "cassettes" / "fixture.jsonl"
    with cassette_path.open("w", encoding="utf-8") as fh:
        for digest in sorted(cassette):
            fh.write(json.dumps(cassette[digest], ensure_ascii=False) + "\n")

    stub_path = FIXTURES / "stubs" / "fixture.jsonl"
    with stub_path.open("w", encoding="utf-8") as fh:
        for digest in sorted(stub):
            fh.write(json.dumps(stub[digest], ensure_ascii=False) + "\n")

    total_queries = sum(len(t.queries) for t in TASKS)
    print(
        f"wrote {len(TASKS)} tasks ({total_queries} queries), "
        f"{len(cassette)} cassette records, {len(stub)} stub entries"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
