from __future__ import annotations

import pytest

from coskit.backend import ScriptedBackend
from coskit.engine import (
    PLAN_EMPTY,
    call,
    create_toolkit,
    extract_call_code,
    extract_code_blocks,
    parse_plan_tools,
    plan,
    run_calling_test,
    run_planning_test,
    solve,
)
from coskit.errors import EmptyDecision, InvalidLabels, UnparseableToolkitOutput
from coskit.metrics import Matcher, PlanLabels
from coskit.sandbox import ExecutionResult, ExecutionStatus, StubExecutor, ok_result
from coskit.toolkit import Tool, build_toolkit
from tests.conftest import SpyBackend

KIT = build_toolkit(
    "nav",
    [
        Tool("move_forward", "Advance n steps.", "def move_forward(n):\n    return n"),
        Tool("turn", "Rotate the heading.", "def turn(h):\n    return h"),
        Tool("reset", "Return to the origin.", "def reset():\n    return 0"),
    ],
)


class TestParsePlanTools:
    def test_whole_word_scan(self):
        selected = parse_plan_tools("First use move_forward, then turn.", KIT)
        assert selected == ("move_forward", "turn")

    def test_boundary_rule(self):
        assert parse_plan_tools("We make a turnaround here.", KIT) == ()

    def test_empty_plan(self):
        assert parse_plan_tools("", KIT) == ()

    def test_first_mention_order_and_dedup(self):
        text = "turn then move_forward then turn again"
        assert parse_plan_tools(text, KIT) == ("turn", "move_forward")

    def test_idempotent(self):
        selected = parse_plan_tools("use turn and reset", KIT)
        assert parse_plan_tools(" ".join(selected), KIT) == selected

    def test_punctuation_boundaries(self):
        assert parse_plan_tools("(move_forward)", KIT) == ("move_forward",)


class TestCodeExtraction:
    def test_single_fence(self):
        assert extract_call_code("```\nprint(add(2,3))\n```") == "print(add(2,3))"

    def test_prose_then_fence(self):
        text = "Here is the code.\n```python\nx = 1\nprint(x)\n```\nDone."
        assert extract_call_code(text) == "x = 1\nprint(x)"

    def test_multiple_fences_concatenated(self):
        text = "```python\na = 1\n```\nand then\n```python\nprint(a)\n```"
        assert extract_call_code(text) == "a = 1\nprint(a)"

    def test_no_fence_falls_back_to_whole_output(self):
        assert extract_call_code("print(42)") == "print(42)"

    def test_blank_output_rejected(self):
        with pytest.raises(EmptyDecision):
            extract_call_code("   \n  ")

    def test_block_listing(self):
        assert extract_code_blocks("none here") == []


class TestPlanStage:
    def test_selection_from_response(self):
        backend = ScriptedBackend({"Question:": "I will use turn and then reset."})
        produced = plan("q", KIT, backend)
        assert produced.selected == ("turn", "reset")

    def test_zero_selection_is_legal(self):
        backend = ScriptedBackend({"Question:": "No tools needed."})
        assert plan("q", KIT, backend).selected == ()

    def test_deterministic_under_fixed_backend(self):
        backend = ScriptedBackend({"Question:": "use move_forward"})
        assert plan("q", KIT, backend) == plan("q", KIT, backend)


class TestCallStage:
    def test_fence_extraction(self):
        backend = ScriptedBackend({"Plan:": "```\nprint(move_forward(3))\n```"})
        decision = call("q", "the plan", KIT, ("move_forward",), backend)
        assert decision.code == "print(move_forward(3))"
        assert decision.raw.startswith("```")

    def test_blank_output_rejected(self):
        backend = ScriptedBackend({"Plan:": "   "})
        with pytest.raises(EmptyDecision):
            call("q", "plan", KIT, ("turn",), backend)

    def test_empty_selection_rejected(self):
        backend = ScriptedBackend({"Plan:": "x"})
        with pytest.raises(ValueError):
            call("q", "plan", KIT, (), backend)


def scripted_solver(plan_text: str, code: str) -> ScriptedBackend:
    # calling prompts contain the plan text, so key them first
    return ScriptedBackend([("Plan:", f"```python\n{code}\n```"), ("Question:", plan_text)])


class TestSolve:
    def test_full_chain(self):
        backend = scripted_solver("use move_forward then turn", "print(move_forward(3))")
        stub = StubExecutor()
        stub.record("print(move_forward(3))", ok_result("True\n"))
        trace = solve("q", KIT, backend, stub)
        assert trace.answer == "True"
        assert trace.plan.selected == ("move_forward", "turn")
        assert trace.failed_stage is None
        assert set(trace.stage_timings) == {"plan", "call", "execute"}

    def test_plan_empty_without_fallback(self):
        backend = ScriptedBackend({"Question:": "nothing to select"})
        trace = solve("q", KIT, backend, StubExecutor())
        assert trace.failed_stage == "plan"
        assert trace.error == PLAN_EMPTY
        assert trace.decision is None

    def test_plan_empty_with_fallback_uses_all_tools(self):
        backend = ScriptedBackend(
            [("Plan:", "```python\nprint(reset())\n```"), ("Question:", "nothing to select")]
        )
        stub = StubExecutor()
        stub.record("print(reset())", ok_result("0\n"))
        spy = SpyBackend(backend)
        trace = solve("q", KIT, spy, stub, fallback_all_tools=True)
        assert trace.answer == "0"
        calling_prompt = spy.requests[-1].last_user_content
        for tool in KIT.tools:
            assert tool.body in calling_prompt

    def test_execution_timeout_recorded(self):
        backend = scripted_solver("use turn", "print(turn(1))")
        stub = StubExecutor()
        stub.record(
            "print(turn(1))",
            ExecutionResult(ExecutionStatus.TIMEOUT, "", "killed", None, 10.0),
        )
        trace = solve("q", KIT, backend, stub)
        assert trace.answer is None
        assert trace.execution.status is ExecutionStatus.TIMEOUT
        assert trace.failed_stage == "execute"

    def test_backend_failure_lands_on_trace(self):
        backend = ScriptedBackend({})  # every request misses
        trace = solve("q", KIT, backend, StubExecutor())
        assert trace.failed_stage == "plan"
        assert "scripted" in trace.error or "no scripted" in trace.error

    def test_stage_order_invariant(self):
        backend = scripted_solver("use turn", "print(turn(1))")
        stub = StubExecutor()
        stub.record("print(turn(1))", ok_result("1\n"))
        trace = solve("q", KIT, backend, stub)
        assert trace.plan is not None and trace.decision is not None
        no_call = solve("q", KIT, ScriptedBackend({"Question:": "none"}), stub)
        assert no_call.decision is None and no_call.execution is None


class TestCreateToolkit:
    TWO_TOOLS = (
        "Tool 1: add\nIntroduction: Adds two numbers.\n"
        "```python\ndef add(a, b):\n    return a + b\n```\n\n"
        "Tool 2: scale\nIntroduction: Multiplies by a factor.\n"
        "```python\ndef scale(x, k):\n    return x * k\n```\n"
    )

    def test_parses_two_tools(self):
        backend = ScriptedBackend({"Task description": self.TWO_TOOLS})
        kit = create_toolkit("arith", "Add and scale numbers.", [("1+1?", "2")], backend)
        assert kit.names == ("add", "scale")
        assert kit.tools[0].introduction == "Adds two numbers."
        assert "def add" in kit.tools[0].body

    def test_prose_only_rejected(self):
        backend = ScriptedBackend({"Task description": "I would decompose the task as follows."})
        with pytest.raises(UnparseableToolkitOutput):
            create_toolkit("arith", "desc", [("1+1?", "2")], backend)

    def test_fence_without_def_skipped(self):
        text = "Intro.\n```python\nx = 1\n```\n" + self.TWO_TOOLS
        backend = ScriptedBackend({"Task description": text})
        kit = create_toolkit("arith", "desc", [("1+1?", "2")], backend)
        assert kit.names == ("add", "scale")


LABELS = PlanLabels(frozenset({"move_forward", "turn"}), frozenset({"reset"}))


class TestPlanningTest:
    def test_perfect_plan(self):
        backend = ScriptedBackend({"Question:": "use move_forward and turn"})
        _, score = run_planning_test("q", LABELS, KIT, backend)
        assert score.acc == 1.0

    def test_invalid_labels(self):
        bad = PlanLabels(frozenset({"move_forward"}), frozenset())
        backend = ScriptedBackend({"Question:": "x"})
        with pytest.raises(InvalidLabels):
            run_planning_test("q", bad, KIT, backend)

    def test_one_correct_one_redundant(self):
        backend = ScriptedBackend({"Question:": "use turn and reset"})
        _, score = run_planning_test("q", LABELS, KIT, backend)
        assert score.acc == 0.0


class TestCallingTest:
    def test_prompt_contains_exactly_useful_bodies(self):
        inner = ScriptedBackend({"Plan:": "```python\nprint(turn(1))\n```"})
        spy = SpyBackend(inner)
        stub = StubExecutor()
        stub.record("print(turn(1))", ok_result("ok\n"))
        run_calling_test(
            "q", "gold plan", ("move_forward", "turn"), "ok", Matcher("string"), KIT, spy, stub
        )
        prompt = spy.requests[0].last_user_content
        assert "gold plan" in prompt
        assert KIT.tool("move_forward").body in prompt
        assert KIT.tool("turn").body in prompt
        assert KIT.tool("reset").body not in prompt

    def test_matched_flag(self):
        backend = ScriptedBackend({"Plan:": "```python\nprint(turn(1))\n```"})
        stub = StubExecutor()
        stub.record("print(turn(1))", ok_result("right\n"))
        _, execution, matched = run_calling_test(
            "q", "plan", ("turn",), "right", Matcher("string"), KIT, backend, stub
        )
        assert matched is True
        assert execution.status is ExecutionStatus.OK

    def test_wrong_value_not_matched_but_ok(self):
        backend = ScriptedBackend({"Plan:": "```python\nprint(turn(1))\n```"})
        stub = StubExecutor()
        stub.record("print(turn(1))", ok_result("wrong\n"))
        _, execution, matched = run_calling_test(
            "q", "plan", ("turn",), "right", Matcher("string"), KIT, backend, stub
        )
        assert matched is False
        assert execution.status is ExecutionStatus.OK

    def test_preconditions(self):
        backend = ScriptedBackend({})
        with pytest.raises(InvalidLabels):
            run_calling_test("q", "plan", (), "g", Matcher("string"), KIT, backend, StubExecutor())
        with pytest.raises(ValueError):
            run_calling_test(
                "q", "  ", ("turn",), "g", Matcher("string"), KIT, backend, StubExecutor()
            )
