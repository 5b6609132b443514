from __future__ import annotations

import sys
from pathlib import Path

import pytest

from coskit.backend import Backend, ChatRequest, ChatResponse

REPO_ROOT = Path(__file__).resolve().parents[1]
FIXTURES = REPO_ROOT / "fixtures"
RUNNER_CMD = f"{sys.executable} {REPO_ROOT / 'runner' / 'cos_runner.py'} --one-shot"

TASK_IDS = [
    "arithmetic",
    "boolean_expression",
    "chinese_remainder",
    "date_understanding",
    "dyck_language",
    "matrix_shape",
    "navigate",
    "tracking_shuffled_objects",
]


class SpyBackend(Backend):
    """Delegating backend that keeps every request for prompt inspection."""

    def __init__(self, inner: Backend):
        self.inner = inner
        self.backend_id = inner.backend_id
        self.requests: list[ChatRequest] = []

    def complete(self, req: ChatRequest) -> ChatResponse:
        self.requests.append(req)
        return self.inner.complete(req)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def cassette_path() -> Path:
    return FIXTURES / "cassettes" / "fixture.jsonl"


@pytest.fixture(scope="session")
def stub_table_path() -> Path:
    return FIXTURES / "stubs" / "fixture.jsonl"


@pytest.fixture(scope="session")
def tasks_dir() -> Path:
    return FIXTURES / "tasks"


@pytest.fixture(scope="session")
def runner_cmd() -> str:
    return RUNNER_CMD
