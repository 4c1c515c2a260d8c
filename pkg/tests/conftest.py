from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ebf.corpus import bundled_dir, load_corpus, load_task  # noqa: E402
from ebf.lang import SourceProgram, parse  # noqa: E402


@pytest.fixture(scope="session")
def corpus_tasks():
    return {t.name: t for t in load_corpus()}


@pytest.fixture(scope="session")
def corpus_dir():
    return bundled_dir()


def task_source(task) -> SourceProgram:
    return SourceProgram(str(task.path), task.path.read_text(encoding="utf-8"))


def task_ast(task):
    return parse(task_source(task))
