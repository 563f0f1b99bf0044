"""Shared fixtures: the synthetic corpus is built once per session."""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from corpusgen import generate_corpus  # noqa: E402


@pytest.fixture(scope="session")
def corpus_bundle():
    return generate_corpus()


@pytest.fixture(scope="session")
def detector_config(corpus_bundle):
    return corpus_bundle.detector_config()


@pytest.fixture(scope="session")
def surrogate_policy(corpus_bundle):
    return corpus_bundle.surrogate_policy()


# One line per acceptance criterion, echoed after the summary so the verdicts
# survive output capturing. test_acceptance.py appends to this list.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
