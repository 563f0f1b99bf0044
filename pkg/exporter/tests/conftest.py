"""Shared test setup: import path, PNG factory, acceptance line echo."""

import pathlib
import sys

import numpy as np
import pytest
from PIL import Image

ROOT = pathlib.Path(__file__).resolve().parent.parent
SRC = ROOT / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def write_png(tmp_path):
    """Write uint8 pixel grids as PNG files under tmp_path and return the path."""

    def _write(name, pixels, mode="L", directory=None):
        arr = np.asarray(pixels, dtype=np.uint8)
        target = pathlib.Path(directory) if directory is not None else tmp_path
        target.mkdir(parents=True, exist_ok=True)
        path = target / name
        Image.fromarray(arr, mode=mode).save(path)
        return path

    return _write
