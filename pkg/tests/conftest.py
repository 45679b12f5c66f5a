import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import _acceptance_log  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    lines = _acceptance_log.LINES
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(lines):
        ok, detail = lines[cid]
        terminalreporter.write_line(f"criterion {cid:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def scenario():
    from fasisac.channel import ScenarioConfig, scenario_sample
    return scenario_sample(np.random.default_rng(7), ScenarioConfig())
