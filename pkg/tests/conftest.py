import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tools"))

FIXTURES = ROOT / "fixtures"
DATA = Path(__file__).resolve().parent / "data"


@pytest.fixture(scope="session")
def fixture_wavs():
    return sorted(FIXTURES.glob("speech*.wav"))


@pytest.fixture(scope="session")
def text_steganogram():
    return (FIXTURES / "steganogram.txt").read_bytes()


def pytest_configure(config):
    config._acceptance_lines = {}


@pytest.fixture
def acceptance(request):
    """Call with (criterion number, ok, detail); the line is printed in the terminal summary."""
    def record(n, ok, detail):
        request.config._acceptance_lines[n] = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        assert ok, detail
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
