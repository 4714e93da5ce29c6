import numpy as np
import pytest


class ScriptedRNG:
    """Stand-in for numpy's Generator that replays fixed uniform draws."""

    def __init__(self, uniforms=(), randoms=()):
        self._u = list(uniforms)
        self._r = list(randoms)

    def uniform(self, low=0.0, high=1.0, size=None):
        if size is None:
            return self._u.pop(0)
        return np.array([self._u.pop(0) for _ in range(size)])

    def random(self, size=None):
        if size is None:
            return self._r.pop(0)
        return np.array([self._r.pop(0) for _ in range(size)])

    def exponential(self, scale=1.0, size=None):
        return scale


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed at the end of the session
CRITERIA: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}"
    CRITERIA[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[number])
