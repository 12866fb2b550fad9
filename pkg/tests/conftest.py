import time

import pytest

_RESULTS: dict[int, tuple[bool, str, float]] = {}


class Criterion:
    def __init__(self, number: int, title: str, limit_s: float):
        self.number = number
        self.title = title
        self.limit_s = limit_s
        self.start = time.perf_counter()

    def finish(self, ok: bool, detail: str) -> None:
        elapsed = time.perf_counter() - self.start
        within = elapsed < self.limit_s
        if not within:
            detail += f"; runtime {elapsed:.1f} s exceeds {self.limit_s:.0f} s"
        _RESULTS[self.number] = (ok and within, f"{self.title}: {detail}", elapsed)
        assert ok and within, detail


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        ok, text, elapsed = _RESULTS[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d} ({elapsed:6.1f} s) {text}")
