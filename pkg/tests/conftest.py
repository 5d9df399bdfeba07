import numpy as np
import pytest

from rankpoison import attack_dynamic


@pytest.fixture(autouse=True, scope="session")
def _check_ball_membership():
    # every worst-case solve in the suite asserts chi-square ball membership
    old = attack_dynamic.CHECK_INVARIANTS
    attack_dynamic.CHECK_INVARIANTS = True
    yield
    attack_dynamic.CHECK_INVARIANTS = old


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} -- {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
