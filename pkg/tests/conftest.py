import time

import pytest

from chernkit.manifold import conformal_torus, flat_torus, iwasawa

GATE_LINES = []


class Gate:
    """Collects the checks of one acceptance criterion and reports a single verdict."""

    def __init__(self, number, title):
        self.number = number
        self.title = title
        self.checks = []
        self.closed = False
        self.t0 = time.perf_counter()

    @property
    def elapsed(self):
        return time.perf_counter() - self.t0

    def check(self, label, ok, value=None):
        self.checks.append((label, bool(ok), value))
        return ok

    def close(self):
        self.closed = True
        bad = [(lbl, v) for lbl, ok, v in self.checks if not ok]
        status = "FAIL" if bad or not self.checks else "PASS"
        line = (f"{status} criterion {self.number}: {self.title} "
                f"({len(self.checks) - len(bad)}/{len(self.checks)} checks, {self.elapsed:.1f} s)")
        GATE_LINES.append(line)
        print(line)
        for lbl, v in bad:
            print(f"    failed: {lbl} value={v}")
        assert not bad and self.checks, f"criterion {self.number} failed: {bad}"


@pytest.fixture
def gate():
    made = []

    def make(number, title):
        g = Gate(number, title)
        made.append(g)
        return g

    yield make
    for g in made:
        if not g.closed:
            line = f"FAIL criterion {g.number}: {g.title} (aborted with an error)"
            GATE_LINES.append(line)
            print(line)


def pytest_terminal_summary(terminalreporter):
    if GATE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(GATE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def iw():
    return iwasawa()


@pytest.fixture(scope="session")
def flat2():
    return flat_torus(2)


@pytest.fixture(scope="session")
def conf():
    return conformal_torus(0.1)
