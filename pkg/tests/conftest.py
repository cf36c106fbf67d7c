import pytest

from sdrkms.cryptosuite import generate_suite, toy_suite
from world import make_world


@pytest.fixture(scope="session")
def suite32():
    return generate_suite(32, bytes(32))


@pytest.fixture(scope="session")
def toy():
    return toy_suite()


@pytest.fixture
def world(suite32):
    return make_world(suite32, ("lead", "d1", "d2"))


def pytest_terminal_summary(terminalreporter):
    import sys

    lines = {}
    for mod in list(sys.modules.values()):
        lines.update(getattr(mod, "ACCEPTANCE_RESULTS", None) or {})
    if lines:
        terminalreporter.section("acceptance")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
