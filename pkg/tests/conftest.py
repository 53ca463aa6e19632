import pytest

from eqvardag import SemSpec


@pytest.fixture
def chain2():
    return SemSpec.from_edge_weights(2, {(0, 1): 1.0}, sigma2=1.0)


@pytest.fixture
def chain3():
    return SemSpec.from_edge_weights(3, {(0, 1): 1.0, (1, 2): 1.0}, sigma2=1.0)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for rep in terminalreporter.getreports("passed") + terminalreporter.getreports("failed"):
        if rep.when != "call":
            continue
        for key, value in rep.user_properties:
            if key == "criterion":
                lines.append((value, "PASS" if rep.passed else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for label, status in sorted(lines):
            terminalreporter.write_line(f"{status}  {label}")
