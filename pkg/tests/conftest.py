import pytest

from lipfree import MetricGraph
from lipfree.sampling import interval_graph


@pytest.fixture
def interval():
    return interval_graph()


@pytest.fixture
def path3():
    return MetricGraph(["0", "1", "2"], [("0", "1", 1.0), ("1", "2", 1.0)])


@pytest.fixture
def c4():
    return MetricGraph(["0", "1", "2", "3"], [("0", "1", 1.0), ("1", "2", 1.0), ("2", "3", 1.0), ("3", "0", 1.0)])


@pytest.fixture
def star4():
    # centre "c" with four unit spokes
    return MetricGraph(["c", "n", "e", "s", "w"], [("c", k, 1.0) for k in "nesw"], basepoint="v:c")


@pytest.fixture
def theta():
    # two hubs joined through a shared middle edge, with three leaves on each side
    names = ["a1", "a2", "h1", "h2", "b1", "b2"]
    edges = [("a1", "h1", 1.0), ("a2", "h1", 1.0), ("h1", "h2", 1.0), ("h2", "b1", 1.0), ("h2", "b2", 1.0)]
    return MetricGraph(names, edges)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one summary line per acceptance criterion."""

    def log(criterion: int, passed: bool, detail: str) -> None:
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
