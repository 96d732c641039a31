import numpy as np
import pytest

_CRITERIA: list[str] = []


def pytest_addoption(parser):
    parser.addoption("--long", action="store_true", default=False, help="run extended-runtime criteria")
    parser.addoption(
        "--long-dir",
        default=None,
        help="directory for extended-run outputs; finished runs found there are reused",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--long"):
        return
    skip = pytest.mark.skip(reason="extended run; pass --long to enable")
    for item in items:
        if "long" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def criterion():
    """``criterion(n, title, ok, detail)`` prints a PASS/FAIL line, then asserts ``ok``."""

    def report(number, title, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} [{detail}]"
        print(line)
        _CRITERIA.append(line)
        assert ok, line

    return report


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def random_unit(rng, shape):
    v = rng.normal(size=tuple(shape) + (3,))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)
