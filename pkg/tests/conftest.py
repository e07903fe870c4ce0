import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("qeq", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("qeq")


def pytest_addoption(parser):
    parser.addoption("--seed", type=int, default=0, help="seed for randomised tests")


@pytest.fixture
def seed(request):
    return request.config.getoption("--seed")


@pytest.fixture
def rng(seed):
    return np.random.default_rng(seed)


_ACCEPTANCE: list[tuple[str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


@pytest.fixture
def criterion(request):
    """Record one acceptance line; tests fill ``info['detail']``."""
    info = {"detail": ""}
    yield info
    rep = getattr(request.node, "rep_call", None)
    status = "PASS" if rep is not None and rep.passed else "FAIL"
    _ACCEPTANCE.append((request.node.name, status, info["detail"]))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"[{status}] {name}: {detail}")
