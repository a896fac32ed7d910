from pathlib import Path

import pytest

from clocksit.dsl import parse_bat, parse_program

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

_verdicts: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    n, title = mark.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    _verdicts[n] = (title, rep.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_verdicts):
        title, ok, detail = _verdicts[n]
        line = f"AC{n:<2} {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


def _load(name):
    return parse_bat((CORPUS / name).read_text(), name)


@pytest.fixture(scope="session")
def coffee():
    return _load("coffee.bat")


@pytest.fixture(scope="session")
def lamps():
    return _load("lamps.bat")


@pytest.fixture(scope="session")
def oven():
    return _load("oven.bat")


@pytest.fixture(scope="session")
def example4(coffee):
    return parse_program((CORPUS / "example4.gpr").read_text(), coffee, "example4.gpr")


@pytest.fixture(scope="session")
def strongfill(coffee):
    return parse_program((CORPUS / "strongfill.gpr").read_text(), coffee, "strongfill.gpr")
