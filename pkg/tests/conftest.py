from pathlib import Path

import pytest

from pnd.kernel import Options, check_text

CORPUS = Path(__file__).resolve().parent.parent / "corpus"
CORE = CORPUS / "protothetic-core.pnd"
RAA = CORPUS / "protothetic-raa.pnd"
MUTATIONS = CORPUS / "mutations"


@pytest.fixture(scope="session")
def core_text() -> str:
    return CORE.read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def core_dev(core_text):
    return check_text(core_text)


@pytest.fixture(scope="session")
def replay_dev(core_text):
    return check_text(core_text, Options(replay=True))


# -- one summary line per acceptance criterion ---------------------------------

_criteria: dict[int, tuple[str, bool]] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _, _, num, *words = name.split("_")
        passed = report.outcome == "passed"
        prev = _criteria.get(int(num), (None, True))[1]
        _criteria[int(num)] = (" ".join(words), passed and prev)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        title, ok = _criteria[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {title}")
