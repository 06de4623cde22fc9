from __future__ import annotations

import pytest

from pastfuture.ingest import Corpus, PaperRecord
from pastfuture.synth import SynthConfig, generate

_OUTCOMES: dict[int, tuple[str, str, str]] = {}
_DETAILS: dict[int, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    number, title = marker.args
    prev = _OUTCOMES.get(number)
    status = "FAIL" if report.failed else "PASS"
    if prev and prev[0] == "FAIL":
        status = "FAIL"
    _OUTCOMES[number] = (status, title, item.name)


@pytest.fixture
def detail(request):
    """Attach a one-line measurement to the current acceptance criterion."""
    marker = request.node.get_closest_marker("criterion")

    def record(text: str) -> None:
        if marker is not None:
            number = marker.args[0]
            _DETAILS[number] = "; ".join(filter(None, [_DETAILS.get(number), text]))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        status, title, _ = _OUTCOMES[number]
        extra = _DETAILS.get(number, "")
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}"
                                    + (f" -- {extra}" if extra else ""))


def paper(pid, year, authors=("A",), codes=("01.01.Aa",), refs=()):
    return PaperRecord(pid, year, tuple(authors), frozenset(codes), frozenset(refs))


@pytest.fixture(scope="session")
def small_null_corpus() -> Corpus:
    return generate(SynthConfig(n_authors=120, seed=11))


@pytest.fixture(scope="session")
def small_planted_corpus() -> Corpus:
    return generate(SynthConfig(n_authors=120, model="planted", rho=0.9, seed=11))
