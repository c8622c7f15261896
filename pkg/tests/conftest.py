import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sector_embed.corpus import LabeledCompany  # noqa: E402

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    failed = report.failed
    if report.when == "call" or failed:
        prev = _criteria.get(number)
        if prev is None or prev[1] == "PASS":
            _criteria[number] = (title, "FAIL" if failed else ("SKIP" if report.skipped else "PASS"))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status = _criteria[number]
        terminalreporter.write_line(f"[{status}] criterion {number:>2}: {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def banks():
    return [
        LabeledCompany("JPM", "JPMorgan Chase & Co", "Finance", "Major Bank"),
        LabeledCompany("C", "Citigroup", "Finance", "Major Bank"),
        LabeledCompany("INTC", "Intel Corporation", "Technology", "Semiconductors"),
    ]


@pytest.fixture
def write(tmp_path):
    def _write(name, text, mode="w"):
        p = tmp_path / name
        if mode == "wb":
            p.write_bytes(text)
        else:
            p.write_text(text, encoding="utf-8")
        return p

    return _write
