from __future__ import annotations

from pathlib import Path

import pytest

from pepvm.frontend import parse_program

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "tests" / "fixtures"
PROGRAMS = ROOT / "programs"


def load(path: Path):
    return parse_program(path.read_text(encoding="utf-8"))


@pytest.fixture
def harddrive():
    return load(PROGRAMS / "harddrive.pep")


@pytest.fixture
def fixture_program():
    return lambda name: load(FIXTURES / name)


# Every trace recorded during the session is scanned for solo steps whose
# label belongs to the encapsulation set.  The acceptance module reports it.
TRACE_SCAN = {"traces": 0, "entries": 0, "violations": []}


def _install_trace_scan():
    from pepvm.labels import in_encapsulation
    from pepvm.trace import Trace

    if getattr(Trace.record, "_scanned", False):
        return
    original = Trace.record

    def record(self, label, actors, solo):
        entry = original(self, label, actors, solo)
        if entry.step == 0:
            TRACE_SCAN["traces"] += 1
        TRACE_SCAN["entries"] += 1
        if entry.kind != "comm" and in_encapsulation(label.name, label.sub):
            TRACE_SCAN["violations"].append(entry)
        return entry

    record._scanned = True
    Trace.record = record


_install_trace_scan()

ACCEPTANCE_LINES: list = []


def pytest_collection_modifyitems(session, config, items):
    # acceptance runs last so the encapsulation scan sees every trace
    items.sort(key=lambda item: "test_acceptance" in item.nodeid)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
