import sys
from pathlib import Path

import pytest

# make the shared oracles importable from every test module
sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE = {}


class AcceptanceLog:
    """Collects per-criterion outcomes; a criterion passes iff all its parts pass."""

    def record(self, criterion: int, passed: bool, detail: str, note: str = ""):
        entry = _ACCEPTANCE.setdefault(criterion, {"parts": [], "note": ""})
        entry["parts"].append((bool(passed), detail))
        if note:
            entry["note"] = note
        line = f"criterion {criterion}: {'pass' if passed else 'FAIL'} - {detail}"
        print(line)
        return passed


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_ACCEPTANCE):
        entry = _ACCEPTANCE[criterion]
        ok = all(p for p, _ in entry["parts"])
        verdict = "PASS" if ok else "FAIL" + (f" ({entry['note']})" if entry["note"] else "")
        details = "; ".join(d for _, d in entry["parts"])
        terminalreporter.write_line(f"[{verdict}] criterion {criterion}: {details}")
