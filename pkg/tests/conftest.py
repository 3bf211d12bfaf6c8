import collections

import pytest

_ACCEPTANCE = collections.OrderedDict()


class AcceptanceLog:
    """Collects per-criterion outcomes; a criterion passes when all its parts do."""

    def record(self, criterion, part, ok, detail=""):
        ok = bool(ok)
        _ACCEPTANCE.setdefault(criterion, []).append((part, ok, detail))
        print(f"[criterion {criterion}] {part}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_ACCEPTANCE):
        parts = _ACCEPTANCE[crit]
        bad = [p for p, ok, _ in parts if not ok]
        status = "PASS" if not bad else "FAIL"
        extra = f" (failing: {', '.join(bad)})" if bad else ""
        terminalreporter.write_line(f"criterion {crit}: {status}{extra}")
