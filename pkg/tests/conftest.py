"""Collects one PASS/FAIL line per acceptance criterion and prints them at the end of the run."""

from collections import defaultdict

import pytest

_RESULTS: dict[int, list[tuple[bool, str]]] = defaultdict(list)

TITLES = {
    1: "identity suite",
    2: "oracle agreement",
    3: "resolvent identity",
    4: "four-eigenvalue deterministic equivalents",
    5: "four-eigenvalue Monte Carlo",
    6: "convergence trend",
    7: "comparison formulas",
    8: "limits and symmetries",
}


class CriterionLog:
    def record(self, criterion: int, ok: bool, detail: str) -> bool:
        _RESULTS[criterion].append((bool(ok), detail))
        return bool(ok)


@pytest.fixture(scope="session")
def criteria():
    return CriterionLog()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for c in sorted(_RESULTS):
        parts = _RESULTS[c]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        tr.write_line(f"{'PASS' if ok else 'FAIL'} criterion {c} ({TITLES.get(c, '')}): {detail}")
