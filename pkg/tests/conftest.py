"""Shared pytest setup: oracle imports and the acceptance summary.

Tests marked ``@pytest.mark.acceptance("<id>", "<description>")`` are grouped
by id; after the run one PASS/FAIL line per id is printed.
"""
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_RESULTS: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or (rep.when != "call" and rep.passed):
        return
    cid, text = marker.args[0], marker.args[1] if len(marker.args) > 1 else ""
    entry = _RESULTS.setdefault(cid, {"text": text, "ok": True, "why": []})
    if not rep.passed:
        entry["ok"] = False
        msg = str(rep.longrepr.reprcrash.message) if hasattr(rep.longrepr, "reprcrash") else str(rep.longrepr)
        entry["why"].append(msg.splitlines()[0][:160] if msg else rep.outcome)


def _key(cid):
    head = "".join(c for c in cid if c.isdigit())
    return (int(head or 0), cid)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(_RESULTS, key=_key):
        e = _RESULTS[cid]
        line = f"[{'PASS' if e['ok'] else 'FAIL'}] {cid}: {e['text']}"
        if not e["ok"]:
            line += f"  ({'; '.join(e['why'])})"
        tr.write_line(line)
