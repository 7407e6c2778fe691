import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_CRITERION = re.compile(r"test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    outcome: dict[int, bool] = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when != "call" and key == "passed":
                continue
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if m:
                n = int(m.group(1))
                outcome[n] = outcome.get(n, True) and key == "passed"
    if not outcome:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(outcome):
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if outcome[n] else 'FAIL'}")
