import os
import re
import sys

sys.path.insert(0, os.path.dirname(__file__))

CRITERIA_LABELS = {
    1: "harmonic-mean fixtures from the benchmark table",
    2: "loss-term unit suite (exact + compositional oracles)",
    3: "analytic gradients vs finite differences",
    4: "gradient-penalty fixtures",
    5: "training-loop step schedule and isolation",
    6: "synthetic-oracle end-to-end H and variant ordering",
    7: "sample-count sweep direction",
    8: "byte-identical re-runs",
    9: "documented-format dataset through train+evaluate",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion, aggregated over subtests."""
    results = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            when = getattr(rep, "when", "call")
            match = re.search(r"test_criterion_0?(\d+)", nodeid)
            if not match:
                continue
            ok = outcome == "passed"
            if when != "call" and ok:
                continue  # count setup/teardown only when they break
            crit = int(match.group(1))
            total, passed = results.get(crit, (0, 0))
            results[crit] = (total + 1, passed + (1 if ok else 0))
    if not results:
        return
    tw = terminalreporter
    tw.write_sep("-", "acceptance criteria")
    for crit in sorted(results):
        total, passed = results[crit]
        status = "PASS" if passed == total else "FAIL"
        label = CRITERIA_LABELS.get(crit, "")
        tw.write_line(
            f"criterion {crit} ({label}): {status} [{passed}/{total} checks]"
        )
