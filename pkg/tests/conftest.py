import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

SLOW = os.environ.get("RELAGG_SLOW") == "1"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running; enable with RELAGG_SLOW=1")


def pytest_collection_modifyitems(config, items):
    if SLOW:
        return
    skip = pytest.mark.skip(reason="set RELAGG_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
