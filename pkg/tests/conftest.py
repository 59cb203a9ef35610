import sys

import pytest

from v2xlat.scenario import default_paper_scenario


@pytest.fixture
def scen():
    return default_paper_scenario


def pytest_terminal_summary(terminalreporter):
    mod = next((m for name, m in list(sys.modules.items()) if name.endswith("test_acceptance")), None)
    lines = mod.report_lines() if mod is not None and hasattr(mod, "report_lines") else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
