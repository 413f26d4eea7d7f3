import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in mod.CHECKS:
        if name in mod.RESULTS:
            terminalreporter.write_line(mod.format_line(name, *mod.RESULTS[name]))
