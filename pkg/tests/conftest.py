import warnings

from hypothesis import settings

# fixed example stream: statistical properties (4-sigma checks) stay reproducible
settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")


def pytest_configure(config):
    warnings.filterwarnings("ignore", message=".*exceeds the .*-qubit cap.*")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
