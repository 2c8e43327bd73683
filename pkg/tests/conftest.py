import os
import subprocess
import sys

import pytest

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def run_python():
    """Run a snippet in a fresh interpreter (for import-time backend switches)."""

    def run(code, **env):
        full_env = dict(os.environ)
        full_env.update({k: str(v) for k, v in env.items()})
        proc = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=full_env)
        assert proc.returncode == 0, proc.stderr
        return proc.stdout

    return run
