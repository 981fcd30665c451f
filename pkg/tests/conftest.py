import shutil
import subprocess
from pathlib import Path

import pytest

from leakscope.workload import CategoryProfile, WorkloadProfile

FIXTURES = Path(__file__).parent / "fixtures"

# filled by test_acceptance.criterion(); printed once at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def two_event_profile():
    return WorkloadProfile(
        (
            CategoryProfile("0", {"cache-misses": (70000, 1500), "branches": (1_250_000, 25_000)}),
            CategoryProfile("1", {"cache-misses": (76000, 1500), "branches": (1_250_000, 25_000)}),
        ),
        seed=11,
    )


def perf_usable() -> bool:
    perf = shutil.which("perf")
    if perf is None:
        return False
    try:
        proc = subprocess.run(
            [perf, "stat", "-x", ",", "-e", "cache-misses", "--", "true"],
            capture_output=True,
            text=True,
            timeout=30,
        )
    except (OSError, subprocess.TimeoutExpired):
        return False
    return proc.returncode == 0 and "<not" not in proc.stderr
