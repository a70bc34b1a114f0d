import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fanci_privacy.domain import PublicSuffixList  # noqa: E402


@pytest.fixture(scope="session")
def small_psl():
    """A tiny explicit suffix list so expected values do not depend on the bundled list."""
    return PublicSuffixList.from_iterable(["com", "org", "net", "arpa", "in-addr.arpa", "ip6.arpa", "co.uk", "uk"])


_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_CRITERIA] = {}


@pytest.fixture
def criteria_log(pytestconfig):
    """Criterion number -> PASS/FAIL line, repeated in the terminal summary."""
    return pytestconfig.stash[_CRITERIA]


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash[_CRITERIA]
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
