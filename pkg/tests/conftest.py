import sys

import pytest
from hypothesis import settings

from ncfray.ncf import NcfExpansion

settings.register_profile("ncfray", deadline=None, max_examples=60)
settings.load_profile("ncfray")


@pytest.fixture(scope="session")
def alpha53():
    return NcfExpansion.periodic([], [5, 3])


@pytest.fixture(scope="session")
def alpha322():
    return NcfExpansion.periodic([], [3, 2, 2])


@pytest.fixture(scope="session")
def alpha_golden():
    # 1/phi = <2, 3, 3, 3, ...>
    return NcfExpansion.periodic([2], [3])



def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
