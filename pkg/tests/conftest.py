from dataclasses import replace

import numpy as np
import pytest

from windlink.io import load_defaults
from windlink.model import DayProfile, Scenario


@pytest.fixture(scope="session")
def defaults():
    return load_defaults()


@pytest.fixture(scope="session")
def scenario(defaults):
    return defaults[0]


@pytest.fixture(scope="session")
def catalog(defaults):
    return defaults[1]


@pytest.fixture(scope="session")
def day(defaults):
    return defaults[2]


def one_farm(capacity=720.0, to_shore=300.0, to_hsc=100.0, hsc_to_shore=200.0, **kw) -> Scenario:
    return Scenario((capacity,), (to_shore,), (to_hsc,), hsc_to_shore, **kw)


def flat_day(cf, lmp) -> DayProfile:
    return DayProfile(np.atleast_2d(np.asarray(cf, dtype=float)), np.asarray(lmp, dtype=float))


def with_line(c, **kw):
    return replace(c, line=replace(c.line, **kw))


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
