import math
import sys

import numpy as np
import pytest
from hypothesis import settings

from elastodtn.dtn import ElasticParams, SphereGeometry

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture(scope="session")
def params():
    """omega = pi, mu = 1, lambda = 2: the point-source benchmark material."""
    return ElasticParams(2.0, 1.0, math.pi)


@pytest.fixture(scope="session")
def geometry():
    return SphereGeometry(0.5, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is not None and module.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(module.VERDICTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
