import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from carnotkit import catalog  # noqa: E402


@pytest.fixture(scope="session")
def heis():
    return catalog.heisenberg()


@pytest.fixture(scope="session")
def engel():
    return catalog.engel()


@pytest.fixture(scope="session")
def flat3():
    return catalog.flat(3)


@pytest.fixture(scope="session")
def heis_point():
    return catalog.heisenberg(normal_vars=[0, 1, 2])
