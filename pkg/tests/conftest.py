import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from multiclock import executive  # noqa: E402


@pytest.fixture(scope="session")
def nominal_scenario():
    return executive.nominal_scenario()


@pytest.fixture(scope="session")
def nominal_run(nominal_scenario):
    return executive.run(nominal_scenario)


@pytest.fixture(scope="session")
def delayed_run(nominal_scenario):
    return executive.run(executive.delayed_scenario(nominal_scenario))
