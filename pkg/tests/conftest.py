from pathlib import Path

import pytest

from budgeted_efx.instances import parse_instance

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def t1():
    """The three-good, two-agent fixture with the 11/10 valuations."""
    return parse_instance(FIXTURES / "t1.json")


@pytest.fixture(scope="session")
def t1_path():
    return FIXTURES / "t1.json"
