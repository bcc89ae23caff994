import pytest

from fairmon.bse import parse_spec
from fairmon.pomc import hypercube_model, lending_model

CUBE_HEADER = "alphabet: a b\ndelta: 0.05\ntaumix: 7.45\n"
LENDING_HEADER = "alphabet: S A B Y N\ndelta: 0.05\ntaumix: 170589.78\n"


def cube_spec(body: str, header: str = CUBE_HEADER):
    return parse_spec(header + body + "\n")


def lending_spec(body: str):
    return parse_spec(LENDING_HEADER + body + "\n")


@pytest.fixture(scope="session")
def cube():
    return hypercube_model(3)


@pytest.fixture(scope="session")
def lending():
    return lending_model()
