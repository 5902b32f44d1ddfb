import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pseudospec.operators import hermite_discretize, parse_potential  # noqa: E402


@pytest.fixture(scope="session")
def bender192():
    # ix^3 at N = 192; scale 0.7 keeps spurious truncation modes far from the real axis
    return hermite_discretize(parse_potential("1i*x^3"), 192, 0.7)


@pytest.fixture(scope="session")
def h1_128():
    return hermite_discretize(parse_potential("1i*x^3 + 1*x^2"), 128)


@pytest.fixture(scope="session")
def h1_192():
    return hermite_discretize(parse_potential("1i*x^3 + 1*x^2"), 192)


@pytest.fixture(scope="session")
def airy_fd():
    from pseudospec.scaling import airy_operator

    return airy_operator(1200, 40.0)
