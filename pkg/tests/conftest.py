import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from torikam import kernels  # noqa: E402
from torikam.lattice import (  # noqa: E402
    DeckMaps, FlatBundleData, TorusLattice, golden_angle, sqrt2_angle,
)


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    """Run a test once per available convolution backend."""
    prev = kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(prev)


def make_deck(tau=1j, theta=None):
    if theta is None:
        theta = golden_angle()
    return DeckMaps(TorusLattice.elliptic(tau), FlatBundleData(((theta,),)))


@pytest.fixture
def golden_deck():
    return make_deck()


@pytest.fixture
def deck2():
    lat = TorusLattice(((0.3 + 0.15j, 0.1), (0.05, 0.2 + 0.1875j)))
    return DeckMaps(lat, FlatBundleData(((golden_angle(),), (sqrt2_angle(),))))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
