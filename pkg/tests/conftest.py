import numpy as np
import pytest

from fastgate.chain import BA133, Chain, HarmonicPotential, TrapModel, calibrate_min_separation, thermal_occupation

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def chain5():
    return Chain.build(calibrate_min_separation(BA133, "quartic", 5, 3e-6))


@pytest.fixture(scope="session")
def chain10():
    return Chain.build(calibrate_min_separation(BA133, "quartic", 10, 3e-6))


@pytest.fixture(scope="session")
def chain20():
    return Chain.build(calibrate_min_separation(BA133, "quartic", 20, 3e-6))


@pytest.fixture(scope="session")
def two_ion():
    return Chain.build(TrapModel(BA133, HarmonicPotential(2 * np.pi * 1e6), 2))


@pytest.fixture(scope="session")
def thermal5(chain5):
    return thermal_occupation(chain5.modes, 30e-6)


@pytest.fixture(scope="session")
def thermal20(chain20):
    return thermal_occupation(chain20.modes, 30e-6)


_CHAINS = {}


def chain_of(n: int) -> Chain:
    """Cached calibrated quartic chain for property tests."""
    if n not in _CHAINS:
        _CHAINS[n] = Chain.build(calibrate_min_separation(BA133, "quartic", n, 3e-6))
    return _CHAINS[n]
