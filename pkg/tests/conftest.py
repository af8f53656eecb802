import numpy as np
import pytest

from cavitrap.coupling import DiscParams
from cavitrap.mode_basis import CavityGeometry, beam_params

LAMBDA = 1.55e-6


@pytest.fixture(scope="session")
def membrane_cavity():
    """4.9-cm cavity with a 50-nm SiN membrane at the waist."""
    g = CavityGeometry(0.049, 0.025, 0.025, LAMBDA)
    b = beam_params(g)
    return g, b, DiscParams(2.0, 50e-9, 10 * b.sigma)


@pytest.fixture(scope="session")
def silicon_cavity():
    """3.5-cm cavity with a 110-nm silicon disc whose radius equals the spot size."""
    g = CavityGeometry(0.035, 0.025, 0.025, LAMBDA)
    b = beam_params(g)
    return g, b, DiscParams(3.48, 110e-9, b.sigma)


@pytest.fixture(scope="session")
def gh_rule():
    return np.polynomial.hermite.hermgauss(120)


ACCEPTANCE = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    """Log one acceptance line; the summary hook prints all of them."""
    line = f"AC{criterion} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
