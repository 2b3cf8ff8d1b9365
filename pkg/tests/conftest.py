import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rwre.environment import DirichletLaw  # noqa: E402
from rwre.graph import CylinderSpec, build_cylinder  # noqa: E402
from rwre.lattice import JumpLaw  # noqa: E402

# three jumps that generate Z^2; weights (2,2,1) give zero drift
TRIPOD = [(0, 1), (1, -1), (-2, 0)]


def tripod(*weights) -> JumpLaw:
    return JumpLaw(TRIPOD, [Fraction(w) for w in weights])


@pytest.fixture(scope="session")
def zero_drift_law():
    return tripod(2, 2, 1)


@pytest.fixture(scope="session")
def drifted_law():
    return tripod(1, 1, 1)


@pytest.fixture(scope="session")
def zero_drift_dlaw(zero_drift_law):
    return DirichletLaw(zero_drift_law)


@pytest.fixture(scope="session")
def cylinder_spec(zero_drift_law):
    return CylinderSpec(zero_drift_law, (2, 1), (-1, 2), N=4, L=10)


@pytest.fixture(scope="session")
def cylinder(cylinder_spec):
    return build_cylinder(cylinder_spec)


ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
