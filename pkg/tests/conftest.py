import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fraclab.fractional import make_params
from fraclab.grid import FarField, Interval, ScalarField, build_grid
from fraclab.potential import make_prototype_well
from fraclab.solver import ProblemSpec, minimize

settings.register_profile("fraclab", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("fraclab")

# lines collected by the acceptance suite, printed at the end of the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit, ok, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {crit:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def grid1d():
    return build_grid(1, 2.0**-9, Interval(-1, 1), 8, FarField.sides(-1, 1))


@pytest.fixture(scope="session")
def solved1d(grid1d):
    """Quartic well, g = sign, s = 1/4, eps = 0.05."""
    g = ScalarField.from_function(grid1d, np.sign)
    spec = ProblemSpec(grid1d, make_params(1, 0.25, 0.05), make_prototype_well(), g)
    v, rep = minimize(spec)
    return spec, v, rep
