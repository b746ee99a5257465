import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from omarray.geometry import ArraySpec, CavityPlatformSpec, assemble_platform_a

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

D_FIG2 = 525e-9
L_FIG4 = 0.063


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def platform_a(alpha, n=7, zeta=-5.0, d=D_FIG2, length=L_FIG4, zeta_m=-20.0):
    return assemble_platform_a(CavityPlatformSpec(ArraySpec(n, zeta, d, alpha), length, zeta_m))


# one line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def record_criterion(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
