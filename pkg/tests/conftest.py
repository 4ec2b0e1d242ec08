import numpy as np
import pytest

ACCEPTANCE = {}


def record(n, ok, detail):
    """Store one acceptance line; printed at the end of the run."""
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[n] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])

AC = np.array([[1.38, -0.2077, 6.715, -5.676],
               [-0.5814, -4.29, 0.0, 0.675],
               [1.067, 4.273, -6.654, 5.893],
               [0.048, 4.273, -1.343, -2.104]])
BC = np.array([[0.0, 0.0], [5.679, 0.0], [1.136, -3.146], [1.136, 0.0]])
CY = np.array([[1.0, 0.0, 1.0, -1.0], [0.0, 1.0, 0.0, 0.0]])
K1 = np.array([[1.4110, -3.5708, -0.6385, -4.1134],
               [6.0726, -0.0486, 4.6801, -2.5005]])


@pytest.fixture(scope="session")
def reactor():
    from qstc import plant
    return plant.from_continuous(AC, BC, CY, 0.005)
