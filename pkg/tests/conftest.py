import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def random_stable(rng, N, P=None, Q=None, margin=0.1):
    """Random real system whose spectral abscissa is at most ``-margin``."""
    P = P or rng.integers(1, 3, endpoint=True)
    Q = Q or rng.integers(1, 3, endpoint=True)
    A = rng.standard_normal((N, N))
    shift = np.linalg.eigvals(A).real.max() + margin + rng.uniform(0, 1)
    A -= shift * np.eye(N)
    return A, rng.standard_normal((N, P)), rng.standard_normal((Q, N))


# criterion lines recorded by the acceptance module, echoed after the run
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda ln: int(ln.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
