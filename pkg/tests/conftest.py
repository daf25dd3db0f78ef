import numpy as np
import pytest

from driftbound import lingauss

# filled by test_acceptance; printed once at the end of the session
ACCEPTANCE_LINES = {}


def random_system(rng, n=None, m=None, gain=0.4):
    """Random valid system: Hurwitz ``A`` with margin, controllable ``B``, small ``N``.

    ``A`` has symmetric part below ``-I/2`` and ``||B N||_2 < gain < 1/2``, so
    ``A + B N`` is Hurwitz by a Lyapunov argument with the identity.
    """
    n = n or int(rng.integers(1, 7))
    m = m or int(rng.integers(1, n + 1))
    G = rng.standard_normal((n, n))
    S = rng.standard_normal((n, n))
    A = 0.5 * (S - S.T) - (G @ G.T / n + 0.5 * np.eye(n))
    B = rng.standard_normal((n, m))
    N = rng.standard_normal((m, n))
    N *= gain * rng.uniform(0.05, 1.0) / (np.linalg.norm(B, 2) * np.linalg.norm(N, 2))
    return lingauss.build_system(A, B, N)


def random_spd(rng, n, floor=0.2):
    G = rng.standard_normal((n, n))
    return G @ G.T / n + floor * np.eye(n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
