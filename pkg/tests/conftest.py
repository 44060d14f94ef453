import numpy as np
import pytest
from hypothesis import settings

from qgv.channels import QuantumChannel

_CRITERIA_KEY = pytest.StashKey[list]()


def random_unitary(d, rng):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(d, rng):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (z + z.conj().T)


def random_density(d, rng, rank=None):
    rank = rank or d
    z = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = z @ z.conj().T
    return rho / np.trace(rho).real


def random_channel(d, rng, n_kraus=3):
    """Random CPTP map from a Haar-ish isometry split into Kraus blocks."""
    z = rng.normal(size=(d * n_kraus, d)) + 1j * rng.normal(size=(d * n_kraus, d))
    q, _ = np.linalg.qr(z)
    return QuantumChannel(tuple(q[i * d:(i + 1) * d] for i in range(n_kraus)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def report(request):
    """Record a one-line pass/fail verdict for an acceptance criterion."""
    store = request.config.stash.setdefault(_CRITERIA_KEY, [])

    def _report(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        store.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_CRITERIA_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


# statistical properties (4-sigma checks) must not flake across sessions
settings.register_profile("deterministic", derandomize=True, deadline=None)
settings.load_profile("deterministic")
