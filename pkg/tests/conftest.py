import numpy as np
import pytest

from wmsync import markov
from wmsync.decoder import LatticeConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def power_iteration(a, iters=100_000, tol=1e-15):
    """Independent stationary-distribution oracle."""
    a = np.asarray(a, dtype=float)
    rho = np.full(a.shape[0], 1.0 / a.shape[0])
    for _ in range(iters):
        nxt = rho @ a
        if np.abs(nxt - rho).max() < tol:
            return nxt / nxt.sum()
        rho = nxt
    return rho / rho.sum()


def random_stochastic(rng, n):
    a = rng.random((n, n)) + 0.05
    return a / a.sum(axis=1, keepdims=True)


def random_instance(rng, gamma_range=(4, 9), psi_max=2, bands=(1, 2)):
    """Random small decoder instance: (cfg, received, watermark)."""
    band = markov.BANDS[int(rng.choice(bands))]
    a4 = markov.generate_matrix(band, rng)
    params = markov.derive_iid_params(a4)
    a3 = markov.reduce_to_three_state(a4)
    gamma = int(rng.integers(*gamma_range))
    psi = int(rng.integers(-psi_max, psi_max + 1))
    received = rng.integers(0, 2, gamma + psi).astype(np.uint8)
    watermark = rng.integers(0, 2, gamma).astype(np.uint8)
    return LatticeConfig.build(gamma, gamma + psi, params, a3), received, watermark


# one (criterion, passed, detail) entry per acceptance check, printed at the end
ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit, ok, detail in sorted(ACCEPTANCE, key=lambda e: e[0]):
        terminalreporter.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}  {detail}")
