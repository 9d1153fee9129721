"""Session fixtures for the expensive spectral flows and tabulated laws."""
import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from maxindep import airy_flow as af
from maxindep import ortho, schur

settings.register_profile("ci", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

K_MAX = 40
BUILD_SECONDS = {}  # fixture name -> wall time of its construction
ACCEPTANCE = {}  # criterion number -> one-line verdict, echoed in the terminal summary


@pytest.fixture(scope="session")
def airy_flow40():
    """Airy flow with 40 tracked pairs on a grid reaching far enough left for lambda_40 ~ 1."""
    t0 = time.perf_counter()
    flow = af.build_eigenflow(af.extended_s_grid(K_MAX), K_MAX)
    BUILD_SECONDS["airy_flow40"] = time.perf_counter() - t0
    return flow


@pytest.fixture(scope="session")
def zk_prime_laws(airy_flow40):
    return [af.law_zk_prime(airy_flow40, k) for k in range(1, K_MAX + 1)]


@pytest.fixture(scope="session")
def airy_flow_small():
    """Default window flow with a handful of pairs, for per-k checks."""
    return af.build_eigenflow(af.default_s_grid(), 6)


@pytest.fixture(scope="session")
def q_and_qk():
    return af.law_q_and_qk(k_max=K_MAX)


@pytest.fixture(scope="session")
def kpz_laws():
    """t -> (flow, laws) for the KPZ flows used by the acceptance criteria."""
    out = {}
    for t in (0.5, 1.0, 10.0):
        p = af.KpzParams(t)
        out[t] = af.kpz_max_laws(p, af.kpz_s_grid(p, lo=None), K_MAX)
    return out


@pytest.fixture(scope="session")
def gue_max_laws():
    return {N: ortho.gue_extreme_law(N, "max") for N in (1, 2, 5, 10)}


@pytest.fixture(scope="session")
def plancherel_states():
    return {xi: schur.opuc_from_weight(schur.Plancherel(xi)) for xi in (0.5, 1.0, 4.0)}


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
