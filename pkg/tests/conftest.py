import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from punn.ansatz import PuccdAnsatz
from punn.data import load_fixture, load_sidecar
from punn.operators import build_sz_hamiltonian, full_jw_hamiltonian
from punn.solvers import vqe_puccd

settings.register_profile("punn", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("punn")


@pytest.fixture(scope="session")
def h4():
    return load_fixture("h4_chain_1.0")


@pytest.fixture(scope="session")
def h4_sidecar():
    return load_sidecar("h4_chain_1.0")


@pytest.fixture(scope="session")
def h4_full(h4):
    return full_jw_hamiltonian(h4)


@pytest.fixture(scope="session")
def h4_sz(h4):
    return build_sz_hamiltonian(h4)


@pytest.fixture(scope="session")
def h4_vqe(h4, h4_sz):
    return vqe_puccd(h4_sz, PuccdAnsatz(h4.n_orb, h4.n_pairs))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state_amplitudes(rng, n_qubits, real=True):
    amps = rng.normal(size=1 << n_qubits)
    if not real:
        amps = amps + 1j * rng.normal(size=1 << n_qubits)
    return amps / np.linalg.norm(amps)


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
