import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from punn.ansatz import (
    PuccdAnsatz,
    hadamard_state,
    hf_bitstring,
    pair_excitations,
    perturbation_state,
    puccd_circuit,
    puccd_param_count,
    puccd_state,
)
from punn.data import FIXTURES, load_fixture
from punn.operators import PauliString, PauliSum, build_sz_hamiltonian, sz_to_pauli
from punn.oracles import doci_ground_energy
from punn.solvers import vqe_puccd
from punn.statevector import exact_expectation


@pytest.mark.parametrize(("n", "pairs", "count"), [(5, 2, 6), (6, 3, 9), (7, 3, 12), (8, 4, 16), (4, 2, 4)])
def test_param_count(n, pairs, count):
    assert puccd_param_count(n, pairs) == count
    assert len(pair_excitations(n, pairs)) == count


@pytest.mark.parametrize(("n", "pairs"), [(4, 0), (4, 4), (3, 5)])
def test_param_count_rejects_trivial_occupations(n, pairs):
    with pytest.raises(ValueError):
        puccd_param_count(n, pairs)


@pytest.mark.parametrize(("n", "pairs"), [(2, 1), (4, 2), (5, 2), (6, 3)])
def test_zero_angles_give_hf(n, pairs):
    amps = puccd_state(PuccdAnsatz(n, pairs)).amplitudes
    expected = np.zeros(1 << n)
    expected[hf_bitstring(n, pairs)] = 1.0
    np.testing.assert_allclose(amps, expected, atol=1e-15)


def test_quarter_turn_moves_the_pair():
    amps = puccd_state(PuccdAnsatz(2, 1, [np.pi / 2])).amplitudes
    np.testing.assert_allclose(np.abs(amps), [0, 1, 0, 0], atol=1e-15)


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_weight_conserved(theta):
    state = puccd_state(PuccdAnsatz(4, 2, theta))
    weights = np.array([bin(i).count("1") for i in range(16)])
    assert np.abs(state.amplitudes[weights != 2]).max(initial=0.0) < 1e-12
    assert state.norm == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", range(2, 11))
def test_network_depth_linear_and_one_rotation_per_pair(n):
    pairs = n // 2
    gates, _, layers = puccd_circuit(PuccdAnsatz(n, pairs, np.arange(puccd_param_count(n, pairs)) + 1.0))
    assert layers <= n
    assert sorted(g.angle for g in gates) == list(np.arange(puccd_param_count(n, pairs)) + 1.0)
    assert all(g.kind == "GIVENS_SWAP" for g in gates)


@pytest.mark.parametrize("name", FIXTURES)
def test_vqe_energy_above_doci(name):
    ints = load_fixture(name)
    hsz = build_sz_hamiltonian(ints)
    doci = doci_ground_energy(hsz, ints.n_pairs)
    rng = np.random.default_rng(0)
    ansatz = PuccdAnsatz(ints.n_orb, ints.n_pairs, rng.normal(size=puccd_param_count(ints.n_orb, ints.n_pairs)))
    assert exact_expectation(puccd_state(ansatz), sz_to_pauli(hsz)) >= doci - 1e-9
    if ints.n_orb <= 6:
        assert vqe_puccd(hsz, PuccdAnsatz(ints.n_orb, ints.n_pairs)).energy >= doci - 1e-9


def test_perturbation_state():
    np.testing.assert_allclose(perturbation_state(1).amplitudes, [np.cos(0.1), np.sin(0.1)])
    assert perturbation_state(3).amplitudes[0].real == pytest.approx(0.98508, abs=1e-5)
    for n in (1, 4, 16):
        amps = perturbation_state(n).amplitudes
        assert np.sum(np.abs(amps[1:]) ** 2) == pytest.approx(1 - np.cos(0.1) ** (2 * n), abs=1e-12)
        assert np.sum(np.abs(amps[1:]) ** 2) < 0.16


def test_hadamard_state():
    np.testing.assert_allclose(hadamard_state(1).amplitudes, [2**-0.5, 2**-0.5])
    np.testing.assert_allclose(hadamard_state(4).amplitudes, np.full(16, 0.25))
    for q in range(3):
        z = np.zeros(3, dtype=np.uint8)
        z[q] = 3
        assert exact_expectation(hadamard_state(3), PauliSum([PauliString(z)])) == pytest.approx(0.0, abs=1e-15)
