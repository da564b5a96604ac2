"""Pair-circuit (pUCCD) ansatz, perturbation circuit and the Hadamard baseline.

The pair circuit works in the seniority-zero picture: one qubit per spatial
orbital, a set bit meaning a doubly occupied orbital. Every occupied-virtual
pair excitation ``i -> a`` is applied exactly once as a Givens rotation inside
an odd-even transposition network of ``GIVENS_SWAP`` gates on a line of qubits.
The network sorts the occupied tracks past the virtual ones; the resulting
track permutation is undone by relabeling qubits, so ``theta = 0`` gives the
Hartree-Fock bitstring.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from punn.statevector import GateOp, State, apply_circuit, basis_state

__all__ = [
    "PuccdAnsatz",
    "puccd_param_count",
    "pair_excitations",
    "puccd_circuit",
    "puccd_state",
    "hf_bitstring",
    "perturbation_circuit",
    "perturbation_state",
    "hadamard_circuit",
    "hadamard_state",
    "PERTURBATION_ANGLE",
]

PERTURBATION_ANGLE = 0.2


def puccd_param_count(n_orb: int, n_pairs: int) -> int:
    if not 0 < n_pairs < n_orb:
        raise ValueError(f"need 0 < n_pairs < n_orb, got n_pairs={n_pairs}, n_orb={n_orb}")
    return n_pairs * (n_orb - n_pairs)


def pair_excitations(n_orb: int, n_pairs: int) -> list[tuple[int, int]]:
    """``(occupied, virtual)`` pairs in parameter order (occupied-major)."""
    puccd_param_count(n_orb, n_pairs)
    return [(i, a) for i in range(n_pairs) for a in range(n_pairs, n_orb)]


def hf_bitstring(n_orb: int, n_pairs: int) -> int:
    """Index of the state with qubits ``0..n_pairs-1`` set."""
    return ((1 << n_pairs) - 1) << (n_orb - n_pairs)


@dataclass(frozen=True, eq=False)
class PuccdAnsatz:
    n_orb: int
    n_pairs: int
    theta: np.ndarray | None = None

    def __post_init__(self):
        n = puccd_param_count(self.n_orb, self.n_pairs)
        theta = np.zeros(n) if self.theta is None else np.array(self.theta, dtype=float).reshape(-1)
        if theta.size != n:
            raise ValueError(f"expected {n} parameters, got {theta.size}")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def n_params(self) -> int:
        return self.theta.size

    def with_theta(self, theta) -> PuccdAnsatz:
        return PuccdAnsatz(self.n_orb, self.n_pairs, theta)


def puccd_circuit(ansatz: PuccdAnsatz) -> tuple[list[GateOp], list[int], int]:
    """Gate list, final track layout and layer count of the swap network.

    ``tracks[q]`` is the orbital carried by qubit ``q`` when the network ends.
    """
    n, n_occ = ansatz.n_orb, ansatz.n_pairs
    angle = {exc: t for exc, t in zip(pair_excitations(n, n_occ), ansatz.theta)}
    tracks = list(range(n))
    gates: list[GateOp] = []
    layers = 0
    while any(tracks[q] < n_occ <= tracks[q + 1] for q in range(n - 1)):
        for q in range(layers % 2, n - 1, 2):
            a, b = tracks[q], tracks[q + 1]
            if a < n_occ <= b:
                gates.append(GateOp("GIVENS_SWAP", (q, q + 1), angle[(a, b)]))
                tracks[q], tracks[q + 1] = b, a
        layers += 1
    return gates, tracks, layers


def puccd_state(ansatz: PuccdAnsatz) -> State:
    n = ansatz.n_orb
    gates, tracks, _ = puccd_circuit(ansatz)
    start = basis_state(n, hf_bitstring(n, ansatz.n_pairs))
    out = apply_circuit(start, gates)
    # undo the network's track permutation: axis for orbital o is the qubit carrying it
    perm = [tracks.index(o) for o in range(n)]
    amps = out.amplitudes.reshape((2,) * n).transpose(perm).reshape(-1)
    return State(n, amps)


def perturbation_circuit(n_qubits: int, angle: float = PERTURBATION_ANGLE) -> list[GateOp]:
    return [GateOp("RY", (q,), angle) for q in range(n_qubits)]


def perturbation_state(n_qubits: int, angle: float = PERTURBATION_ANGLE) -> State:
    """Product of ``RY(angle)|0>`` on every qubit."""
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    one = np.array([np.cos(angle / 2), np.sin(angle / 2)])
    amps = np.ones(1)
    for _ in range(n_qubits):
        amps = np.kron(amps, one)
    return State(n_qubits, amps)


def hadamard_circuit(n_qubits: int) -> list[GateOp]:
    return [GateOp("H", (q,)) for q in range(n_qubits)]


def hadamard_state(n_qubits: int) -> State:
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    return State(n_qubits, np.full(1 << n_qubits, 2.0 ** (-n_qubits / 2)))
