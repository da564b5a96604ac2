"""Dense statevector emulation: gates, exact expectations and seeded sampling.

Qubit 0 is the most significant bit of a basis index (see :mod:`punn.operators`).

Sampling uses numpy's ``PCG64`` bit generator seeded through
``SeedSequence(seed, spawn_key=stream)``. Both are specified independently of
platform, so ``(state, shots, seed, stream)`` reproduces the same draws
everywhere. Draws are made by inverse-CDF lookup of ``Generator.random``
uniforms, avoiding any dependence on ``Generator.choice`` internals.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from punn.operators import PauliSum, int_to_bitstring, pauli_sum_matrix

__all__ = [
    "State",
    "GateOp",
    "apply_gate",
    "apply_circuit",
    "exact_expectation",
    "sample",
    "make_rng",
    "tensor_product",
    "basis_state",
    "circuit_to_json",
    "circuit_from_json",
    "format_samples",
]

NORM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class State:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 1 << self.n_qubits:
            raise ValueError(f"expected {1 << self.n_qubits} amplitudes, got {amps.size}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def dump(self, threshold: float = 1e-8) -> list[tuple[str, complex]]:
        """``(bitstring, amplitude)`` pairs with ``|amp| > threshold``."""
        idx = np.flatnonzero(np.abs(self.amplitudes) > threshold)
        return [(int_to_bitstring(i, self.n_qubits), complex(self.amplitudes[i])) for i in idx]


def basis_state(n_qubits: int, index: int | str) -> State:
    if isinstance(index, str):
        index = int(index, 2)
    amps = np.zeros(1 << n_qubits, dtype=complex)
    amps[index] = 1.0
    return State(n_qubits, amps)


def tensor_product(a: State, b: State) -> State:
    """``a`` occupies the leading qubits of the result."""
    return State(a.n_qubits + b.n_qubits, np.kron(a.amplitudes, b.amplitudes))


_ONE_QUBIT = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.diag([1.0 + 0j, -1.0]),
}
_ARITY = {"RY": 1, "H": 1, "S": 1, "SDG": 1, "X": 1, "Z": 1,
          "CNOT": 2, "SWAP": 2, "GIVENS": 2, "GIVENS_SWAP": 2}
_PARAMETRIC = {"RY", "GIVENS", "GIVENS_SWAP"}


@dataclass(frozen=True)
class GateOp:
    """A gate on one or two qubits.

    ``GIVENS(theta)`` on qubits ``(a, b)`` sends ``|10> -> cos|10> + sin|01>`` and
    ``|01> -> cos|01> - sin|10>``, leaving ``|00>`` and ``|11>`` alone.
    ``GIVENS_SWAP(theta)`` is ``SWAP`` applied after ``GIVENS(theta)``.
    For ``CNOT`` the targets are ``(control, target)``.
    """

    kind: str
    targets: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in _ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        targets = tuple(int(t) for t in self.targets)
        if len(targets) != _ARITY[kind]:
            raise ValueError(f"{kind} acts on {_ARITY[kind]} qubit(s), got {targets}")
        if len(set(targets)) != len(targets):
            raise ValueError(f"{kind} targets must be distinct, got {targets}")
        if (kind in _PARAMETRIC) != (self.angle is not None):
            raise ValueError(f"{kind} {'needs' if kind in _PARAMETRIC else 'takes no'} angle")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "targets", targets)
        if self.angle is not None:
            object.__setattr__(self, "angle", float(self.angle))

    def matrix(self) -> np.ndarray:
        if self.kind in _ONE_QUBIT:
            return _ONE_QUBIT[self.kind]
        if self.kind == "RY":
            c, s = np.cos(self.angle / 2), np.sin(self.angle / 2)
            return np.array([[c, -s], [s, c]], dtype=complex)
        if self.kind == "CNOT":
            return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
        swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
        if self.kind == "SWAP":
            return swap
        c, s = np.cos(self.angle), np.sin(self.angle)
        givens = np.array([[1, 0, 0, 0], [0, c, s, 0], [0, -s, c, 0], [0, 0, 0, 1]], dtype=complex)
        return givens if self.kind == "GIVENS" else swap @ givens

    def is_two_qubit(self) -> bool:
        return len(self.targets) == 2

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "targets": list(self.targets)}
        if self.angle is not None:
            out["angle"] = self.angle
        return out


def _apply_matrix(amps: np.ndarray, n: int, mat: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    k = len(targets)
    psi = amps.reshape((2,) * n)
    psi = np.moveaxis(psi, targets, range(k))
    shape = psi.shape
    psi = (mat @ psi.reshape(1 << k, -1)).reshape(shape)
    return np.moveaxis(psi, range(k), targets).reshape(-1)


def apply_gate(state: State, gate: GateOp) -> State:
    if any(t < 0 or t >= state.n_qubits for t in gate.targets):
        raise ValueError(f"gate targets {gate.targets} out of range for {state.n_qubits} qubits")
    return State(state.n_qubits, _apply_matrix(state.amplitudes, state.n_qubits, gate.matrix(), gate.targets))


def apply_circuit(state: State, gates: Iterable[GateOp]) -> State:
    amps = np.array(state.amplitudes)
    n = state.n_qubits
    for g in gates:
        if any(t < 0 or t >= n for t in g.targets):
            raise ValueError(f"gate targets {g.targets} out of range for {n} qubits")
        amps = _apply_matrix(amps, n, g.matrix(), g.targets)
    return State(n, amps)


def exact_expectation(state: State, h: PauliSum) -> float:
    if h.n_qubits != state.n_qubits:
        raise ValueError(f"operator acts on {h.n_qubits} qubits, state has {state.n_qubits}")
    psi = state.amplitudes
    val = np.vdot(psi, pauli_sum_matrix(h) @ psi)
    if abs(val.imag) > 1e-10:
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}; is h Hermitian?")
    return float(val.real)


def make_rng(seed: int, stream: Sequence[int] = ()) -> np.random.Generator:
    """PCG64 generator for the sub-stream ``stream`` of ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(stream))))


def sample_probabilities(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    cdf = np.cumsum(probs)
    u = rng.random(shots) * cdf[-1]
    out = np.searchsorted(cdf, u, side="right")
    return np.minimum(out, probs.size - 1)


def sample(state: State, shots: int, seed: int, stream: Sequence[int] = ()) -> np.ndarray:
    """Draw ``shots`` computational-basis outcomes as integer indices."""
    return sample_probabilities(state.probabilities, shots, make_rng(seed, stream))


def format_samples(outcomes: np.ndarray, n_qubits: int) -> list[str]:
    return [int_to_bitstring(o, n_qubits) for o in outcomes]


def circuit_to_json(gates: Iterable[GateOp], n_qubits: int, **meta) -> str:
    return json.dumps({"n_qubits": n_qubits, "gates": [g.to_dict() for g in gates], **meta}, indent=2)


def circuit_from_json(text: str) -> tuple[int, list[GateOp]]:
    data = json.loads(text)
    gates = [GateOp(g["kind"], tuple(g["targets"]), g.get("angle")) for g in data["gates"]]
    return data["n_qubits"], gates
