"""Shared builders for randomized measurement and training checks."""
import numpy as np

from punn.measurement import estimate_energy, exact_hybrid_expectation
from punn.neural import NeuralAmplitudeModel
from punn.operators import PauliString, PauliSum, conjugate_by_entangler
from punn.statevector import State


def term_kind(p: PauliString, n: int) -> str:
    conj = conjugate_by_entangler(p, n).letters_only()
    a, b = conj.split(n)
    if conj.is_z_only:
        return "z"
    if bool(a.xy_support) != bool(b.xy_support):
        return "mixed"
    return "xy"


def random_term(rng, n: int, kind: str) -> PauliString:
    """Random even-Y physical string on ``2n`` qubits whose conjugate routes to ``kind``."""
    while True:
        label = "".join(rng.choice(list("IXYZ"), 2 * n))
        p = PauliString.from_label(label, float(rng.uniform(0.5, 1.5)))
        if p.is_identity or p.y_count % 2:
            continue
        if term_kind(p, n) == kind:
            return p


def random_instance(rng, n: int, n_alpha: int, n_beta: int):
    psi = rng.normal(size=1 << n)
    phi = rng.normal(size=1 << n)
    model = NeuralAmplitudeModel(n, n_alpha, n_beta, k=2, seed=int(rng.integers(2**31)))
    model.set_params(rng.normal(size=model.n_params) * 0.5)
    return State(n, psi / np.linalg.norm(psi)), State(n, phi / np.linalg.norm(phi)), model


def term_zscore(rng, n, n_alpha, n_beta, kind, shots, exact_phi=False):
    """``(estimate - exact) / stderr`` for one random instance and one term of ``kind``."""
    psi, phi, model = random_instance(rng, n, n_alpha, n_beta)
    while True:
        # terms that change a spin count vanish identically on masked states
        h = PauliSum([random_term(rng, n, kind)], 2 * n)
        num, den = exact_hybrid_expectation(psi, phi, model, h)
        if abs(num / den) > 1e-3:
            break
    est = estimate_energy(psi, phi, model, h, shots=shots, seed=int(rng.integers(2**31)), exact_phi=exact_phi)
    assert [t.kind for t in est.terms[1:]] == [kind]
    return (est.energy - num / den) / est.stderr
