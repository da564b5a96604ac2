"""Shot-based and exact evaluation of ``<Psi|H|Psi> / <Psi|Psi>`` for the hybrid state.

The hybrid state on ``2N`` qubits is ``|Psi> = N E (|psi> (x) |phi>)``: ``E``
copies the pair register onto the beta block with ``N`` CNOTs and ``N`` is the
diagonal amplitude operator ``b(k, j)``. Moving ``E`` through the Hamiltonian
turns each Pauli term into a product ``P_psi (x) P_phi`` and turns ``N`` into
``N'`` with entries ``b'(k, j) = b(k, k XOR j)``. Every term can then be
estimated from independent measurements of ``psi`` and ``phi``:

* Z-only terms and the norm need computational-basis shots only.
* A term with X/Y letters on one side measures that side in the eigenbasis of
  its factor (see :func:`build_diagonalizer`).
* A term with X/Y letters on both sides combines the eigenbases of the factors
  with those of their companion strings.

Amplitudes of ``psi`` and ``phi`` are assumed real, which holds for every
circuit in :mod:`punn.ansatz`.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from punn.neural import DegenerateEstimateError, PermutedModel, QuadraticForm
from punn.operators import (
    PauliString,
    PauliSum,
    _popcount,
    companion_operator,
    conjugate_by_entangler,
    pauli_sum_matrix,
)
from punn.statevector import GateOp, State, apply_circuit, make_rng, sample_probabilities

__all__ = [
    "DiagonalizedBasis",
    "TermEstimate",
    "EnergyEstimate",
    "build_diagonalizer",
    "estimate_z_term",
    "estimate_mixed_term",
    "estimate_xy_term",
    "estimate_energy",
    "exact_hybrid_expectation",
    "hybrid_state",
    "sample_energy_form",
    "MAX_DENSE_QUBITS",
]

MAX_DENSE_QUBITS = 16
_NORM_INDEX = 2**32 - 1
_PHASE_TOL = 1e-9


# --------------------------------------------------------------------------- diagonalizers


@dataclass(frozen=True, eq=False)
class DiagonalizedBasis:
    """Measurement circuit ``V`` for a Pauli string and the decoder of its outcomes.

    For each outcome ``x``, ``V^dag |x>`` is ``(|k> + sigma S_k |k~>) / sqrt(2)``
    up to a global phase, where ``P|k> = S_k |k~>`` (sign of ``P`` included),
    ``k`` is the member of the pair ``(k, k~)`` whose pivot bit is 0 and
    ``sigma = +/-1`` is the eigenvalue of ``P``. For strings with an even
    Y-count this is ``(S_k~ |k~> + sigma |k>) / sqrt(2)``.
    """

    source: PauliString
    circuit: tuple[GateOp, ...]
    pivot: int

    @property
    def n_two_qubit_gates(self) -> int:
        return sum(g.is_two_qubit() for g in self.circuit)

    def decode(self, x):
        """Map measured outcome(s) ``x`` to ``(k, sigma)``."""
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=np.int64))
        k, sigma = _decode(self.source.letters.tobytes(), self.pivot, complex(self.source.coefficient), x)
        if scalar:
            return int(k[0]), int(sigma[0])
        return k, sigma


def _bit(n: int, q: int) -> int:
    return 1 << (n - 1 - q)


def build_diagonalizer(p: PauliString) -> DiagonalizedBasis:
    """Circuit ``V`` with ``V P V^dag`` diagonal and ``m - 1`` CNOTs for X/Y support size ``m``.

    The pivot is the X/Y qubit with the smallest index (most significant bit).
    ``V`` applies ``S^dag`` on the other Y qubits, fans CNOTs out from the pivot
    to every other X/Y qubit, then rotates the pivot with ``H`` (X) or
    ``S^dag`` then ``H`` (Y). Strings of either Y parity are accepted, because
    companion strings of even-Y factors have an odd Y-count. The coefficient
    must be ``+1`` or ``-1``; it flips the decoded eigenvalue.
    """
    support = p.xy_support
    if not support:
        raise ValueError(f"{p.label} is Z-only; measure it in the computational basis")
    if abs(abs(p.coefficient) - 1) > _PHASE_TOL or abs(complex(p.coefficient).imag) > _PHASE_TOL:
        raise ValueError(f"coefficient must be +1 or -1, got {p.coefficient}")
    pivot = support[0]
    gates = [GateOp("SDG", (q,)) for q in support[1:] if p.letters[q] == 2]
    gates += [GateOp("CNOT", (pivot, q)) for q in support[1:]]
    if p.letters[pivot] == 2:
        gates.append(GateOp("SDG", (pivot,)))
    gates.append(GateOp("H", (pivot,)))
    return DiagonalizedBasis(p, tuple(gates), pivot)


@lru_cache(maxsize=4096)
def _decode_params(letters: bytes, pivot: int):
    arr = np.frombuffer(letters, dtype=np.uint8)
    n = arr.size
    x_mask = z_mask = y_rest = 0
    for q, c in enumerate(arr):
        if c in (1, 2):
            x_mask |= _bit(n, q)
        if c in (2, 3):
            z_mask |= _bit(n, q)
        if c == 2 and q != pivot:
            y_rest |= _bit(n, q)
    return n, x_mask, z_mask, y_rest, int(np.sum(arr == 2))


def _decode(letters: bytes, pivot: int, coeff: complex, x: np.ndarray):
    n, x_mask, z_mask, y_rest, n_y = _decode_params(letters, pivot)
    pbit = _bit(n, pivot)
    xp = (x & pbit) != 0
    k = x & ~pbit
    kt = k ^ x_mask
    # V^dag|x> = (|k> + lam |k~>)/sqrt(2) up to phase; eigenvalue is lam * S_k~ * coeff
    lam = np.where(xp, -1.0, 1.0).astype(complex)
    if letters[pivot] == 2:
        lam = lam * 1j
    lam = lam * 1j ** ((_popcount(kt & y_rest) - _popcount(k & y_rest)) % 4)
    s_kt = (1j ** n_y) * (1 - 2 * (_popcount(kt & z_mask) & 1))
    sigma = lam * s_kt * coeff
    if np.any(np.abs(sigma.imag) > _PHASE_TOL):
        raise AssertionError("decoded eigenvalue is not real")
    return k, np.rint(sigma.real).astype(np.int64)


# --------------------------------------------------------------------------- estimates


@dataclass(frozen=True)
class TermEstimate:
    """Sample mean with ``stderr = std(ddof=1) / sqrt(shots)``."""

    mean: float
    stderr: float
    shots: int


@dataclass
class _Block:
    """Per-shot value ``sum_r w[s, r] * b'(ka, ja) * b'(kb, jb)``; all arrays ``(shots, r)``.

    Indices are in the permuted frame (``j`` as measured on ``phi``).
    """

    ka: np.ndarray
    ja: np.ndarray
    kb: np.ndarray
    jb: np.ndarray
    w: np.ndarray

    def values(self, model_p) -> np.ndarray:
        ba = model_p.amplitudes(self.ka.ravel(), self.ja.ravel()).reshape(self.w.shape)
        bb = model_p.amplitudes(self.kb.ravel(), self.jb.ravel()).reshape(self.w.shape)
        return np.sum(self.w * ba * bb, axis=1)


def _stats(values: np.ndarray) -> TermEstimate:
    n = values.size
    if n == 0:
        raise ValueError("empty sample stream")
    err = float(np.std(values, ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
    return TermEstimate(float(np.mean(values)), err, n)


def _combine(parts: Sequence[TermEstimate]) -> TermEstimate:
    return TermEstimate(
        sum(p.mean for p in parts),
        float(np.sqrt(sum(p.stderr**2 for p in parts))),
        sum(p.shots for p in parts),
    )


def _z_sign(mask: int, k: np.ndarray) -> np.ndarray:
    return 1.0 - 2.0 * (_popcount(k & mask) & 1)


def _outcomes(samples, weights=None):
    """Normalize a stream to ``(outcomes, weights)``; ``weights`` are per-outcome probabilities."""
    x = np.atleast_1d(np.asarray(samples, dtype=np.int64))
    if x.size == 0:
        raise ValueError("empty sample stream")
    if weights is None:
        return x, None
    return x, np.asarray(weights, dtype=float)


def _pair(a: np.ndarray, b: np.ndarray, wb: np.ndarray | None):
    """Shot pairing: row per ``a`` sample; columns are the paired ``b`` sample(s)."""
    if wb is None:
        if a.size != b.size:
            raise ValueError(f"stream lengths differ: {a.size} vs {b.size}")
        return a[:, None], b[:, None], np.ones((a.size, 1))
    return (np.broadcast_to(a[:, None], (a.size, b.size)),
            np.broadcast_to(b[None, :], (a.size, b.size)),
            np.broadcast_to(wb[None, :], (a.size, b.size)))


def _z_block(samples_k, samples_j, p: PauliString, phi_weights=None) -> _Block:
    n = p.n_qubits // 2
    if not p.is_z_only:
        raise ValueError(f"{p.label} has X/Y letters; not a Z-only term")
    zk, zj = (s.z_mask for s in p.split(n))
    k, _ = _outcomes(samples_k)
    j, wj = _outcomes(samples_j, phi_weights)
    kk, jj, w = _pair(k, j, wj)
    w = w * _z_sign(zk, kk) * _z_sign(zj, jj)
    return _Block(kk, jj, kk, jj, w)


def estimate_z_term(samples_k, samples_j, model_p, p: PauliString, *, phi_weights=None) -> TermEstimate:
    """Estimate ``<P>`` for a Z-only (or identity) ``P`` on ``2N`` qubits.

    Per shot pair ``(k, j)`` of computational-basis outcomes the value is
    ``Z(k, j) * b'(k, j)**2``. The coefficient of ``P`` is ignored. With
    ``phi_weights`` the ``phi`` stream is an exact outcome distribution.
    """
    return _stats(_z_block(samples_k, samples_j, p, phi_weights).values(model_p))


def _mixed_block(samples_psi, samples_phi, p: PauliString, phi_weights=None) -> _Block:
    n = p.n_qubits // 2
    fpsi, fphi = (f.letters_only() for f in p.split(n))
    if bool(fpsi.xy_support) == bool(fphi.xy_support):
        raise ValueError(f"{p.label}: exactly one factor must carry X/Y letters")
    a, _ = _outcomes(samples_psi)
    c, wc = _outcomes(samples_phi, phi_weights)
    aa, cc, w = _pair(a, c, wc)
    if fpsi.xy_support:
        k, sigma = build_diagonalizer(fpsi).decode(aa.ravel())
        k, sigma = k.reshape(aa.shape), sigma.reshape(aa.shape)
        w = w * sigma * _z_sign(fphi.z_mask, cc)
        return _Block(k, cc, k ^ fpsi.x_mask, cc, w)
    j, sigma = build_diagonalizer(fphi).decode(cc.ravel())
    j, sigma = j.reshape(cc.shape), sigma.reshape(cc.shape)
    w = w * sigma * _z_sign(fpsi.z_mask, aa)
    return _Block(aa, j, aa, j ^ fphi.x_mask, w)


def estimate_mixed_term(samples_psi, samples_phi, model_p, p: PauliString, *, phi_weights=None) -> TermEstimate:
    """Estimate ``<P>`` when exactly one factor of ``P`` carries X/Y letters.

    The X/Y side is sampled in the eigenbasis of its factor and decoded to
    ``(k, sigma)``; the other side is sampled in the computational basis and
    contributes its Z-eigenvalue ``z``. Per shot the value is
    ``sigma * z * b'(k, j) * b'(k~, j)`` (or the mirror image for the ``phi`` side).
    """
    return _stats(_mixed_block(samples_psi, samples_phi, p, phi_weights).values(model_p))


XY_STREAMS = ("psi_h", "psi_j", "phi_h", "phi_j")


def _xy_factors(p: PauliString):
    n = p.n_qubits // 2
    fpsi, fphi = (f.letters_only() for f in p.split(n))
    if not (fpsi.xy_support and fphi.xy_support):
        raise ValueError(f"{p.label}: both factors must carry X/Y letters")
    return fpsi, fphi, companion_operator(fpsi), companion_operator(fphi)


def _xy_blocks(streams: Mapping[str, np.ndarray], p: PauliString, phi_weights=None) -> list[_Block]:
    missing = [s for s in XY_STREAMS if s not in streams]
    if missing:
        raise ValueError(f"missing sample streams {missing}")
    hpsi, hphi, jpsi, jphi = _xy_factors(p)
    weights = phi_weights or {}
    blocks = []
    for tag, fpsi, fphi, sign in (("h", hpsi, hphi, 1.0), ("j", jpsi, jphi, -1.0)):
        a, _ = _outcomes(streams[f"psi_{tag}"])
        c, wc = _outcomes(streams[f"phi_{tag}"], weights.get(f"phi_{tag}"))
        aa, cc, w = _pair(a, c, wc)
        k, sk = build_diagonalizer(fpsi).decode(aa.ravel())
        j, sj = build_diagonalizer(fphi).decode(cc.ravel())
        k, j = k.reshape(aa.shape), j.reshape(aa.shape)
        kt, jt = k ^ fpsi.x_mask, j ^ fphi.x_mask
        w = 0.5 * w * (sk * sj).reshape(aa.shape)
        # (sign * b_kj b_k~j~ + b_kj~ b_k~j) / 2 per shot
        blocks.append(_Block(np.hstack([k, k]), np.hstack([j, jt]), np.hstack([kt, kt]),
                             np.hstack([jt, j]), np.hstack([sign * w, w])))
    return blocks


def estimate_xy_term(streams: Mapping[str, np.ndarray], model_p, p: PauliString, *, phi_weights=None) -> TermEstimate:
    """Estimate ``<P>`` when both factors carry X/Y letters.

    ``streams`` maps ``psi_h``, ``phi_h`` (eigenbases of the factors) and
    ``psi_j``, ``phi_j`` (eigenbases of their companion strings) to outcome
    arrays. Paired H shots contribute
    ``(b'_kj b'_k~j~ + b'_kj~ b'_k~j) sigma_k sigma_j / 2`` and paired J shots
    ``(-b'_kj b'_k~j~ + b'_kj~ b'_k~j) sigma_k sigma_j / 2``. The estimate is
    the sum of both stream means; their errors add in quadrature.
    """
    return _combine([_stats(b.values(model_p)) for b in _xy_blocks(streams, p, phi_weights)])


# --------------------------------------------------------------------------- full energy


@dataclass
class TermTrace:
    index: int
    label: str
    coefficient: float
    kind: str
    mean: float
    stderr: float
    shots: int


@dataclass
class EnergyEstimate:
    """Energy ``A / B`` with first-order ratio error and a per-term trace."""

    energy: float
    stderr: float
    numerator: float
    denominator: float
    terms: list[TermTrace] = field(default_factory=list)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["index", "label", "coefficient", "kind", "mean", "stderr", "shots"])
        for t in self.terms:
            writer.writerow([t.index, t.label, repr(t.coefficient), t.kind, repr(t.mean), repr(t.stderr), t.shots])
        return buf.getvalue()


_TAGS = {"norm": 0, "z": 1, "psi": 2, "phi": 3, "psi_h": 4, "psi_j": 5, "phi_h": 6, "phi_j": 7}


class _Sampler:
    """Per-basis outcome distributions of ``psi`` and ``phi`` with seeded draws."""

    def __init__(self, psi: State, phi: State, shots: int, seed: int, exact_phi: bool, stream=()):
        if psi.n_qubits != phi.n_qubits:
            raise ValueError("psi and phi must have the same number of qubits")
        if shots < 2:
            raise ValueError("need at least 2 shots per basis")
        self.psi, self.phi = psi, phi
        self.shots, self.seed, self.exact_phi = shots, seed, exact_phi
        self.stream = tuple(stream)
        self._probs: dict[tuple[str, bytes, complex], np.ndarray] = {}

    def probs(self, side: str, factor: PauliString | None) -> np.ndarray:
        key = (side, b"" if factor is None else factor.letters.tobytes(),
               0 if factor is None else complex(factor.coefficient))
        if key not in self._probs:
            state = self.psi if side == "psi" else self.phi
            if factor is not None:
                state = apply_circuit(state, build_diagonalizer(factor).circuit)
            self._probs[key] = state.probabilities
        return self._probs[key]

    def draw(self, side, factor, term_index, tag):
        probs = self.probs(side, factor)
        if side == "phi" and self.exact_phi:
            support = np.flatnonzero(probs > 0)
            return support, probs[support] / probs.sum()
        rng = make_rng(self.seed, (*self.stream, term_index, _TAGS[tag], 0 if side == "psi" else 1))
        return sample_probabilities(probs, self.shots, rng), None


def _route(sampler: _Sampler, index: int, p: PauliString):
    """Blocks and kind label for one conjugated term (coefficient not applied)."""
    n = p.n_qubits // 2
    if p.is_z_only:
        k, _ = sampler.draw("psi", None, index, "z")
        j, wj = sampler.draw("phi", None, index, "z")
        return "z", [_z_block(k, j, p, wj)]
    fpsi, fphi = (f.letters_only() for f in p.split(n))
    if bool(fpsi.xy_support) != bool(fphi.xy_support):
        a, _ = sampler.draw("psi", fpsi if fpsi.xy_support else None, index, "psi")
        c, wc = sampler.draw("phi", fphi if fphi.xy_support else None, index, "phi")
        return "mixed", [_mixed_block(a, c, p, wc)]
    if (fpsi.y_count + fphi.y_count) % 2:
        raise ValueError(f"conjugated term {p.label} has an odd Y-count")
    _, _, jpsi, jphi = _xy_factors(p)
    streams, weights = {}, {}
    for tag, side, factor in (("psi_h", "psi", fpsi), ("psi_j", "psi", jpsi),
                              ("phi_h", "phi", fphi), ("phi_j", "phi", jphi)):
        streams[tag], w = sampler.draw(side, factor, index, tag)
        if w is not None:
            weights[tag] = w
    return "xy", _xy_blocks(streams, p, weights or None)


def _plan(psi, phi, h_full: PauliSum, shots, seed, exact_phi, stream=()):
    n = psi.n_qubits
    if h_full.n_qubits != 2 * n:
        raise ValueError(f"Hamiltonian acts on {h_full.n_qubits} qubits, expected {2 * n}")
    sampler = _Sampler(psi, phi, shots, seed, exact_phi, stream)
    k, _ = sampler.draw("psi", None, _NORM_INDEX, "norm")
    j, wj = sampler.draw("phi", None, _NORM_INDEX, "norm")
    norm_block = _z_block(k, j, PauliString.identity(2 * n), wj)
    identity, terms = 0.0, []
    for index, term in enumerate(h_full):
        coeff = complex(term.coefficient)
        if term.is_identity:
            identity += coeff.real
            continue
        conj = conjugate_by_entangler(term, n)
        kind, blocks = _route(sampler, index, conj.letters_only())
        terms.append((index, term.label, complex(conj.coefficient).real, kind, blocks))
    return norm_block, identity, terms


def estimate_energy(
    psi: State,
    phi: State,
    model,
    h_full: PauliSum,
    shots: int = 1024,
    seed: int = 0,
    exact_phi: bool = False,
) -> EnergyEstimate:
    """Shot estimate of the hybrid-state energy for a physical-space Hamiltonian.

    Every term is conjugated through the entangler and routed to the Z, mixed
    or XY estimator with its own seeded sub-stream. The norm is estimated once
    from computational-basis shots and also carries the identity term, so a
    constant Hamiltonian is reproduced exactly. With ``exact_phi`` the ``phi``
    side uses exact outcome distributions instead of draws.
    """
    model_p = PermutedModel(model)
    norm_block, identity, terms = _plan(psi, phi, h_full, shots, seed, exact_phi)
    norm = _stats(norm_block.values(model_p))
    if not norm.mean > 0:
        raise DegenerateEstimateError(f"degenerate estimate: norm {norm.mean:.3e} <= 0")
    traces = [TermTrace(-1, "norm", 1.0, "norm", norm.mean, norm.stderr, norm.shots)]
    rest, rest_var = 0.0, 0.0
    for index, label, coeff, kind, blocks in terms:
        est = _combine([_stats(b.values(model_p)) for b in blocks])
        traces.append(TermTrace(index, label, coeff, kind, est.mean, est.stderr, est.shots))
        rest += coeff * est.mean
        rest_var += (coeff * est.stderr) ** 2
    b = norm.mean
    energy = identity + rest / b
    var = rest_var / b**2 + rest**2 * norm.stderr**2 / b**4
    return EnergyEstimate(energy, float(np.sqrt(var)), identity * b + rest, b, traces)


def sample_energy_form(
    psi: State,
    phi: State,
    h_full: PauliSum,
    shots: int = 1024,
    seed: int = 0,
    exact_phi: bool = False,
    stream: Sequence[int] = (),
) -> QuadraticForm:
    """Freeze one round of samples into a :class:`QuadraticForm` over physical configs.

    ``form.energy(model)`` reproduces ``estimate_energy(...).energy`` for the
    same samples, for any model; its gradient drives shot-mode training.
    """
    norm_block, identity, terms = _plan(psi, phi, h_full, shots, seed, exact_phi, stream)
    rows = [[], [], [], [], []]

    def add(block: _Block, scale: float):
        scale = scale / block.w.shape[0]
        ka, kb = block.ka.ravel(), block.kb.ravel()
        for col, arr in zip(rows, (ka, ka ^ block.ja.ravel(), kb, kb ^ block.jb.ravel(),
                                   scale * np.broadcast_to(block.w, block.ka.shape).ravel())):
            col.append(arr)

    add(norm_block, identity)
    for _, _, coeff, _, blocks in terms:
        for blk in blocks:
            add(blk, coeff)
    weighted = tuple(np.concatenate(c) for c in rows)
    nk, nj = norm_block.ka.ravel(), norm_block.ja.ravel()
    nw = np.broadcast_to(norm_block.w, norm_block.ka.shape).ravel() / norm_block.w.shape[0]
    return QuadraticForm.from_terms(weighted, (nk, nk ^ nj, nw))


# --------------------------------------------------------------------------- dense oracle


def hybrid_state(psi: State, phi: State, model) -> np.ndarray:
    """Dense ``N E (psi (x) phi)`` over all ``4**N`` basis states (alpha block first)."""
    n = psi.n_qubits
    if 2 * n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense hybrid state limited to {MAX_DENSE_QUBITS} qubits, got {2 * n}")
    dim = 1 << n
    prod = np.kron(psi.amplitudes, phi.amplitudes)
    k, j = np.divmod(np.arange(dim * dim), dim)
    out = np.zeros(dim * dim, dtype=complex)
    out[k * dim + (k ^ j)] = prod
    return out * model.amplitudes(k, j)


def exact_hybrid_expectation(psi: State, phi: State, model, h_full: PauliSum) -> tuple[float, float]:
    """``(<Psi|H|Psi>, <Psi|Psi>)`` by direct contraction of the dense hybrid state."""
    vec = hybrid_state(psi, phi, model)
    if h_full.n_qubits != 2 * psi.n_qubits:
        raise ValueError(f"Hamiltonian acts on {h_full.n_qubits} qubits, expected {2 * psi.n_qubits}")
    num = np.vdot(vec, pauli_sum_matrix(h_full) @ vec)
    return float(num.real), float(np.vdot(vec, vec).real)
