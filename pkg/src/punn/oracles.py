"""Brute-force reference energies: FCI, DOCI and seniority-zero projection.

Two FCI paths are provided and kept independent of each other: one works
from a qubit :class:`~punn.operators.PauliSum` restricted to a particle-number
sector, the other applies Slater-Condon rules to determinants built straight
from the integrals.
"""
from __future__ import annotations

from itertools import combinations
from math import comb

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import eigsh

from punn.integrals import IntegralSet
from punn.operators import PauliSum, SzHamiltonian, pauli_action, pauli_sum_matrix

__all__ = [
    "sector_basis",
    "pair_basis",
    "lowest_eigenvalue",
    "fci_ground_energy",
    "slater_condon_fci_energy",
    "doci_matrix",
    "doci_ground_energy",
    "project_to_seniority_zero",
    "DENSE_LIMIT",
    "MAX_PROJECTION_QUBITS",
]

DENSE_LIMIT = 2000
MAX_PROJECTION_QUBITS = 20
EIGSH_TOL = 1e-10


def _weight_states(n: int, weight: int) -> np.ndarray:
    """Sorted ``n``-bit integers with exactly ``weight`` bits set."""
    if not 0 <= weight <= n:
        return np.zeros(0, dtype=np.int64)
    vals = [sum(1 << (n - 1 - q) for q in occ) for occ in combinations(range(n), weight)]
    return np.sort(np.array(vals, dtype=np.int64))


def sector_basis(n_orb: int, n_alpha: int, n_beta: int) -> np.ndarray:
    """Sorted ``2N``-qubit indices with ``n_alpha`` bits in the alpha block and ``n_beta`` in the beta block."""
    a = _weight_states(n_orb, n_alpha)
    b = _weight_states(n_orb, n_beta)
    out = (a[:, None] << n_orb) | b[None, :]
    return np.sort(out.ravel())


def pair_basis(n_orb: int, n_pairs: int) -> np.ndarray:
    return _weight_states(n_orb, n_pairs)


def lowest_eigenvalue(mat) -> float:
    """Smallest eigenvalue; dense ``eigh`` up to :data:`DENSE_LIMIT`, Lanczos (ARPACK) above."""
    dim = mat.shape[0]
    if dim == 0:
        raise ValueError("empty sector")
    if dim <= DENSE_LIMIT:
        dense = mat.toarray() if sparse.issparse(mat) else np.asarray(mat)
        return float(np.linalg.eigvalsh(dense)[0])
    vals = eigsh(mat, k=1, which="SA", tol=EIGSH_TOL, v0=np.ones(dim) / np.sqrt(dim))[0]
    return float(vals[0])


def fci_ground_energy(h: PauliSum, n_alpha: int, n_beta: int) -> float:
    """Lowest eigenvalue of ``h`` (on ``2N`` qubits, alpha block first) within a spin sector."""
    if h.n_qubits % 2:
        raise ValueError("expected an even number of qubits")
    basis = sector_basis(h.n_qubits // 2, n_alpha, n_beta)
    if basis.size == 0:
        raise ValueError(f"empty sector for n_alpha={n_alpha}, n_beta={n_beta}")
    return lowest_eigenvalue(pauli_sum_matrix(h, basis=basis))


# --------------------------------------------------------------------------- Slater-Condon


def _spin_integrals(ints: IntegralSet):
    """Spin-orbital ``h`` and antisymmetrized ``<pq||rs>``; alpha orbitals first."""
    n = ints.n_orb
    spin = np.repeat([0, 1], n)
    space = np.tile(np.arange(n), 2)
    same = spin[:, None] == spin[None, :]
    h = np.where(same, ints.one_body[np.ix_(space, space)], 0.0)
    g = ints.two_body[np.ix_(space, space, space, space)]  # (pr|qs) indexed [p, r, q, s]
    coul = g.transpose(0, 2, 1, 3) * (same[:, None, :, None] & same[None, :, None, :])
    return h, coul - coul.transpose(0, 1, 3, 2)


def _annihilate(det: int, orb: int):
    bit = 1 << orb
    if not det & bit:
        return None, 0
    return det ^ bit, -1 if bin(det & (bit - 1)).count("1") % 2 else 1


def _create(det: int, orb: int):
    bit = 1 << orb
    if det & bit:
        return None, 0
    return det | bit, -1 if bin(det & (bit - 1)).count("1") % 2 else 1


def _apply_string(det: int, ops) -> tuple[int | None, int]:
    """Apply ``ops`` right-to-left; each op is ``(orb, is_creation)``."""
    sign = 1
    for orb, creation in reversed(ops):
        det, s = (_create if creation else _annihilate)(det, orb)
        if det is None:
            return None, 0
        sign *= s
    return det, sign


def _occupied(det: int) -> list[int]:
    return [i for i in range(det.bit_length()) if det >> i & 1]


def slater_condon_fci_energy(ints: IntegralSet) -> float:
    """FCI energy from a dense determinant-space matrix built with Slater-Condon rules.

    Determinants are bitmasks over spin orbitals (bit ``p`` alpha ``p``, bit
    ``N + p`` beta ``p``). Intended for small systems (dimension up to a few thousand).
    """
    n = ints.n_orb
    h, asym = _spin_integrals(ints)
    alphas = [sum(1 << p for p in occ) for occ in combinations(range(n), ints.n_elec_alpha)]
    betas = [sum(1 << (n + p) for p in occ) for occ in combinations(range(n), ints.n_elec_beta)]
    dets = [a | b for a in alphas for b in betas]
    index = {d: i for i, d in enumerate(dets)}
    dim = len(dets)
    mat = np.zeros((dim, dim))
    for col, det in enumerate(dets):
        occ = _occupied(det)
        virt = [p for p in range(2 * n) if not det >> p & 1]
        mat[col, col] = sum(h[i, i] for i in occ) + 0.5 * sum(asym[i, j, i, j] for i in occ for j in occ)
        for i in occ:
            for a in virt:
                new, sign = _apply_string(det, [(a, True), (i, False)])
                row = index.get(new)
                if row is None:
                    continue
                val = h[a, i] + sum(asym[a, k, i, k] for k in occ if k != i)
                mat[row, col] += sign * val
        for i, j in combinations(occ, 2):
            for a, b in combinations(virt, 2):
                new, sign = _apply_string(det, [(a, True), (b, True), (j, False), (i, False)])
                row = index.get(new)
                if row is not None:
                    mat[row, col] += sign * asym[a, b, i, j]
    return lowest_eigenvalue(mat) + ints.e_nuc


# --------------------------------------------------------------------------- seniority zero


def doci_matrix(hsz: SzHamiltonian, n_pairs: int) -> np.ndarray:
    """Dense hard-core-boson matrix over the weight-``n_pairs`` pair basis (``e_nuc`` included)."""
    n = hsz.n_orb
    basis = pair_basis(n, n_pairs)
    bits = ((basis[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(float)
    onsite = hsz.h + np.diag(hsz.v)
    diag = hsz.e_nuc + bits @ onsite + np.einsum("ip,pq,iq->i", bits, hsz.w, bits)
    mat = np.diag(diag)
    position = {int(s): i for i, s in enumerate(basis)}
    for col, state in enumerate(basis):
        for p in range(n):
            for q in range(n):
                bp, bq = 1 << (n - 1 - p), 1 << (n - 1 - q)
                if p != q and state & bq and not state & bp:
                    mat[position[int(state ^ bq ^ bp)], col] += hsz.v[p, q]
    return mat


def doci_ground_energy(hsz: SzHamiltonian, n_pairs: int) -> float:
    if not 0 < n_pairs <= hsz.n_orb:
        raise ValueError(f"need 0 < n_pairs <= {hsz.n_orb}, got {n_pairs}")
    return lowest_eigenvalue(doci_matrix(hsz, n_pairs))


def project_to_seniority_zero(h_full: PauliSum, n_pairs: int | None = None) -> np.ndarray:
    """Dense ``<k,k|H|k',k'>`` over paired configurations of weight ``n_pairs`` (all weights if None)."""
    if h_full.n_qubits % 2:
        raise ValueError("expected an even number of qubits")
    if h_full.n_qubits > MAX_PROJECTION_QUBITS:
        raise ValueError(f"projection limited to {MAX_PROJECTION_QUBITS} qubits, got {h_full.n_qubits}")
    n = h_full.n_qubits // 2
    pairs = np.arange(1 << n, dtype=np.int64) if n_pairs is None else pair_basis(n, n_pairs)
    full = (pairs << n) | pairs
    position = np.full(1 << (2 * n), -1, dtype=np.int64)
    position[full] = np.arange(full.size)
    mat = np.zeros((full.size, full.size), dtype=complex)
    for term in h_full:
        target, phase = pauli_action(term, full)
        rows = position[target]
        keep = rows >= 0
        np.add.at(mat, (rows[keep], np.flatnonzero(keep)), np.broadcast_to(phase, full.shape)[keep])
    if np.abs(mat.imag).max(initial=0.0) > 1e-12:
        raise ValueError("projected matrix is not real")
    return mat.real
