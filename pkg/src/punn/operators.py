"""Pauli-string algebra and fermion-to-qubit mappings.

Bit ordering: qubit 0 is the *most significant* bit of a basis-state index, so
on ``n`` qubits qubit ``q`` owns bit ``1 << (n - 1 - q)``. This matches
``np.kron`` ordering and the C-order reshape used by :mod:`punn.statevector`.

Letters are stored as small integers ``0, 1, 2, 3`` for ``I, X, Y, Z``.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy import sparse

from punn.integrals import IntegralSet

__all__ = [
    "PauliString",
    "PauliSum",
    "SzHamiltonian",
    "build_sz_hamiltonian",
    "sz_to_pauli",
    "jordan_wigner",
    "full_jw_hamiltonian",
    "conjugate_by_entangler",
    "pauli_action",
    "companion_operator",
    "pauli_sum_matrix",
    "bitstring_to_int",
    "int_to_bitstring",
]

LETTERS = "IXYZ"
_LETTER_CODE = {c: i for i, c in enumerate(LETTERS)}
_PAULI_MATRICES = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
COEFF_TOL = 1e-12


def bitstring_to_int(bits: str | Sequence[int]) -> int:
    """``"0110"`` -> 6 (qubit 0 is the leading character)."""
    if isinstance(bits, str):
        if bits and set(bits) - {"0", "1"}:
            raise ValueError(f"not a bitstring: {bits!r}")
        return int(bits, 2) if bits else 0
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def int_to_bitstring(value: int, n: int) -> str:
    return format(int(value), f"0{n}b") if n else ""


def _popcount(a):
    return np.bitwise_count(np.asarray(a, dtype=np.uint64)).astype(np.int64)


def _symplectic_mul(x1: int, z1: int, x2: int, z2: int) -> tuple[int, int, int]:
    """Product of two letter strings as ``i**e * L(x, z)``; returns ``(x, z, e)``."""
    x, z = x1 ^ x2, z1 ^ z2
    e = (x1 & z1).bit_count() + (x2 & z2).bit_count() + 2 * (z1 & x2).bit_count()
    e -= (x & z).bit_count()
    return x, z, e % 4


@dataclass(frozen=True, eq=False)
class PauliString:
    """A coefficient times a tensor product of single-qubit Pauli letters."""

    letters: np.ndarray
    coefficient: complex = 1.0

    def __post_init__(self):
        letters = np.array(self.letters, dtype=np.uint8).reshape(-1)
        if letters.size and letters.max() > 3:
            raise ValueError("letter codes must lie in 0..3")
        letters.setflags(write=False)
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "coefficient", complex(self.coefficient))

    @classmethod
    def from_label(cls, label: str, coefficient: complex = 1.0) -> PauliString:
        try:
            codes = [_LETTER_CODE[c] for c in label.upper()]
        except KeyError:
            raise ValueError(f"invalid Pauli label {label!r}") from None
        return cls(np.array(codes, dtype=np.uint8), coefficient)

    @classmethod
    def identity(cls, n_qubits: int, coefficient: complex = 1.0) -> PauliString:
        return cls(np.zeros(n_qubits, dtype=np.uint8), coefficient)

    @classmethod
    def from_masks(cls, n_qubits: int, x: int, z: int, coefficient: complex = 1.0) -> PauliString:
        letters = np.zeros(n_qubits, dtype=np.uint8)
        for q in range(n_qubits):
            bit = 1 << (n_qubits - 1 - q)
            letters[q] = (1 if x & bit else 0) + (2 if z & bit else 0)
        # additive code x + 2z -> letter code
        letters = np.array([0, 1, 3, 2], dtype=np.uint8)[letters]
        return cls(letters, coefficient)

    @property
    def n_qubits(self) -> int:
        return int(self.letters.size)

    @property
    def label(self) -> str:
        return "".join(LETTERS[c] for c in self.letters)

    @property
    def key(self) -> bytes:
        return self.letters.tobytes()

    @cached_property
    def x_mask(self) -> int:
        """Bits flipped by the string (positions holding X or Y)."""
        return bitstring_to_int([1 if c in (1, 2) else 0 for c in self.letters])

    @cached_property
    def z_mask(self) -> int:
        """Positions contributing a ``(-1)**k_q`` factor (Y or Z)."""
        return bitstring_to_int([1 if c in (2, 3) else 0 for c in self.letters])

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(q) for q in np.flatnonzero(self.letters))

    @property
    def xy_support(self) -> tuple[int, ...]:
        return tuple(int(q) for q in np.flatnonzero((self.letters == 1) | (self.letters == 2)))

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.letters))

    @property
    def y_count(self) -> int:
        return int(np.count_nonzero(self.letters == 2))

    @property
    def is_identity(self) -> bool:
        return not self.letters.any()

    @property
    def is_z_only(self) -> bool:
        return self.x_mask == 0

    def with_coefficient(self, coefficient: complex) -> PauliString:
        return PauliString(self.letters, coefficient)

    def letters_only(self) -> PauliString:
        return PauliString(self.letters, 1.0)

    def split(self, n_first: int) -> tuple[PauliString, PauliString]:
        """Split into (first ``n_first`` qubits, rest); the coefficient stays on the first factor."""
        return (
            PauliString(self.letters[:n_first], self.coefficient),
            PauliString(self.letters[n_first:], 1.0),
        )

    def tensor(self, other: PauliString) -> PauliString:
        return PauliString(
            np.concatenate([self.letters, other.letters]), self.coefficient * other.coefficient
        )

    def matrix(self) -> np.ndarray:
        out = np.array([[self.coefficient]], dtype=complex)
        for c in self.letters:
            out = np.kron(out, _PAULI_MATRICES[c])
        return out

    def __mul__(self, other):
        if isinstance(other, PauliString):
            if other.n_qubits != self.n_qubits:
                raise ValueError("qubit counts differ")
            x, z, e = _symplectic_mul(self.x_mask, self.z_mask, other.x_mask, other.z_mask)
            # letters carry Y as (x, z) = (1, 1) already, so the mask product is exact
            return PauliString.from_masks(
                self.n_qubits, x, z, self.coefficient * other.coefficient * 1j**e
            )
        return PauliString(self.letters, self.coefficient * complex(other))

    __rmul__ = __mul__

    def __neg__(self) -> PauliString:
        return PauliString(self.letters, -self.coefficient)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return self.key == other.key and abs(self.coefficient - other.coefficient) <= COEFF_TOL

    def __hash__(self):
        return hash((self.key, self.coefficient))

    def __repr__(self) -> str:
        return f"PauliString({self.label!r}, {self.coefficient:.6g})"


class PauliSum:
    """A Hermitian sum of Pauli strings with real coefficients."""

    def __init__(self, terms: Iterable[PauliString], n_qubits: int | None = None):
        terms = list(terms)
        if n_qubits is None:
            if not terms:
                raise ValueError("n_qubits is required for an empty PauliSum")
            n_qubits = terms[0].n_qubits
        for t in terms:
            if t.n_qubits != n_qubits:
                raise ValueError("all terms must act on the same number of qubits")
            if abs(t.coefficient.imag) > COEFF_TOL:
                raise ValueError(f"non-real coefficient on {t.label}: {t.coefficient}")
        self.n_qubits = n_qubits
        self.terms = tuple(PauliString(t.letters, t.coefficient.real) for t in terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[PauliString]:
        return iter(self.terms)

    def __add__(self, other: PauliSum) -> PauliSum:
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit counts differ")
        return PauliSum(self.terms + other.terms, self.n_qubits)

    def __mul__(self, scalar: float) -> PauliSum:
        return PauliSum([t * scalar for t in self.terms], self.n_qubits)

    __rmul__ = __mul__

    def simplify(self, tol: float = COEFF_TOL) -> PauliSum:
        """Merge repeated letter strings and drop negligible coefficients."""
        acc: dict[bytes, float] = defaultdict(float)
        letters: dict[bytes, np.ndarray] = {}
        for t in self.terms:
            acc[t.key] += t.coefficient.real
            letters.setdefault(t.key, t.letters)
        return PauliSum(
            [PauliString(letters[k], c) for k, c in acc.items() if abs(c) > tol], self.n_qubits
        )

    @property
    def constant(self) -> float:
        return sum(t.coefficient.real for t in self.terms if t.is_identity)

    def matrix(self) -> np.ndarray:
        return pauli_sum_matrix(self).toarray()

    def to_text(self) -> str:
        return "".join(f"{t.coefficient.real!r} {t.label}\n" for t in self.terms)

    @classmethod
    def from_text(cls, text: str) -> PauliSum:
        terms = []
        for line in text.splitlines():
            if line.strip():
                coeff, label = line.split()
                terms.append(PauliString.from_label(label, float(coeff)))
        return cls(terms)

    def __repr__(self) -> str:
        return f"PauliSum(n_qubits={self.n_qubits}, terms={len(self.terms)})"


def pauli_action(p: PauliString, k):
    """Apply ``p`` to basis state(s) ``k``: ``p|k> = s|k~>``.

    ``k`` may be a bitstring, an integer or an integer array. Returns ``(k~, s)``;
    ``s`` includes the coefficient of ``p``.
    """
    scalar = isinstance(k, (str, int, np.integer))
    kk = np.asarray(bitstring_to_int(k) if isinstance(k, str) else k, dtype=np.int64)
    flipped = kk ^ p.x_mask
    phase = p.coefficient * (1j ** p.y_count) * (1 - 2 * (_popcount(kk & p.z_mask) & 1))
    if scalar:
        return int(flipped), complex(phase)
    return flipped, phase


def companion_operator(p: PauliString) -> PauliString:
    """Companion string ``J`` with ``J|k> = +i S_k~ |k~>`` for every ``k`` in the lower half.

    The lower half is ``{k : int(k) < int(k~)}``, i.e. the bit on the most
    significant X/Y position of ``p`` is 0. At that position X becomes Y and Y
    becomes -X.
    """
    support = p.xy_support
    if not support:
        raise ValueError(f"{p.label} has no X/Y support; no companion operator exists")
    pivot = support[0]
    letters = p.letters.copy()
    coeff = p.coefficient
    if letters[pivot] == 1:
        letters[pivot] = 2
    else:
        letters[pivot] = 1
        coeff = -coeff
    return PauliString(letters, coeff)


def conjugate_by_entangler(p: PauliString, n_pairs: int) -> PauliString:
    """Return ``E^dag P E`` for ``E = prod_i CNOT(control=i, target=i + n_pairs)``."""
    if p.n_qubits != 2 * n_pairs:
        raise ValueError(f"expected a {2 * n_pairs}-qubit string, got {p.n_qubits}")
    letters = p.letters
    xs = ((letters == 1) | (letters == 2)).astype(np.uint8)
    zs = ((letters == 2) | (letters == 3)).astype(np.uint8)
    xc, zc = xs[:n_pairs], zs[:n_pairs]
    xt, zt = xs[n_pairs:], zs[n_pairs:]
    flips = int(np.sum(xc & zt & (xt ^ zc ^ 1)))
    xt = xt ^ xc
    zc = zc ^ zt
    new_x = np.concatenate([xc, xt])
    new_z = np.concatenate([zc, zt])
    new_letters = np.array([0, 1, 3, 2], dtype=np.uint8)[new_x + 2 * new_z]
    return PauliString(new_letters, p.coefficient * (-1) ** flips)


def pauli_sum_matrix(h: PauliSum, basis: np.ndarray | None = None) -> sparse.csr_matrix:
    """Sparse matrix of ``h`` over the full space or a sorted subset of basis states.

    Terms sharing a flip mask are combined first, so transitions that cancel
    (e.g. ``XX + YY`` between ``00`` and ``11``) never leave a restricted basis.
    """
    dim_full = 1 << h.n_qubits
    cols = np.arange(dim_full, dtype=np.int64) if basis is None else np.asarray(basis, np.int64)
    if basis is not None and np.any(np.diff(cols) <= 0):
        raise ValueError("basis must be sorted and unique")
    groups: dict[int, list[PauliString]] = defaultdict(list)
    for t in h.terms:
        groups[t.x_mask].append(t)
    rows_all, cols_all, data_all = [], [], []
    col_idx = np.arange(cols.size)
    for x, terms in groups.items():
        diag = np.zeros(cols.size, dtype=complex)
        for t in terms:
            diag += pauli_action(t, cols)[1]
        target = cols ^ x
        if basis is None:
            rows = target
            keep = np.abs(diag) > 0
        else:
            pos = np.searchsorted(cols, target)
            pos = np.minimum(pos, cols.size - 1)
            inside = cols[pos] == target
            if np.any(np.abs(diag[~inside]) > 1e-10):
                raise ValueError("operator couples the restricted basis to states outside it")
            rows = pos
            keep = inside & (np.abs(diag) > 0)
        rows_all.append(rows[keep])
        cols_all.append(col_idx[keep])
        data_all.append(diag[keep])
    n = cols.size
    if not rows_all:
        return sparse.csr_matrix((n, n), dtype=complex)
    mat = sparse.coo_matrix(
        (np.concatenate(data_all), (np.concatenate(rows_all), np.concatenate(cols_all))),
        shape=(n, n),
    ).tocsr()
    mat.sum_duplicates()
    return mat


# --------------------------------------------------------------------------- pair Hamiltonian


@dataclass(frozen=True, eq=False)
class SzHamiltonian:
    """Seniority-zero (hard-core boson) Hamiltonian over ``N`` spatial orbitals.

    ``H = sum_p h_p n_p + sum_pq v_pq c+_p c_q + sum_{p != q} w_pq n_p n_q + e_nuc``
    """

    h: np.ndarray
    v: np.ndarray
    w: np.ndarray
    e_nuc: float = 0.0

    def __post_init__(self):
        h = np.array(self.h, dtype=float).reshape(-1)
        n = h.size
        v = np.array(self.v, dtype=float).reshape(n, n)
        w = np.array(self.w, dtype=float).reshape(n, n)
        if not np.allclose(v, v.T, atol=1e-12) or not np.allclose(w, w.T, atol=1e-12):
            raise ValueError("v and w must be symmetric")
        if np.any(np.diag(w) != 0):
            raise ValueError("w must have a zero diagonal")
        for a in (h, v, w):
            a.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "e_nuc", float(self.e_nuc))

    @property
    def n_orb(self) -> int:
        return self.h.size


def build_sz_hamiltonian(ints: IntegralSet) -> SzHamiltonian:
    if not ints.is_closed_shell:
        raise ValueError("the pair Hamiltonian needs a closed-shell integral set")
    n = ints.n_orb
    g = ints.two_body
    idx = np.arange(n)
    h = 2.0 * np.diag(ints.one_body)
    v = np.array([[g[p, q, p, q] for q in idx] for p in idx])
    coulomb = np.array([[g[p, p, q, q] for q in idx] for p in idx])
    w = 2.0 * coulomb - v
    np.fill_diagonal(w, 0.0)
    return SzHamiltonian(h, v, w, ints.e_nuc)


def sz_to_pauli(hsz: SzHamiltonian) -> PauliSum:
    """Map the pair Hamiltonian onto ``N`` qubits with ``n_p = (1 - Z_p) / 2``.

    The ``p == q`` part of the hopping sum is a number operator and lands in the
    ``h_p`` channel.
    """
    n = hsz.n_orb
    terms: list[PauliString] = []

    def z_string(*qubits):
        letters = np.zeros(n, dtype=np.uint8)
        letters[list(qubits)] = 3
        return letters

    def pair_string(p, q, code):
        letters = np.zeros(n, dtype=np.uint8)
        letters[[p, q]] = code
        return letters

    const = hsz.e_nuc
    onsite = hsz.h + np.diag(hsz.v)
    for p in range(n):
        const += onsite[p] / 2
        terms.append(PauliString(z_string(p), -onsite[p] / 2))
    for p in range(n):
        for q in range(p + 1, n):
            # sum over p != q counts each unordered pair twice
            wpq = hsz.w[p, q] + hsz.w[q, p]
            const += wpq / 4
            terms.append(PauliString(z_string(p), -wpq / 4))
            terms.append(PauliString(z_string(q), -wpq / 4))
            terms.append(PauliString(z_string(p, q), wpq / 4))
            vpq = hsz.v[p, q]
            terms.append(PauliString(pair_string(p, q, 1), vpq / 2))
            terms.append(PauliString(pair_string(p, q, 2), vpq / 2))
    terms.append(PauliString.identity(n, const))
    return PauliSum(terms, n).simplify(tol=0.0)


# --------------------------------------------------------------------------- Jordan-Wigner


def _ladder_terms(index: int, dagger: bool, n: int) -> list[tuple[int, int, complex]]:
    """``a+_p = (X_p - iY_p)/2 Z_{<p}``, ``a_p = (X_p + iY_p)/2 Z_{<p}`` as ``(x, z, c)``."""
    bit = 1 << (n - 1 - index)
    zstring = ((1 << n) - 1) ^ ((1 << (n - index)) - 1)
    sign = -1 if dagger else 1
    return [(bit, zstring, 0.5), (bit, zstring | bit, sign * 0.5j)]


def jordan_wigner(
    products: Iterable[tuple[complex, Sequence[tuple[int, bool]]]], n_spin_orb: int
) -> PauliSum:
    """Map a sum of ladder-operator products to qubits.

    Each product is ``(coefficient, [(index, dagger), ...])`` read left to right,
    so ``(1.0, [(0, True), (1, False)])`` is ``a+_0 a_1``.
    """
    n = n_spin_orb
    acc: dict[tuple[int, int], complex] = defaultdict(complex)
    cache = {}
    for coeff, factors in products:
        current = {(0, 0): complex(coeff)}
        for index, dagger in factors:
            if not 0 <= index < n:
                raise IndexError(f"spin-orbital index {index} out of range [0, {n})")
            key = (index, bool(dagger))
            if key not in cache:
                cache[key] = _ladder_terms(index, bool(dagger), n)
            nxt: dict[tuple[int, int], complex] = defaultdict(complex)
            for (x1, z1), c1 in current.items():
                for x2, z2, c2 in cache[key]:
                    x, z, e = _symplectic_mul(x1, z1, x2, z2)
                    nxt[(x, z)] += c1 * c2 * 1j**e
            current = nxt
        for xz, c in current.items():
            acc[xz] += c
    terms = []
    for (x, z), c in acc.items():
        if abs(c) <= COEFF_TOL:
            continue
        if abs(c.imag) > 1e-10:
            raise ValueError("input is not Hermitian: complex Pauli coefficient")
        terms.append(PauliString.from_masks(n, x, z, c.real))
    if not terms:
        return PauliSum([PauliString.identity(n, 0.0)], n)
    return PauliSum(terms, n)


def full_jw_hamiltonian(ints: IntegralSet, tol: float = 0.0) -> PauliSum:
    """Second-quantized molecular Hamiltonian on ``2N`` qubits.

    Alpha orbital ``p`` sits on qubit ``p`` and beta orbital ``p`` on qubit ``N + p``.
    The two-body part is ``1/2 sum h_pqrs a+_p a+_q a_r a_s`` with
    ``h_pqrs = (ps|qr)`` taken from the stored chemists' tensor.
    """
    n = ints.n_orb
    h1, g = ints.one_body, ints.two_body
    products = [(ints.e_nuc, [])]
    spins = (0, n)
    for s in spins:
        for p in range(n):
            for q in range(n):
                if abs(h1[p, q]) > tol:
                    products.append((h1[p, q], [(p + s, True), (q + s, False)]))
    for s1 in spins:
        for s2 in spins:
            for p in range(n):
                for q in range(n):
                    if s1 == s2 and p == q:
                        continue
                    for r in range(n):
                        for s in range(n):
                            if s1 == s2 and r == s:
                                continue
                            val = g[p, s, q, r]
                            if abs(val) > tol:
                                products.append(
                                    (0.5 * val,
                                     [(p + s1, True), (q + s2, True), (r + s2, False), (s + s1, False)])
                                )
    return jordan_wigner(products, 2 * n)
