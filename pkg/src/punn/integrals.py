"""Molecular integrals and the FCIDUMP text format.

Only restricted (spin-free) integrals are handled. Two-electron integrals are
kept as a dense rank-4 tensor in chemists' notation, ``two_body[p, q, r, s] =
(pq|rs)``, with all eight permutational copies filled in.
"""
from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from itertools import product
from os import PathLike
from typing import TextIO

import numpy as np

__all__ = [
    "FCIDUMPError",
    "IntegralSet",
    "parse_fcidump",
    "read_fcidump",
    "emit_fcidump",
    "write_fcidump",
    "hf_reference_energy",
]

SYMMETRY_TOL = 1e-12


class FCIDUMPError(ValueError):
    """Raised for malformed FCIDUMP input; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class IntegralSet:
    """One- and two-electron integrals over ``n_orb`` spatial orbitals.

    Arrays are made read-only on construction.
    """

    n_orb: int
    n_elec_alpha: int
    n_elec_beta: int
    e_nuc: float
    one_body: np.ndarray
    two_body: np.ndarray
    orbsym: tuple[int, ...] = field(default=(), compare=False)

    def __post_init__(self):
        n = self.n_orb
        h1 = np.array(self.one_body, dtype=float)
        h2 = np.array(self.two_body, dtype=float)
        if h1.shape != (n, n):
            raise ValueError(f"one_body must have shape {(n, n)}, got {h1.shape}")
        if h2.shape != (n,) * 4:
            raise ValueError(f"two_body must have shape {(n,) * 4}, got {h2.shape}")
        if not np.allclose(h1, h1.T, rtol=0, atol=SYMMETRY_TOL):
            raise ValueError("one_body is not symmetric")
        for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
            if not np.allclose(h2, h2.transpose(perm), rtol=0, atol=SYMMETRY_TOL):
                raise ValueError("two_body lacks 8-fold permutational symmetry")
        if min(self.n_elec_alpha, self.n_elec_beta) < 0:
            raise ValueError("negative electron count")
        if max(self.n_elec_alpha, self.n_elec_beta) > n:
            raise ValueError("more electrons of one spin than orbitals")
        h1.setflags(write=False)
        h2.setflags(write=False)
        object.__setattr__(self, "one_body", h1)
        object.__setattr__(self, "two_body", h2)
        object.__setattr__(self, "e_nuc", float(self.e_nuc))

    @property
    def n_elec(self) -> int:
        return self.n_elec_alpha + self.n_elec_beta

    @property
    def is_closed_shell(self) -> bool:
        return self.n_elec_alpha == self.n_elec_beta

    @property
    def n_pairs(self) -> int:
        if not self.is_closed_shell:
            raise ValueError("open-shell integral set has no pair count")
        return self.n_elec_alpha


_HEADER_KEY = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([^=]*?)(?=,?\s*[A-Za-z_][A-Za-z0-9_]*\s*=|$)")


def _parse_header(header: str, first_line: int) -> dict[str, str]:
    body = header.strip()
    body = re.sub(r"^&FCI", "", body, flags=re.IGNORECASE)
    body = re.sub(r"(&END|/)\s*$", "", body.strip(), flags=re.IGNORECASE)
    body = " ".join(body.split())
    values = {}
    for key, val in _HEADER_KEY.findall(body):
        values[key.upper()] = val.strip().rstrip(",")
    for key in ("NORB", "NELEC"):
        if key not in values:
            raise FCIDUMPError(f"header is missing {key}", first_line)
    return values


def _header_int(values: dict[str, str], key: str, default: int | None, line: int) -> int:
    raw = values.get(key)
    if raw is None:
        if default is None:
            raise FCIDUMPError(f"header is missing {key}", line)
        return default
    try:
        return int(raw)
    except ValueError:
        raise FCIDUMPError(f"header field {key}={raw!r} is not an integer", line) from None


def parse_fcidump(text: str | TextIO) -> IntegralSet:
    """Parse FCIDUMP text into a symmetrized :class:`IntegralSet`.

    Body lines are ``value i j k l`` with 1-based orbital indices:
    ``(i, j, 0, 0)`` is ``h_ij``, ``(0, 0, 0, 0)`` the nuclear repulsion,
    ``(i, 0, 0, 0)`` an orbital energy (ignored), anything else ``(ij|kl)``.
    """
    if not isinstance(text, str):
        text = text.read()
    lines = text.splitlines()

    header_lines = []
    lineno = 0
    for lineno, line in enumerate(lines, start=1):
        header_lines.append(line)
        stripped = line.strip()
        if re.search(r"(&END|/)\s*$", stripped, flags=re.IGNORECASE):
            break
    else:
        raise FCIDUMPError("header is not terminated by &END or /", lineno or 1)
    if not header_lines[0].strip().upper().startswith("&FCI"):
        raise FCIDUMPError("file does not start with an &FCI namelist", 1)

    values = _parse_header("\n".join(header_lines), 1)
    norb = _header_int(values, "NORB", None, 1)
    nelec = _header_int(values, "NELEC", None, 1)
    ms2 = _header_int(values, "MS2", 0, 1)
    if norb < 1:
        raise FCIDUMPError(f"NORB must be positive, got {norb}", 1)
    if (nelec + ms2) % 2 != 0:
        raise FCIDUMPError(f"NELEC={nelec} and MS2={ms2} have mismatched parity", 1)
    n_alpha, n_beta = (nelec + ms2) // 2, (nelec - ms2) // 2
    if n_alpha < 0 or n_beta < 0 or max(n_alpha, n_beta) > norb:
        raise FCIDUMPError(f"NELEC={nelec}, MS2={ms2} do not fit in {norb} orbitals", 1)
    orbsym = ()
    if "ORBSYM" in values:
        orbsym = tuple(int(v) for v in values["ORBSYM"].replace(",", " ").split())

    h1 = np.zeros((norb, norb))
    h2 = np.zeros((norb,) * 4)
    e_nuc = 0.0
    for num, line in enumerate(lines[lineno:], start=lineno + 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 5:
            raise FCIDUMPError(f"expected 'value i j k l', got {line.strip()!r}", num)
        try:
            val = float(parts[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(p) for p in parts[1:])
        except ValueError:
            raise FCIDUMPError(f"cannot parse {line.strip()!r}", num) from None
        if any(idx < 0 or idx > norb for idx in (i, j, k, l)):
            raise FCIDUMPError(f"index out of range [0, {norb}] in {line.strip()!r}", num)
        if i == j == k == l == 0:
            e_nuc = val
        elif k == l == 0 and j == 0:
            continue  # orbital energy
        elif k == l == 0:
            if i == 0:
                raise FCIDUMPError(f"invalid one-body index pair in {line.strip()!r}", num)
            h1[i - 1, j - 1] = h1[j - 1, i - 1] = val
        else:
            if 0 in (i, j, k, l):
                raise FCIDUMPError(f"invalid two-body indices in {line.strip()!r}", num)
            p, q, r, s = i - 1, j - 1, k - 1, l - 1
            for a, b, c, d in ((p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r)):
                h2[a, b, c, d] = h2[c, d, a, b] = val
    return IntegralSet(norb, n_alpha, n_beta, e_nuc, h1, h2, orbsym)


def read_fcidump(path: str | PathLike) -> IntegralSet:
    with open(path) as fh:
        return parse_fcidump(fh)


def emit_fcidump(ints: IntegralSet) -> str:
    """Serialize in canonical order; only nonzero entries are written.

    Values use the shortest round-trip float repr, so emit/parse is lossless.
    """
    n = ints.n_orb
    out = io.StringIO()
    ms2 = ints.n_elec_alpha - ints.n_elec_beta
    out.write(f" &FCI NORB={n},NELEC={ints.n_elec},MS2={ms2},\n")
    orbsym = ints.orbsym or (1,) * n
    out.write("  ORBSYM=" + ",".join(str(o) for o in orbsym) + ",\n")
    out.write("  ISYM=1,\n &END\n")
    h2 = ints.two_body
    for p, q in product(range(n), repeat=2):
        if q > p:
            continue
        for r, s in product(range(n), repeat=2):
            if s > r or (p * (p + 1) // 2 + q) < (r * (r + 1) // 2 + s):
                continue
            val = h2[p, q, r, s]
            if val != 0.0:
                out.write(f"{float(val)!r} {p + 1} {q + 1} {r + 1} {s + 1}\n")
    h1 = ints.one_body
    for p in range(n):
        for q in range(p + 1):
            if h1[p, q] != 0.0:
                out.write(f"{float(h1[p, q])!r} {p + 1} {q + 1} 0 0\n")
    out.write(f"{ints.e_nuc!r} 0 0 0 0\n")
    return out.getvalue()


def write_fcidump(ints: IntegralSet, path: str | PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(emit_fcidump(ints))


def hf_reference_energy(ints: IntegralSet) -> float:
    """Energy of the closed-shell determinant filling the lowest ``n_pairs`` orbitals."""
    if not ints.is_closed_shell:
        raise ValueError(
            f"open-shell input (n_alpha={ints.n_elec_alpha}, n_beta={ints.n_elec_beta})"
        )
    occ = slice(0, ints.n_pairs)
    h1 = ints.one_body[occ, occ]
    h2 = ints.two_body[occ, occ, occ, occ]
    coulomb = np.einsum("iijj->", h2)
    exchange = np.einsum("ijij->", h2)
    return float(ints.e_nuc + 2.0 * np.trace(h1) + 2.0 * coulomb - exchange)
