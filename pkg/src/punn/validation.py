"""Input checks shared by the estimator API and the command line."""
from __future__ import annotations

from numbers import Integral
from os import PathLike
from pathlib import Path

import numpy as np

from punn.integrals import IntegralSet, read_fcidump

__all__ = [
    "check_integrals",
    "check_closed_shell",
    "check_theta",
    "check_positive_int",
    "check_choice",
    "check_configurations",
]


def check_integrals(X) -> IntegralSet:
    """Accept an :class:`IntegralSet` or a path to an FCIDUMP file.

    Raises:
        TypeError: for any other input type.
        FileNotFoundError: if a path does not exist.
    """
    if isinstance(X, IntegralSet):
        return X
    if isinstance(X, (str, PathLike)):
        path = Path(X)
        if not path.is_file():
            raise FileNotFoundError(f"no such FCIDUMP file: {path}")
        return read_fcidump(path)
    raise TypeError(f"expected an IntegralSet or an FCIDUMP path, got {type(X).__name__}")


def check_closed_shell(ints: IntegralSet) -> IntegralSet:
    if not ints.is_closed_shell:
        raise ValueError(
            f"pair circuits need a closed-shell system, got n_alpha={ints.n_elec_alpha}, "
            f"n_beta={ints.n_elec_beta}"
        )
    return ints


def check_theta(theta, n_params: int) -> np.ndarray:
    """Finite 1-D float array of length ``n_params``."""
    arr = np.asarray(theta, dtype=float)
    if arr.ndim != 1 or arr.size != n_params:
        raise ValueError(f"theta must be a vector of length {n_params}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("theta contains non-finite values")
    return arr


def check_positive_int(value, name: str, *, allow_zero: bool = False) -> int:
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    low = 0 if allow_zero else 1
    if value < low:
        raise ValueError(f"{name} must be >= {low}, got {value}")
    return int(value)


def check_choice(value, name: str, choices) -> str:
    if value not in choices:
        raise ValueError(f"{name} must be one of {sorted(choices)}, got {value!r}")
    return value


def check_configurations(X, n_orb: int) -> np.ndarray:
    """Integer array of shape ``(n, 2)`` holding ``(k_alpha, k_beta)`` bit patterns.

    A 1-D array of full ``2N``-bit indices (alpha block in the high bits) is
    also accepted and split.
    """
    arr = np.asarray(X)
    if arr.dtype.kind not in "iu":
        if arr.size and not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError("configurations must be integers")
        arr = arr.astype(np.int64)
    arr = arr.astype(np.int64)
    if arr.ndim == 1:
        arr = np.stack([arr >> n_orb, arr & ((1 << n_orb) - 1)], axis=1)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"configurations must have shape (n, 2), got {arr.shape}")
    if np.any(arr < 0) or np.any(arr >= 1 << n_orb):
        raise ValueError(f"configuration bits out of range for {n_orb} orbitals")
    return arr
