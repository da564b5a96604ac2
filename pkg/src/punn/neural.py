"""Masked MLP amplitude model ``b(k, j)``, its gradients, and AdaMax training.

Configurations ``(k, j)`` are pairs of ``N``-bit integers: ``k`` holds the alpha
occupations and ``j`` the beta occupations, qubit 0 as the most significant bit.

The model is a plain ReLU MLP over the +/-1 embedding of ``(k, j)`` with
``L = N - 3`` hidden layers of width ``2KN`` and a linear scalar output,
multiplied by a particle-number mask. Gradients are computed by hand-written
reverse-mode accumulation over a batch of configurations.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from os import PathLike
from typing import Sequence

import numpy as np
from scipy import sparse

from punn.operators import bitstring_to_int

__all__ = [
    "DegenerateEstimateError",
    "NeuralAmplitudeModel",
    "ConstantAmplitude",
    "PermutedModel",
    "QuadraticForm",
    "AdaMaxState",
    "embed",
    "mask",
    "nn_param_count",
    "default_layer_count",
    "energy_gradient",
    "adamax_step",
    "learning_rate",
]


class DegenerateEstimateError(ArithmeticError):
    """The norm estimate is not positive (e.g. every sampled configuration is masked out)."""


def _as_int(bits, n: int | None = None) -> int:
    if isinstance(bits, str):
        if n is not None and len(bits) != n:
            raise ValueError(f"expected {n} bits, got {bits!r}")
        return bitstring_to_int(bits)
    return int(bits)


def _bits(values: np.ndarray, n: int) -> np.ndarray:
    """Row per value, column ``q`` is qubit ``q`` (MSB first)."""
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return (np.asarray(values, dtype=np.int64)[:, None] >> shifts) & 1


def embed(k, j, n: int | None = None) -> np.ndarray:
    """Map ``(k, j)`` to a length-``2N`` vector: bit 0 -> -1, bit 1 -> +1, ``k`` first.

    Bitstrings fix ``N`` by their length; integers need ``n``.
    """
    if isinstance(k, str) or isinstance(j, str):
        if not (isinstance(k, str) and isinstance(j, str)) or len(k) != len(j):
            raise ValueError("k and j must be bitstrings of equal length")
        n = len(k)
    if n is None:
        raise ValueError("n is required for integer configurations")
    kk = np.atleast_1d(np.asarray(_as_int(k, n) if isinstance(k, str) else k, dtype=np.int64))
    jj = np.atleast_1d(np.asarray(_as_int(j, n) if isinstance(j, str) else j, dtype=np.int64))
    x = np.concatenate([_bits(kk, n), _bits(jj, n)], axis=1) * 2.0 - 1.0
    return x[0] if np.ndim(k) == 0 and np.ndim(j) == 0 else x


def mask(k, j, n_alpha: int, n_beta: int):
    """1 where ``popcount(k) == n_alpha`` and ``popcount(j) == n_beta``, else 0."""
    scalar = np.ndim(k) == 0 and np.ndim(j) == 0
    kk = np.asarray(_as_int(k) if isinstance(k, str) else k, dtype=np.uint64)
    jj = np.asarray(_as_int(j) if isinstance(j, str) else j, dtype=np.uint64)
    out = ((np.bitwise_count(kk) == n_alpha) & (np.bitwise_count(jj) == n_beta)).astype(float)
    return int(out) if scalar else out


def default_layer_count(n_orb: int) -> int:
    """``N - 3`` hidden layers, floored at one so tiny systems still get a network."""
    return max(n_orb - 3, 1)


def nn_param_count(n_orb: int, k: int = 2) -> int:
    if n_orb < 4:
        raise ValueError(f"need N >= 4 so that L = N - 3 >= 1, got N={n_orb}")
    width = 2 * k * n_orb
    n_layers = n_orb - 3
    return (width * 2 * n_orb + width) + (n_layers - 1) * (width * width + width) + (width + 1)


class NeuralAmplitudeModel:
    """Masked MLP ``b(k, j) = m(k, j) * (W_L x_L + c_L)``.

    Hidden layers use He-style uniform initialization. The output layer starts
    at ``W_L = 0, c_L = 1``, so a fresh model returns exactly the mask.
    """

    def __init__(
        self,
        n_orb: int,
        n_alpha: int,
        n_beta: int,
        k: int = 2,
        n_layers: int | None = None,
        seed: int | np.random.Generator | None = 0,
    ):
        if n_orb < 1 or k < 1:
            raise ValueError("n_orb and k must be positive")
        self.n_orb = n_orb
        self.n_alpha = n_alpha
        self.n_beta = n_beta
        self.k = k
        self.n_layers = default_layer_count(n_orb) if n_layers is None else n_layers
        if self.n_layers < 1:
            raise ValueError("need at least one hidden layer")
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        width = 2 * k * n_orb
        fan_in = 2 * n_orb
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for _ in range(self.n_layers):
            bound = np.sqrt(6.0 / fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(width, fan_in)))
            self.biases.append(np.zeros(width))
            fan_in = width
        self.weights.append(np.zeros((1, width)))
        self.biases.append(np.ones(1))

    @property
    def width(self) -> int:
        return 2 * self.k * self.n_orb

    @property
    def n_params(self) -> int:
        return sum(w.size + c.size for w, c in zip(self.weights, self.biases))

    def get_params(self) -> np.ndarray:
        return np.concatenate([a.ravel() for wc in zip(self.weights, self.biases) for a in wc])

    def set_params(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {flat.size}")
        pos = 0
        for i, (w, c) in enumerate(zip(self.weights, self.biases)):
            self.weights[i] = flat[pos:pos + w.size].reshape(w.shape).copy()
            pos += w.size
            self.biases[i] = flat[pos:pos + c.size].copy()
            pos += c.size

    def copy(self) -> NeuralAmplitudeModel:
        new = object.__new__(NeuralAmplitudeModel)
        new.__dict__.update(self.__dict__)
        new.weights = [w.copy() for w in self.weights]
        new.biases = [c.copy() for c in self.biases]
        return new

    def _forward(self, k: np.ndarray, j: np.ndarray):
        return self._forward_x(embed(k, j, self.n_orb))

    def _forward_x(self, x: np.ndarray):
        """Unmasked output and the layer inputs, from embedded configurations ``x``."""
        acts = [x]
        for w, c in zip(self.weights[:-1], self.biases[:-1]):
            x = np.maximum(x @ w.T + c, 0.0)
            acts.append(x)
        raw = (x @ self.weights[-1].T + self.biases[-1])[:, 0]
        return raw, acts

    def _backward_acts(self, acts: list[np.ndarray], grad_raw: np.ndarray) -> np.ndarray:
        """Flat gradient of ``sum grad_raw * raw`` given the cached layer inputs."""
        delta = grad_raw[:, None]
        grads = []
        for i in range(len(self.weights) - 1, -1, -1):
            grads.append((delta.sum(axis=0), delta.T @ acts[i]))
            if i:
                delta = (delta @ self.weights[i]) * (acts[i] > 0)
        return np.concatenate([a.ravel() for gc, gw in reversed(grads) for a in (gw, gc)])

    def amplitudes(self, k, j) -> np.ndarray:
        """Vectorized ``b(k, j)`` over integer arrays ``k`` and ``j``."""
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        j = np.atleast_1d(np.asarray(j, dtype=np.int64))
        m = mask(k, j, self.n_alpha, self.n_beta)
        out = np.zeros(k.shape, dtype=float)
        keep = m > 0
        if keep.any():
            out[keep] = self._forward(k[keep], j[keep])[0]
        return out

    def forward(self, k, j) -> float:
        """Single ``b(k, j)``; accepts bitstrings or integers."""
        return float(self.amplitudes([_as_int(k, self.n_orb)], [_as_int(j, self.n_orb)])[0])

    def backward(self, k, j, grad_b) -> np.ndarray:
        """Flat gradient of ``sum_c grad_b[c] * b(k[c], j[c])`` w.r.t. the parameters."""
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        j = np.atleast_1d(np.asarray(j, dtype=np.int64))
        g = np.asarray(grad_b, dtype=float) * mask(k, j, self.n_alpha, self.n_beta)
        keep = g != 0
        if not keep.any():
            return np.zeros(self.n_params)
        _, acts = self._forward(k[keep], j[keep])
        return self._backward_acts(acts, g[keep])

    # -- checkpoints ---------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": "punn-model",
            "format_version": 1,
            "N": self.n_orb,
            "K": self.k,
            "L": self.n_layers,
            "N_alpha": self.n_alpha,
            "N_beta": self.n_beta,
            "layers": [
                {"weight_shape": list(w.shape), "weight": w.ravel().tolist(), "bias": c.tolist()}
                for w, c in zip(self.weights, self.biases)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> NeuralAmplitudeModel:
        if data.get("format") != "punn-model":
            raise ValueError("not a model checkpoint")
        model = cls(data["N"], data["N_alpha"], data["N_beta"], data["K"], data["L"], seed=0)
        if len(data["layers"]) != len(model.weights):
            raise ValueError("layer count does not match the header")
        for i, layer in enumerate(data["layers"]):
            w = np.asarray(layer["weight"], dtype=float).reshape(layer["weight_shape"])
            if w.shape != model.weights[i].shape:
                raise ValueError(f"layer {i} has shape {w.shape}, expected {model.weights[i].shape}")
            model.weights[i] = w
            model.biases[i] = np.asarray(layer["bias"], dtype=float)
        return model

    def save(self, path: str | PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path: str | PathLike) -> NeuralAmplitudeModel:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


class ConstantAmplitude:
    """``b(k, j) = value``, optionally times the particle-number mask. No parameters."""

    def __init__(self, value: float = 1.0, n_alpha: int | None = None, n_beta: int | None = None):
        self.value = float(value)
        self.n_alpha = n_alpha
        self.n_beta = n_beta

    def amplitudes(self, k, j) -> np.ndarray:
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        j = np.atleast_1d(np.asarray(j, dtype=np.int64))
        out = np.full(k.shape, self.value)
        if self.n_alpha is not None:
            out = out * mask(k, j, self.n_alpha, self.n_beta)
        return out


class PermutedModel:
    """Index-permuted query ``b'(k, j) = b(k, k XOR j)`` seen after moving the entangler."""

    def __init__(self, model):
        self.model = model

    def amplitudes(self, k, j) -> np.ndarray:
        k = np.asarray(k, dtype=np.int64)
        return self.model.amplitudes(k, k ^ np.asarray(j, dtype=np.int64))


# --------------------------------------------------------------------------- objective


_DENSE_KEY_LIMIT = 1 << 22


@dataclass
class QuadraticForm:
    """Energy as a ratio of quadratic forms in the amplitudes of a config list.

    ``E = (b^T M b) / (d . b^2)`` with ``b = b(k, j)`` over the listed
    physical configurations. Both the exact contraction and frozen shot
    statistics reduce to this form.
    """

    k: np.ndarray
    j: np.ndarray
    numerator: sparse.csr_matrix
    norm: np.ndarray

    @classmethod
    def from_terms(
        cls,
        weighted_terms: Sequence[tuple] | tuple[np.ndarray, ...],
        norm_terms: Sequence[tuple] | tuple[np.ndarray, ...],
    ) -> QuadraticForm:
        """Build from ``(k, j, k~, j~, weight[, tag])`` and ``(k, j, weight)`` records.

        Either a list of tuples or a tuple of parallel arrays is accepted.
        """
        k1, j1, k2, j2, w = _columns(weighted_terms, 5)
        kn, jn, wn = _columns(norm_terms, 3)
        ks, js = np.concatenate([k1, k2, kn]), np.concatenate([j1, j2, jn])
        shift = max(int(js.max(initial=0)).bit_length(), 1)
        keys = (ks << shift) | js
        span = int(keys.max(initial=0)) + 1
        if span <= _DENSE_KEY_LIMIT:
            present = np.zeros(span, dtype=bool)
            present[keys] = True
            uniq = np.flatnonzero(present)
            lookup = np.cumsum(present) - 1
            inv = lookup[keys]
        else:
            uniq, inv = np.unique(keys, return_inverse=True)
        na, nb = k1.size, k2.size
        ia, ib, inn = inv[:na], inv[na:na + nb], inv[na + nb:]
        size = uniq.size
        half = 0.5 * w
        if size * size <= _DENSE_KEY_LIMIT:
            flat = np.bincount(ia * size + ib, weights=half, minlength=size * size)
            dense = flat.reshape(size, size)
            mat = sparse.csr_matrix(dense + dense.T)
        else:
            mat = sparse.coo_matrix(
                (np.concatenate([half, half]), (np.concatenate([ia, ib]), np.concatenate([ib, ia]))),
                shape=(size, size),
            ).tocsr()
            mat.sum_duplicates()
        norm = np.bincount(inn, weights=wn, minlength=size)
        return cls(uniq >> shift, uniq & ((1 << shift) - 1), mat, norm)

    def energy(self, model) -> tuple[float, float, float]:
        """``(E, A, B)`` for a model exposing ``amplitudes``."""
        b = model.amplitudes(self.k, self.j)
        a = float(b @ (self.numerator @ b))
        bb = float(self.norm @ (b * b))
        if not bb > 0:
            raise DegenerateEstimateError(f"degenerate estimate: norm {bb:.3e} <= 0")
        return a / bb, a, bb

    def value_and_grad(self, model: NeuralAmplitudeModel) -> tuple[float, np.ndarray]:
        keep, x = self._inputs(model)
        raw, acts = model._forward_x(x)
        b = np.zeros(self.k.size)
        b[keep] = raw
        mb = self.numerator @ b
        a = float(b @ mb)
        bb = float(self.norm @ (b * b))
        if not bb > 0:
            raise DegenerateEstimateError(f"degenerate estimate: norm {bb:.3e} <= 0")
        e = a / bb
        grad_b = 2.0 * (mb - e * self.norm * b) / bb
        return e, model._backward_acts(acts, grad_b[keep])

    def _inputs(self, model: NeuralAmplitudeModel):
        """Unmasked config indices and their embeddings, cached per model shape."""
        key = (model.n_orb, model.n_alpha, model.n_beta)
        if getattr(self, "_cache_key", None) != key:
            keep = mask(self.k, self.j, model.n_alpha, model.n_beta) > 0
            self._cache = (keep, embed(self.k[keep], self.j[keep], model.n_orb))
            self._cache_key = key
        return self._cache


def _columns(records, width):
    if isinstance(records, tuple) and len(records) >= width and isinstance(records[0], np.ndarray):
        cols = records[:width]
    else:
        records = list(records)
        if not records:
            cols = [np.zeros(0)] * width
        else:
            cols = list(zip(*[r[:width] for r in records]))
    out = [np.asarray(c, dtype=np.int64) for c in cols[:width - 1]]
    return (*out, np.asarray(cols[width - 1], dtype=float))


def energy_gradient(model: NeuralAmplitudeModel, weighted_terms, norm_terms) -> tuple[float, np.ndarray]:
    """Energy ``A / B`` and its parameter gradient ``(grad A - E grad B) / B``.

    ``A = sum w b(k, j) b(k~, j~)`` over ``weighted_terms`` and
    ``B = sum w b(k, j)**2`` over ``norm_terms``.
    """
    return QuadraticForm.from_terms(weighted_terms, norm_terms).value_and_grad(model)


# --------------------------------------------------------------------------- AdaMax


@dataclass
class AdaMaxState:
    """AdaMax moments and the piecewise-linear learning-rate schedule.

    The rate is ``lr`` before ``decay_start`` steps, falls linearly to
    ``lr_final`` at ``decay_end`` and stays there.
    """

    m: np.ndarray
    u: np.ndarray
    step: int = 0
    lr: float = 0.01
    beta1: float = 0.8
    beta2: float = 0.99
    lr_final: float = 0.001
    decay_start: int = 8000
    decay_end: int = 32000
    eps: float = 1e-8
    history: list = field(default_factory=list, repr=False)

    @classmethod
    def zeros(cls, n_params: int, **hyper) -> AdaMaxState:
        return cls(np.zeros(n_params), np.zeros(n_params), **hyper)


def learning_rate(opt: AdaMaxState, step: int | None = None) -> float:
    t = opt.step if step is None else step
    if t < opt.decay_start:
        return opt.lr
    if t >= opt.decay_end:
        return opt.lr_final
    frac = (t - opt.decay_start) / (opt.decay_end - opt.decay_start)
    return opt.lr + (opt.lr_final - opt.lr) * frac


def adamax_step(opt: AdaMaxState, params: np.ndarray, grads: np.ndarray) -> tuple[AdaMaxState, np.ndarray]:
    """One AdaMax update using the scheduled rate for the current step counter."""
    grads = np.asarray(grads, dtype=float)
    if grads.shape != params.shape:
        raise ValueError(f"gradient shape {grads.shape} does not match parameters {params.shape}")
    if not np.all(np.isfinite(grads)):
        raise FloatingPointError("non-finite gradient component")
    alpha = learning_rate(opt)
    m = opt.beta1 * opt.m + (1.0 - opt.beta1) * grads
    u = np.maximum(opt.beta2 * opt.u, np.abs(grads))
    t = opt.step + 1
    update = (alpha / (1.0 - opt.beta1**t)) * m / (u + opt.eps)
    return replace(opt, m=m, u=u, step=t), params - update
