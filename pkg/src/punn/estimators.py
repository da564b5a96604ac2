"""scikit-learn style wrappers around the VQE and network-training drivers.

``X`` is an :class:`~punn.integrals.IntegralSet` or a path to an FCIDUMP
file. ``fit`` runs the optimization, ``predict`` returns the ground-state
energy estimate, and ``score`` returns its negative so that higher is better.

Example:
    >>> from punn.data import fixture_path
    >>> vqe = PairVQE(mode="exact").fit(fixture_path("h4_chain_1.0"))
    >>> round(vqe.energy_, 3)
    -2.133
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from punn.ansatz import PuccdAnsatz, puccd_state
from punn.integrals import IntegralSet
from punn.operators import build_sz_hamiltonian
from punn.solvers import TrainConfig, TrainReport, VqeResult, train_punn, vqe_puccd
from punn.validation import (
    check_choice,
    check_closed_shell,
    check_configurations,
    check_integrals,
    check_positive_int,
    check_theta,
)

__all__ = ["PairVQE", "PUNN"]

MODES = ("exact", "shots")


class PairVQE(BaseEstimator):
    """Pair-circuit VQE on the seniority-zero Hamiltonian.

    Args:
        mode: ``"exact"`` (L-BFGS-B on the statevector energy) or ``"shots"``
            (coordinate sweeps on sampled energies).
        shots: Shots per basis in shot mode.
        seed: Seed for the sampling streams.
        sweeps: Coordinate sweeps in shot mode.
        maxiter: Iteration cap for L-BFGS-B in exact mode.

    Attributes:
        theta_: Optimized circuit angles.
        energy_: Energy at ``theta_`` (Hartree, nuclear repulsion included).
        result_: The full :class:`~punn.solvers.VqeResult`.
        n_orb_: Number of spatial orbitals of the fitted system.
    """

    def __init__(self, mode: str = "exact", shots: int = 1024, seed: int = 0, sweeps: int = 8,
                 maxiter: int = 500):
        self.mode = mode
        self.shots = shots
        self.seed = seed
        self.sweeps = sweeps
        self.maxiter = maxiter

    def _validate_params(self):
        check_choice(self.mode, "mode", MODES)
        check_positive_int(self.shots, "shots")
        check_positive_int(self.sweeps, "sweeps")
        check_positive_int(self.maxiter, "maxiter")
        check_positive_int(self.seed, "seed", allow_zero=True)

    def fit(self, X, y=None):
        self._validate_params()
        ints = check_closed_shell(check_integrals(X))
        ansatz = PuccdAnsatz(ints.n_orb, ints.n_pairs)
        self.result_ = vqe_puccd(build_sz_hamiltonian(ints), ansatz, self.mode, shots=self.shots,
                                 seed=self.seed, sweeps=self.sweeps, maxiter=self.maxiter)
        self.theta_ = self.result_.theta
        self.energy_ = self.result_.energy
        self.n_orb_ = ints.n_orb
        self.n_pairs_ = ints.n_pairs
        return self

    def predict(self, X=None) -> float:
        check_is_fitted(self, "result_")
        return self.energy_

    def score(self, X=None, y=None) -> float:
        return -self.predict(X)

    def transform(self, X=None) -> np.ndarray:
        """Amplitudes of the optimized pair-circuit state over all ``2^N`` pair configurations."""
        check_is_fitted(self, "result_")
        return puccd_state(PuccdAnsatz(self.n_orb_, self.n_pairs_, self.theta_)).amplitudes.real


class PUNN(BaseEstimator):
    """Pair circuit plus neural amplitude network, trained over several seeds.

    If ``theta`` is None, the circuit angles are first optimized with
    :class:`PairVQE` in the same ``mode``.

    Args:
        mode: ``"exact"`` or ``"shots"``.
        shots: Shots per measurement basis in shot mode.
        k: Hidden-width multiplier (width ``2 k N``).
        seeds: Number of independently initialized networks.
        max_nn_steps: Network steps in exact mode (None for the default).
        resample_interval: Steps between fresh sample rounds in shot mode.
        macro_iterations: Sample rounds in shot mode.
        joint_finetune: Refine the circuit angles every 1000 network steps (exact mode).
        circuit: ``"puccd"`` or ``"hadamard"`` (baseline).
        exact_phi: Enumerate the perturbation state's distribution instead of sampling it.
        seed: Master seed.
        threads: Worker processes for the seed loop.
        theta: Fixed circuit angles, or None to run VQE first.

    Attributes:
        report_: The :class:`~punn.solvers.TrainReport`.
        energy_: Lowest energy across seeds.
        model_: Network of the best seed.
        theta_: Circuit angles used for training.
    """

    def __init__(self, mode: str = "exact", shots: int = 1024, k: int = 2, seeds: int = 5,
                 max_nn_steps: int | None = None, resample_interval: int = 30,
                 macro_iterations: int = 15, joint_finetune: bool = False, circuit: str = "puccd",
                 exact_phi: bool = False, seed: int = 0, threads: int = 1, theta=None):
        self.mode = mode
        self.shots = shots
        self.k = k
        self.seeds = seeds
        self.max_nn_steps = max_nn_steps
        self.resample_interval = resample_interval
        self.macro_iterations = macro_iterations
        self.joint_finetune = joint_finetune
        self.circuit = circuit
        self.exact_phi = exact_phi
        self.seed = seed
        self.threads = threads
        self.theta = theta

    def _config(self) -> TrainConfig:
        check_choice(self.mode, "mode", MODES)
        check_choice(self.circuit, "circuit", ("puccd", "hadamard"))
        for name in ("shots", "k", "seeds", "resample_interval", "macro_iterations", "threads"):
            check_positive_int(getattr(self, name), name)
        check_positive_int(self.seed, "seed", allow_zero=True)
        if self.max_nn_steps is not None:
            check_positive_int(self.max_nn_steps, "max_nn_steps", allow_zero=True)
        return TrainConfig(
            mode=self.mode, shots=self.shots, max_nn_steps=self.max_nn_steps,
            resample_interval=self.resample_interval, macro_iterations=self.macro_iterations,
            seeds=self.seeds, k=self.k, joint_finetune=bool(self.joint_finetune), seed=self.seed,
            threads=self.threads, circuit=self.circuit, exact_phi=bool(self.exact_phi),
        )

    def _circuit_angles(self, ints: IntegralSet, cfg: TrainConfig):
        if cfg.circuit == "hadamard":
            return None
        n_params = PuccdAnsatz(ints.n_orb, ints.n_pairs).n_params
        if self.theta is None:
            return PairVQE(mode=cfg.mode, shots=cfg.shots, seed=cfg.seed).fit(ints).theta_
        theta = self.theta.theta if isinstance(self.theta, VqeResult) else self.theta
        return check_theta(theta, n_params)

    def fit(self, X, y=None):
        cfg = self._config()
        ints = check_closed_shell(check_integrals(X))
        theta = self._circuit_angles(ints, cfg)
        self.report_: TrainReport = train_punn(ints, theta, cfg)
        best = self.report_.best
        self.energy_ = best.energy
        self.model_ = best.model
        self.theta_ = best.theta if best.theta is not None else self.report_.theta
        self.n_orb_ = ints.n_orb
        return self

    def predict(self, X=None) -> float:
        check_is_fitted(self, "report_")
        return self.energy_

    def score(self, X=None, y=None) -> float:
        return -self.predict(X)

    def transform(self, X) -> np.ndarray:
        """Masked network amplitudes ``b`` for physical configurations.

        Args:
            X: ``(n, 2)`` integer array of ``(k_alpha, k_beta)`` bit patterns,
                or a 1-D array of full ``2N``-bit indices.
        """
        check_is_fitted(self, "report_")
        conf = check_configurations(X, self.n_orb_)
        return self.model_.amplitudes(conf[:, 0], conf[:, 1])
