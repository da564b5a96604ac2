"""Optimization drivers: pair-circuit VQE, network training, and the circuit baseline.

Training is staged. The pair circuit is optimized first (:func:`vqe_puccd`),
then the amplitude network is trained on top of the frozen circuit
(:func:`train_punn`). In exact mode the energy is a ratio of quadratic forms
over the full particle-number sector; in shot mode it is rebuilt from fresh
samples at every macro-iteration.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.optimize import minimize

from punn.ansatz import (
    PuccdAnsatz,
    hadamard_state,
    perturbation_state,
    puccd_state,
)
from punn.integrals import IntegralSet
from punn.measurement import MAX_DENSE_QUBITS, estimate_energy, exact_hybrid_expectation, sample_energy_form
from punn.neural import AdaMaxState, NeuralAmplitudeModel, QuadraticForm, adamax_step
from punn.operators import (
    PauliSum,
    SzHamiltonian,
    _popcount,
    build_sz_hamiltonian,
    full_jw_hamiltonian,
    pauli_sum_matrix,
    sz_to_pauli,
)
from punn.oracles import sector_basis
from punn.statevector import GateOp, State, apply_circuit, make_rng, sample_probabilities

__all__ = [
    "TrainConfig",
    "VqeResult",
    "SeedResult",
    "TrainReport",
    "BaselineReport",
    "vqe_puccd",
    "exact_training_form",
    "train_punn",
    "baseline_compare",
    "FORMAT_VERSION",
]

FORMAT_VERSION = 1
FD_STEP = 1e-6
EXACT_STEPS = 64000
_SEED_STREAM = 101
_SHOT_STREAM = 202
_FINAL_STREAM = 303
_VQE_STREAM = 404


@dataclass(frozen=True)
class TrainConfig:
    """Settings shared by VQE, network training and the baseline comparison.

    ``max_nn_steps`` defaults to 64000 in exact mode; in shot mode the step
    count is always ``resample_interval * macro_iterations``.
    """

    mode: str = "exact"
    shots: int = 1024
    max_nn_steps: int | None = None
    resample_interval: int = 30
    macro_iterations: int = 15
    seeds: int = 5
    k: int = 2
    joint_finetune: bool = False
    seed: int = 0
    threads: int = 1
    circuit: str = "puccd"
    exact_phi: bool = False
    vqe_sweeps: int = 8

    def __post_init__(self):
        if self.mode not in ("exact", "shots"):
            raise ValueError(f"mode must be 'exact' or 'shots', got {self.mode!r}")
        if self.circuit not in ("puccd", "hadamard"):
            raise ValueError(f"circuit must be 'puccd' or 'hadamard', got {self.circuit!r}")
        for name in ("shots", "resample_interval", "macro_iterations", "seeds", "k", "threads"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.max_nn_steps is not None and self.max_nn_steps < 0:
            raise ValueError("max_nn_steps must be non-negative")

    @property
    def n_steps(self) -> int:
        if self.mode == "shots":
            return self.resample_interval * self.macro_iterations
        return EXACT_STEPS if self.max_nn_steps is None else self.max_nn_steps

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------- VQE


@dataclass
class VqeResult:
    theta: np.ndarray
    energy: float
    mode: str
    converged: bool
    n_evaluations: int
    seed: int = 0
    stderr: float = 0.0

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "theta": [float(t) for t in self.theta],
            "energy": self.energy,
            "stderr": self.stderr,
            "mode": self.mode,
            "converged": self.converged,
            "n_evaluations": self.n_evaluations,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> VqeResult:
        return cls(np.asarray(data["theta"], dtype=float), float(data["energy"]), data["mode"],
                   bool(data["converged"]), int(data["n_evaluations"]), int(data.get("seed", 0)),
                   float(data.get("stderr", 0.0)))


def _central_fd(fun: Callable[[np.ndarray], float], x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        grad[i] = (fun(x + e) - fun(x - e)) / (2 * step)
    return grad


class _ThreeBasisEstimator:
    """Sampled pair-Hamiltonian energy from Z, all-X and all-Y basis shots."""

    def __init__(self, hp: PauliSum, shots: int, seed: int):
        self.n = hp.n_qubits
        self.shots, self.seed = shots, seed
        self.const = hp.constant
        self.groups = {"Z": [], "X": [], "Y": []}
        for term in hp:
            if term.is_identity:
                continue
            letters = {int(c) for c in term.letters if c}
            if len(letters) != 1:
                raise ValueError(f"{term.label} is not measurable in a uniform basis")
            code = "IXYZ"[letters.pop()]
            self.groups[code].append((term.z_mask | term.x_mask, complex(term.coefficient).real))
        self.rotations = {
            "Z": [],
            "X": [GateOp("H", (q,)) for q in range(self.n)],
            "Y": [g for q in range(self.n) for g in (GateOp("SDG", (q,)), GateOp("H", (q,)))],
        }

    def __call__(self, state: State, stream: tuple[int, ...]) -> tuple[float, float]:
        energy, var = self.const, 0.0
        for tag, (basis, terms) in enumerate(self.groups.items()):
            if not terms:
                continue
            probs = apply_circuit(state, self.rotations[basis]).probabilities
            x = sample_probabilities(probs, self.shots, make_rng(self.seed, (*stream, tag)))
            per_shot = np.zeros(self.shots)
            for mask, coeff in terms:
                per_shot += coeff * (1.0 - 2.0 * (_popcount(x & mask) & 1))
            energy += per_shot.mean()
            var += per_shot.var(ddof=1) / self.shots
        return float(energy), float(np.sqrt(var))


def vqe_puccd(
    hsz: SzHamiltonian,
    ansatz: PuccdAnsatz,
    mode: str = "exact",
    *,
    shots: int = 1024,
    seed: int = 0,
    sweeps: int = 8,
    maxiter: int = 500,
) -> VqeResult:
    """Optimize the pair-circuit angles against the pair Hamiltonian.

    Exact mode runs L-BFGS-B on the exact energy with central finite-difference
    gradients from ``theta = 0``. Shot mode runs sequential coordinate sweeps:
    each angle is probed at ``-step, 0, +step`` with fresh shots and moved to
    the vertex of the fitted parabola (clipped to two steps). The returned
    energy in shot mode is a fresh estimate at the final angles.
    """
    if hsz.n_orb != ansatz.n_orb:
        raise ValueError(f"ansatz has {ansatz.n_orb} orbitals, Hamiltonian has {hsz.n_orb}")
    hp = sz_to_pauli(hsz)
    if mode == "exact":
        mat = pauli_sum_matrix(hp).real
        count = 0

        def energy(theta):
            nonlocal count
            count += 1
            psi = puccd_state(ansatz.with_theta(theta)).amplitudes.real
            return float(psi @ (mat @ psi))

        res = minimize(energy, np.array(ansatz.theta), jac=lambda t: _central_fd(energy, t),
                       method="L-BFGS-B", options={"maxiter": maxiter, "ftol": 1e-15, "gtol": 1e-9})
        return VqeResult(np.asarray(res.x), float(res.fun), mode, bool(res.success), count, seed)
    if mode != "shots":
        raise ValueError(f"mode must be 'exact' or 'shots', got {mode!r}")

    estimator = _ThreeBasisEstimator(hp, shots, seed)
    theta = np.array(ansatz.theta, dtype=float)
    calls = 0

    def sampled(t):
        nonlocal calls
        calls += 1
        return estimator(puccd_state(ansatz.with_theta(t)), (_VQE_STREAM, calls))[0]

    step = 0.2
    for _ in range(sweeps):
        for i in range(theta.size):
            probes = []
            for d in (-step, 0.0, step):
                t = theta.copy()
                t[i] += d
                probes.append(sampled(t))
            em, e0, ep = probes
            curv = (ep - 2 * e0 + em) / step**2
            move = -(ep - em) / (2 * step * curv) if curv > 0 else (step if ep < em else -step)
            theta[i] += float(np.clip(move, -2 * step, 2 * step))
        step = max(step * 0.7, 0.02)
    calls += 1
    final, err = estimator(puccd_state(ansatz.with_theta(theta)), (_VQE_STREAM, calls, 1))
    return VqeResult(theta, final, mode, True, calls, seed, err)


# --------------------------------------------------------------------------- training


def exact_training_form(psi: State, phi: State, h_full: PauliSum, n_alpha: int, n_beta: int) -> QuadraticForm:
    """Exact energy of ``N E (psi (x) phi)`` as a quadratic form over the spin sector.

    Configurations outside the sector are masked to zero, so restricting to
    the sector loses nothing. Entries are ``Phi_c H_cc' Phi_c'`` with
    ``Phi(k_a, k_b) = psi(k_a) phi(k_a XOR k_b)``.
    """
    n = psi.n_qubits
    basis = sector_basis(n, n_alpha, n_beta)
    k, j = basis >> n, basis & ((1 << n) - 1)
    amp = psi.amplitudes[k] * phi.amplitudes[k ^ j]
    if np.abs(amp.imag).max(initial=0) > 1e-12:
        raise ValueError("exact training form needs real amplitudes")
    amp = amp.real
    h = pauli_sum_matrix(h_full, basis=basis)
    if h.nnz and np.abs(h.data.imag).max() > 1e-12:
        raise ValueError("Hamiltonian matrix is not real")
    scale = sparse.diags(amp)
    return QuadraticForm(k, j, (scale @ h.real @ scale).tocsr(), amp**2)


@dataclass
class SeedResult:
    seed_index: int
    energy: float
    best_step: int
    trace: np.ndarray
    model: NeuralAmplitudeModel
    stderr: float = 0.0
    exact_energy: float | None = None
    theta: np.ndarray | None = None

    def summary(self) -> dict:
        out = {"seed_index": self.seed_index, "energy": self.energy, "stderr": self.stderr,
               "best_step": self.best_step, "final_trace_energy": float(self.trace[-1])}
        if self.exact_energy is not None:
            out["exact_energy"] = self.exact_energy
        if self.theta is not None:
            out["theta"] = [float(t) for t in self.theta]
        return out


@dataclass
class TrainReport:
    config: TrainConfig
    circuit: str
    theta: np.ndarray
    seeds: list[SeedResult]
    reference: dict = field(default_factory=dict)

    @property
    def best(self) -> SeedResult:
        return min(self.seeds, key=lambda s: s.energy)

    @property
    def energy(self) -> float:
        return self.best.energy

    @property
    def final_energies(self) -> np.ndarray:
        return np.array([s.energy for s in self.seeds])

    def traces(self) -> np.ndarray:
        return np.stack([s.trace for s in self.seeds])

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "config": self.config.to_dict(),
            "circuit": self.circuit,
            "theta": [float(t) for t in self.theta],
            "E_best": self.energy,
            "best_seed": self.best.seed_index,
            "seeds": [s.summary() for s in self.seeds],
            "seed_spread": float(np.std(self.final_energies)),
            "reference": self.reference,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step"] + [f"seed{s.seed_index}" for s in self.seeds])
        for step, row in enumerate(self.traces().T):
            writer.writerow([step] + [repr(float(v)) for v in row])
        return buf.getvalue()


def _circuit_state(circuit: str, n_orb: int, n_pairs: int, theta: np.ndarray) -> State:
    if circuit == "hadamard":
        return hadamard_state(n_orb)
    return puccd_state(PuccdAnsatz(n_orb, n_pairs, theta))


def _seed_model(ints: IntegralSet, cfg: TrainConfig, index: int) -> NeuralAmplitudeModel:
    rng = make_rng(cfg.seed, (_SEED_STREAM, index))
    return NeuralAmplitudeModel(ints.n_orb, ints.n_elec_alpha, ints.n_elec_beta, cfg.k, seed=rng)


def _train_seed(args) -> SeedResult:
    ints, theta, cfg, index, h_full = args
    n = ints.n_orb
    phi = perturbation_state(n)
    psi = _circuit_state(cfg.circuit, n, ints.n_pairs, theta)
    model = _seed_model(ints, cfg, index)
    params = model.get_params()
    opt = AdaMaxState.zeros(params.size)
    steps = cfg.n_steps
    trace = np.empty(steps + 1)
    best_e, best_step, best_params = np.inf, 0, params.copy()

    def exact_form(t):
        return exact_training_form(_circuit_state(cfg.circuit, n, ints.n_pairs, t), phi, h_full,
                                   ints.n_elec_alpha, ints.n_elec_beta)

    if cfg.mode == "exact":
        form = exact_form(theta)
    for step in range(steps + 1):
        fresh = cfg.mode == "exact" or step % cfg.resample_interval == 0 or step == steps
        if cfg.mode == "shots" and fresh:
            form = sample_energy_form(psi, phi, h_full, cfg.shots, cfg.seed, cfg.exact_phi,
                                      stream=(_SHOT_STREAM, index, -(-step // cfg.resample_interval)))
        energy, grad = form.value_and_grad(model)
        trace[step] = energy
        # only evaluations on samples not yet trained on are unbiased
        if fresh and energy < best_e:
            best_e, best_step, best_params = energy, step, params.copy()
        if step == steps:
            break
        opt, params = adamax_step(opt, params, grad)
        model.set_params(params)
        if (cfg.joint_finetune and cfg.mode == "exact" and cfg.circuit == "puccd"
                and (step + 1) % 1000 == 0):
            theta = _finetune_theta(theta, model, exact_form)
            form = exact_form(theta)
    model.set_params(best_params)
    result = SeedResult(index, float(best_e), best_step, trace, model, theta=np.array(theta))
    if cfg.mode == "shots":
        final = _final_estimate(psi, phi, model, h_full, cfg, index)
        result.energy, result.stderr = final.energy, final.stderr
    if 2 * n <= MAX_DENSE_QUBITS and cfg.mode == "shots":
        num, den = exact_hybrid_expectation(psi, phi, model, h_full)
        result.exact_energy = num / den
    return result


def _final_estimate(psi, phi, model, h_full, cfg: TrainConfig, index: int):
    seed = int(np.random.SeedSequence(cfg.seed, spawn_key=(_FINAL_STREAM, index)).generate_state(1)[0])
    return estimate_energy(psi, phi, model, h_full, cfg.shots, seed=seed, exact_phi=cfg.exact_phi)


def _finetune_theta(theta, model, exact_form, maxiter: int = 3) -> np.ndarray:
    """A few finite-difference L-BFGS-B steps on the circuit angles with the network frozen."""
    def energy(t):
        return exact_form(t).energy(model)[0]

    res = minimize(energy, theta, jac=lambda t: _central_fd(energy, t), method="L-BFGS-B",
                   options={"maxiter": maxiter})
    return np.asarray(res.x)


def train_punn(
    ints: IntegralSet,
    theta,
    cfg: TrainConfig | None = None,
    h_full: PauliSum | None = None,
) -> TrainReport:
    """Train the amplitude network on top of a fixed circuit for every seed.

    Exact mode reports the lowest energy seen per seed (the trace is exact).
    Shot mode keeps the model with the lowest estimate among evaluations on
    freshly drawn samples (each resample point, the warm start and the last
    step), then reports an independent shot estimate of that model and, when
    the dense path fits, its exact energy as ``exact_energy``.
    """
    cfg = cfg or TrainConfig()
    if not ints.is_closed_shell:
        raise ValueError("training needs a closed-shell integral set")
    theta = np.zeros(0) if cfg.circuit == "hadamard" and theta is None else np.asarray(theta, dtype=float)
    if cfg.circuit == "puccd":
        PuccdAnsatz(ints.n_orb, ints.n_pairs, theta)
    h_full = full_jw_hamiltonian(ints) if h_full is None else h_full
    jobs = [(ints, theta, cfg, i, h_full) for i in range(cfg.seeds)]
    if cfg.threads > 1 and cfg.seeds > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.threads, cfg.seeds)) as pool:
            results = list(pool.map(_train_seed, jobs))
    else:
        results = [_train_seed(job) for job in jobs]
    return TrainReport(cfg, cfg.circuit, theta, results)


@dataclass
class BaselineReport:
    puccd: TrainReport
    hadamard: TrainReport
    fci_energy: float | None = None

    def step_statistics(self, report: TrainReport) -> tuple[np.ndarray, np.ndarray]:
        traces = report.traces()
        return traces.mean(axis=0), traces.std(axis=0)

    def final_error(self, report: TrainReport) -> float:
        if self.fci_energy is None:
            raise ValueError("no reference energy")
        return float(np.mean(np.abs(report.final_energies - self.fci_energy)))

    def to_dict(self) -> dict:
        out = {"format_version": FORMAT_VERSION, "fci_energy": self.fci_energy}
        for name, rep in (("puccd", self.puccd), ("hadamard", self.hadamard)):
            mean, std = self.step_statistics(rep)
            out[name] = {
                **rep.to_dict(),
                "final_energies": rep.final_energies.tolist(),
                "final_spread": float(np.std(rep.final_energies)),
                "step_mean": mean.tolist(),
                "step_std": std.tolist(),
            }
            if self.fci_energy is not None:
                out[name]["final_error"] = self.final_error(rep)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step", "puccd_mean", "puccd_std", "hadamard_mean", "hadamard_std"])
        pm, ps = self.step_statistics(self.puccd)
        hm, hs = self.step_statistics(self.hadamard)
        for step in range(pm.size):
            writer.writerow([step, repr(float(pm[step])), repr(float(ps[step])),
                             repr(float(hm[step])), repr(float(hs[step]))])
        return buf.getvalue()


def baseline_compare(
    ints: IntegralSet,
    cfg: TrainConfig | None = None,
    theta=None,
    fci_energy: float | None = None,
) -> BaselineReport:
    """Run the same training protocol on the pair circuit and on a Hadamard layer."""
    cfg = cfg or TrainConfig(mode="shots")
    if theta is None:
        ansatz = PuccdAnsatz(ints.n_orb, ints.n_pairs)
        theta = vqe_puccd(build_sz_hamiltonian(ints), ansatz, cfg.mode, shots=cfg.shots,
                          seed=cfg.seed, sweeps=cfg.vqe_sweeps).theta
    h_full = full_jw_hamiltonian(ints)
    puccd = train_punn(ints, theta, replace(cfg, circuit="puccd"), h_full)
    hadamard = train_punn(ints, None, replace(cfg, circuit="hadamard"), h_full)
    return BaselineReport(puccd, hadamard, fci_energy)
