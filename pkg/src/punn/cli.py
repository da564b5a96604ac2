"""Command-line entry point: ``punn inspect | vqe | train``.

Every artifact is JSON carrying ``format_version`` and a ``run_config`` echo
of the parsed arguments. ``train`` also writes a per-step trace CSV next to
the JSON report.

Exit codes: 0 success, 1 usage, 2 input parse failure, 3 numerical failure
(degenerate estimate or non-convergence).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from punn.ansatz import PuccdAnsatz
from punn.data import FIXTURES, fixture_path, load_sidecar
from punn.integrals import FCIDUMPError, IntegralSet, hf_reference_energy, read_fcidump
from punn.neural import DegenerateEstimateError
from punn.operators import build_sz_hamiltonian, full_jw_hamiltonian
from punn.oracles import doci_ground_energy, fci_ground_energy
from punn.solvers import FORMAT_VERSION, TrainConfig, VqeResult, baseline_compare, train_punn, vqe_puccd

__all__ = ["main", "build_parser", "cmd_inspect", "cmd_vqe", "cmd_train"]

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class NumericalError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _nonnegative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--fcidump", required=True,
                        help=f"FCIDUMP path, or a shipped fixture name ({', '.join(FIXTURES)})")
    common.add_argument("--seed", type=_nonnegative, default=0, help="master seed")
    common.add_argument("--out", type=Path, help="output JSON path (stdout if omitted)")

    solve = argparse.ArgumentParser(add_help=False)
    solve.add_argument("--mode", choices=("exact", "shots"), default="exact")
    solve.add_argument("--shots", type=_positive, default=1024, help="shots per measurement basis")

    parser = _Parser(prog="punn", description="Pair-circuit plus neural-network ground-state energies.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("inspect", parents=[common], help="integral summary with HF, DOCI and FCI energies")
    sub.add_parser("vqe", parents=[common, solve], help="optimize the pair circuit")
    train = sub.add_parser("train", parents=[common, solve], help="train the amplitude network")
    train.add_argument("--theta", type=Path, help="VQE artifact with circuit angles (run VQE if omitted)")
    train.add_argument("--seeds", type=_positive, default=5)
    train.add_argument("--k", type=_positive, default=2, help="hidden width multiplier")
    train.add_argument("--steps", type=_nonnegative, help="network steps in exact mode (default 64000)")
    train.add_argument("--circuit", choices=("puccd", "hadamard"), default="puccd",
                       help="'hadamard' runs the circuit baseline comparison")
    train.add_argument("--threads", type=_positive, default=1, help="worker processes for seeds")
    train.add_argument("--joint-finetune", action="store_true")
    train.add_argument("--exact-phi", action="store_true",
                       help="enumerate the perturbation distribution instead of sampling it")
    train.add_argument("--trace", type=Path, help="trace CSV path (default: --out with .csv suffix)")
    return parser


def _run_config(args: argparse.Namespace) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())}


def _resolve_fcidump(name: str) -> tuple[IntegralSet, dict | None]:
    if name in FIXTURES:
        return read_fcidump(fixture_path(name)), load_sidecar(name)
    path = Path(name)
    if not path.is_file():
        raise FileNotFoundError(f"no such FCIDUMP file: {path}")
    return read_fcidump(path), None


def cmd_inspect(args: argparse.Namespace) -> dict:
    ints, sidecar = _resolve_fcidump(args.fcidump)
    h_full = full_jw_hamiltonian(ints)
    out = {
        "n_orb": ints.n_orb,
        "n_elec_alpha": ints.n_elec_alpha,
        "n_elec_beta": ints.n_elec_beta,
        "e_nuc": ints.e_nuc,
        "hf_energy": hf_reference_energy(ints),
        "fci_energy": fci_ground_energy(h_full, ints.n_elec_alpha, ints.n_elec_beta),
        "doci_energy": None,
    }
    if ints.is_closed_shell and ints.n_pairs > 0:
        out["doci_energy"] = doci_ground_energy(build_sz_hamiltonian(ints), ints.n_pairs)
    if sidecar is not None:
        out["sidecar"] = sidecar
    return out


def cmd_vqe(args: argparse.Namespace) -> dict:
    ints, _ = _resolve_fcidump(args.fcidump)
    if not ints.is_closed_shell:
        raise UsageError("the pair circuit needs a closed-shell system")
    result = vqe_puccd(build_sz_hamiltonian(ints), PuccdAnsatz(ints.n_orb, ints.n_pairs), args.mode,
                       shots=args.shots, seed=args.seed)
    out = result.to_dict()
    if not result.converged:
        out["warning"] = "optimizer did not converge; best-so-far angles returned"
    return out


def _load_theta(path: Path) -> VqeResult:
    try:
        data = json.loads(path.read_text())
        return VqeResult.from_dict(data)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read VQE artifact {path}: {exc}") from exc


def cmd_train(args: argparse.Namespace) -> tuple[dict, str]:
    ints, sidecar = _resolve_fcidump(args.fcidump)
    if not ints.is_closed_shell:
        raise UsageError("the pair circuit needs a closed-shell system")
    cfg = TrainConfig(mode=args.mode, shots=args.shots, max_nn_steps=args.steps, seeds=args.seeds,
                      k=args.k, seed=args.seed, threads=args.threads, joint_finetune=args.joint_finetune,
                      exact_phi=args.exact_phi)
    if args.theta is not None:
        vqe = _load_theta(args.theta)
        theta = vqe.theta
        if theta.size != PuccdAnsatz(ints.n_orb, ints.n_pairs).n_params:
            raise UsageError(f"artifact has {theta.size} angles, system needs "
                             f"{PuccdAnsatz(ints.n_orb, ints.n_pairs).n_params}")
    else:
        vqe = vqe_puccd(build_sz_hamiltonian(ints), PuccdAnsatz(ints.n_orb, ints.n_pairs), args.mode,
                        shots=args.shots, seed=args.seed)
        theta = vqe.theta
    fci = sidecar["fci_energy"] if sidecar else None
    if args.circuit == "hadamard":
        report = baseline_compare(ints, cfg, theta, fci_energy=fci)
        out = report.to_dict()
    else:
        report = train_punn(ints, theta, cfg)
        out = report.to_dict()
        if fci is not None:
            out["fci_energy"] = fci
            out["error"] = report.energy - fci
    out["E_puccd"] = vqe.energy
    return out, report.trace_csv()


def _emit(payload: dict, args: argparse.Namespace) -> None:
    text = json.dumps(payload, indent=2)
    if args.out is None:
        print(text)
        return
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(text + "\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        trace = None
        if args.command == "inspect":
            body = cmd_inspect(args)
        elif args.command == "vqe":
            body = cmd_vqe(args)
        else:
            body, trace = cmd_train(args)
    except UsageError as exc:
        print(f"punn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"punn: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FCIDUMPError as exc:
        print(f"punn: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DegenerateEstimateError, FloatingPointError, ArithmeticError) as exc:
        print(f"punn: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"punn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    payload = {"format_version": FORMAT_VERSION, "command": args.command,
               "run_config": _run_config(args), **body}
    _emit(payload, args)
    if trace is not None:
        path = args.trace or (args.out.with_suffix(".csv") if args.out is not None else None)
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(trace)
    if body.get("warning"):
        print(f"punn: {body['warning']}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
