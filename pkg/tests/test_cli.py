import json
import subprocess
import sys

import numpy as np
import pytest

from punn.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_PARSE, EXIT_USAGE, main
from punn.integrals import IntegralSet, write_fcidump


@pytest.fixture
def toy_file(tmp_path):
    path = tmp_path / "toy.fcidump"
    write_fcidump(IntegralSet(1, 1, 1, 0.7, np.array([[-1.0]]), np.full((1, 1, 1, 1), 0.5)), path)
    return path


@pytest.fixture
def diagonal_file(tmp_path):
    g = np.zeros((2, 2, 2, 2))
    g[0, 0, 0, 0], g[1, 1, 1, 1] = 0.6, 0.5
    g[0, 0, 1, 1] = g[1, 1, 0, 0] = 0.3
    path = tmp_path / "diag.fcidump"
    write_fcidump(IntegralSet(2, 1, 1, 0.0, np.diag([-1.0, 0.5]), g), path)
    return path


def run(argv, tmp_path):
    out = tmp_path / "out.json"
    code = main([*argv, "--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_inspect_fixture(tmp_path, h4_sidecar):
    code, data = run(["inspect", "--fcidump", "h4_chain_1.0"], tmp_path)
    assert code == EXIT_OK
    assert data["format_version"] == 1
    assert data["command"] == "inspect"
    assert data["run_config"]["fcidump"] == "h4_chain_1.0"
    assert data["fci_energy"] == pytest.approx(h4_sidecar["fci_energy"], abs=1e-8)
    assert data["fci_energy"] <= data["doci_energy"] <= data["hf_energy"]


def test_inspect_toy_file(tmp_path, toy_file):
    code, data = run(["inspect", "--fcidump", str(toy_file)], tmp_path)
    assert code == EXIT_OK
    assert data["hf_energy"] == pytest.approx(-0.8)
    assert data["fci_energy"] == pytest.approx(-0.8)
    assert "sidecar" not in data


def test_missing_file_is_parse_error(tmp_path, capsys):
    code, data = run(["inspect", "--fcidump", str(tmp_path / "missing.fcidump")], tmp_path)
    assert code == EXIT_PARSE
    assert data is None
    assert "no such FCIDUMP file" in capsys.readouterr().err


def test_malformed_file_is_parse_error(tmp_path):
    bad = tmp_path / "bad.fcidump"
    bad.write_text("&FCI NORB=1,NELEC=2,MS2=0\n&END\n 0.5 1 1 x 1\n")
    assert run(["inspect", "--fcidump", str(bad)], tmp_path)[0] == EXIT_PARSE


@pytest.mark.parametrize("argv", [
    [], ["solve", "--fcidump", "x"], ["vqe"], ["vqe", "--fcidump", "h4_chain_1.0", "--mode", "noisy"],
    ["train", "--fcidump", "h4_chain_1.0", "--shots", "0"],
    ["train", "--fcidump", "h4_chain_1.0", "--circuit", "ghz"],
])
def test_usage_errors_exit_one(argv, tmp_path):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == EXIT_USAGE


def test_open_shell_vqe_is_usage_error(tmp_path):
    path = tmp_path / "open.fcidump"
    write_fcidump(IntegralSet(2, 1, 0, 0.0, np.eye(2), np.zeros((2, 2, 2, 2))), path)
    assert run(["vqe", "--fcidump", str(path)], tmp_path)[0] == EXIT_USAGE


def test_vqe_is_idempotent(tmp_path):
    first = run(["vqe", "--fcidump", "h4_chain_1.0"], tmp_path)[1]
    second = run(["vqe", "--fcidump", "h4_chain_1.0"], tmp_path)[1]
    assert first == second
    assert first["energy"] == pytest.approx(-2.1339639389, abs=1e-8)


def test_vqe_without_pair_hopping_keeps_zero_angles(tmp_path, diagonal_file):
    code, data = run(["vqe", "--fcidump", str(diagonal_file)], tmp_path)
    assert code == EXIT_OK
    np.testing.assert_allclose(data["theta"], 0.0, atol=1e-8)


def test_train_writes_trace(tmp_path, h4_sidecar):
    vqe_path = tmp_path / "vqe.json"
    assert main(["vqe", "--fcidump", "h4_chain_1.0", "--out", str(vqe_path)]) == EXIT_OK
    code, data = run(["train", "--fcidump", "h4_chain_1.0", "--theta", str(vqe_path), "--steps", "40",
                      "--seeds", "2"], tmp_path)
    assert code == EXIT_OK
    assert data["fci_energy"] == h4_sidecar["fci_energy"]
    assert data["error"] == pytest.approx(data["E_best"] - data["fci_energy"])
    assert data["E_best"] < data["E_puccd"]
    rows = (tmp_path / "out.csv").read_text().strip().splitlines()
    assert len(rows) == 42


def test_train_rejects_bad_theta_artifact(tmp_path):
    bad = tmp_path / "theta.json"
    bad.write_text("{}")
    assert run(["train", "--fcidump", "h4_chain_1.0", "--theta", str(bad), "--steps", "1"], tmp_path)[0] \
        == EXIT_USAGE


def test_train_hadamard_baseline(tmp_path):
    trace = tmp_path / "steps.csv"
    code, data = run(["train", "--fcidump", "h4_chain_1.0", "--circuit", "hadamard", "--mode", "shots",
                      "--shots", "128", "--seeds", "2", "--exact-phi", "--trace", str(trace)], tmp_path)
    assert code == EXIT_OK
    for name in ("puccd", "hadamard"):
        assert data[name]["final_spread"] >= 0
        assert data[name]["final_error"] > 0
    assert trace.read_text().startswith("step,puccd_mean,puccd_std,hadamard_mean,hadamard_std")


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    from punn import cli
    from punn.neural import DegenerateEstimateError

    def boom(*args, **kwargs):
        raise DegenerateEstimateError("zero norm")

    monkeypatch.setattr(cli, "train_punn", boom)
    assert run(["train", "--fcidump", "h4_chain_1.0", "--steps", "1"], tmp_path)[0] == EXIT_NUMERICAL


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "punn.cli", "inspect", "--fcidump", "h4_chain_1.0"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == EXIT_OK
    assert json.loads(proc.stdout)["n_orb"] == 4
