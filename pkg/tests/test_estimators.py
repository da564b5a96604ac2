import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from punn.data import fixture_path
from punn.estimators import PUNN, PairVQE
from punn.integrals import IntegralSet
from punn.solvers import VqeResult


def test_get_params_and_clone():
    est = PUNN(k=3, seeds=2)
    params = est.get_params()
    assert params["k"] == 3 and params["seeds"] == 2
    assert clone(est).get_params() == params
    assert PairVQE().set_params(shots=64).shots == 64


def test_pair_vqe_fit_predict_score(h4, h4_vqe):
    est = PairVQE().fit(h4)
    assert est.predict() == pytest.approx(h4_vqe.energy, abs=1e-10)
    assert est.score() == -est.predict()
    amps = est.transform()
    assert amps.shape == (16,)
    assert np.linalg.norm(amps) == pytest.approx(1.0)


def test_pair_vqe_accepts_path(h4_vqe):
    est = PairVQE().fit(fixture_path("h4_chain_1.0"))
    assert est.energy_ == pytest.approx(h4_vqe.energy, abs=1e-10)


@pytest.mark.parametrize("cls", [PairVQE, PUNN])
def test_unfitted_raises(cls):
    with pytest.raises(NotFittedError):
        cls().predict()


@pytest.mark.parametrize(("kwargs", "error"), [
    ({"mode": "noisy"}, ValueError), ({"shots": 0}, ValueError), ({"seed": -1}, ValueError),
    ({"shots": 1.5}, TypeError),
])
def test_pair_vqe_parameter_validation(h4, kwargs, error):
    with pytest.raises(error):
        PairVQE(**kwargs).fit(h4)


@pytest.mark.parametrize(("kwargs", "error"), [
    ({"circuit": "ghz"}, ValueError), ({"k": 0}, ValueError), ({"seeds": True}, TypeError),
    ({"max_nn_steps": -2}, ValueError), ({"theta": np.zeros(3)}, ValueError),
    ({"theta": [np.nan] * 4}, ValueError),
])
def test_punn_parameter_validation(h4, kwargs, error):
    with pytest.raises(error):
        PUNN(**{"max_nn_steps": 1, "seeds": 1, **kwargs}).fit(h4)


def test_input_validation():
    with pytest.raises(TypeError):
        PairVQE().fit(np.zeros((4, 4)))
    with pytest.raises(FileNotFoundError):
        PairVQE().fit("/nonexistent/file.fcidump")
    open_shell = IntegralSet(2, 1, 0, 0.0, np.eye(2), np.zeros((2, 2, 2, 2)))
    with pytest.raises(ValueError):
        PairVQE().fit(open_shell)


def test_punn_fit_transform(h4, h4_vqe, h4_sidecar):
    est = PUNN(max_nn_steps=50, seeds=2, theta=h4_vqe).fit(h4)
    assert h4_sidecar["fci_energy"] <= est.predict() < h4_vqe.energy
    np.testing.assert_array_equal(est.theta_, h4_vqe.theta)
    pairs = np.array([[0b1100, 0b1100], [0b0011, 0b0011], [0b1000, 0b1100]])
    amps = est.transform(pairs)
    assert amps.shape == (3,)
    assert amps[2] == 0.0
    full = (pairs[:, 0] << 4) | pairs[:, 1]
    np.testing.assert_array_equal(est.transform(full), amps)
    with pytest.raises(ValueError):
        est.transform([[16, 0]])


def test_punn_runs_vqe_when_theta_missing(h4, h4_vqe):
    est = PUNN(max_nn_steps=0, seeds=1).fit(h4)
    np.testing.assert_allclose(est.theta_, h4_vqe.theta, atol=1e-6)


def test_punn_accepts_array_theta(h4, h4_vqe):
    assert isinstance(h4_vqe, VqeResult)
    est = PUNN(max_nn_steps=0, seeds=1, theta=list(h4_vqe.theta)).fit(h4)
    np.testing.assert_allclose(est.theta_, h4_vqe.theta)
