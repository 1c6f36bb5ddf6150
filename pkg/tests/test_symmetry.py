from __future__ import annotations

import numpy as np
import pytest

from diracscat.clifford import ALPHA, BETA, GAMMA, kinematics, unit
from diracscat.errors import ConfigError
from diracscat.fields import GaussianScalar, PotentialModel, PureGauge
from diracscat.symmetry import (
    CASES,
    SuiteEntry,
    check_hypothesis,
    closed_pairs,
    default_models,
    gauge_residual,
    get_case,
    hypothesis_asymmetry,
    image_pairs,
    kernel_grids,
    kernel_residual,
    pointwise_residual,
    run_suite,
    suite_report,
)

KIN = kinematics(2.0, 1.0)
OMEGA = unit(np.array([0.3, -0.2, 1.0]))


@pytest.fixture(scope="module")
def points() -> np.ndarray:
    return np.random.default_rng(3).uniform(-1.5, 1.5, size=(6, 3))


def test_case_matrices_are_unitary():
    for case in CASES.values():
        M = case.matrix
        assert np.allclose(M @ M.conj().T, np.eye(4))


def test_case_matrix_products():
    assert np.allclose(CASES["time-reversal"].matrix, ALPHA[0] @ ALPHA[2])
    assert np.allclose(CASES["CT"].matrix, GAMMA)
    assert np.allclose(CASES["CTP"].matrix, GAMMA @ BETA)


def test_get_case_unknown():
    assert get_case("parity").name == "parity"
    with pytest.raises(ConfigError, match="unknown symmetry case"):
        get_case("mirror")


def test_hypotheses_of_default_models(points):
    for name, (good, bad) in default_models().items():
        case = CASES[name]
        assert hypothesis_asymmetry(case, good, points) < 1e-12
        assert check_hypothesis(case, good, points) < 1e-12
        assert hypothesis_asymmetry(case, bad, points) > 1e-3
        with pytest.raises(ConfigError, match="precondition violated"):
            check_hypothesis(case, bad, points)


@pytest.mark.parametrize("name", sorted(CASES))
def test_pointwise_identity_holds(name, points):
    good, _ = default_models()[name]
    r = pointwise_residual(name, good, KIN, points, OMEGA, N=1)
    assert r["max"] < 1e-7


@pytest.mark.parametrize("name", sorted(CASES))
def test_pointwise_identity_fails_without_hypothesis(name, points):
    _, bad = default_models()[name]
    with pytest.raises(ConfigError):
        pointwise_residual(name, bad, KIN, points, OMEGA, N=1)
    r = pointwise_residual(name, bad, KIN, points, OMEGA, N=1, enforce=False)
    assert r["max"] > 1e-3


@pytest.mark.parametrize("amplitude", [1.0, 10.0])
def test_gauge_residual(amplitude, points):
    model = default_models()["parity"][0]
    psi = PureGauge(amplitude, 1.2, (0.3, -0.1, 0.2))
    theta = unit(OMEGA + np.array([0.2, 0.0, 0.0]))
    r = gauge_residual(model, psi, KIN, points, OMEGA, theta, N=1)
    assert r["max"] < 1e-6 * amplitude


def test_image_and_closed_pairs():
    w = unit(np.array([[0.1, 0.0, 1.0]]))
    t = unit(np.array([[0.0, 0.2, 1.0]]))
    w2, t2 = image_pairs(CASES["time-reversal"], w, t)
    assert np.allclose(w2, -t) and np.allclose(t2, -w)
    w2, t2 = image_pairs(CASES["parity"], w, t)
    assert np.allclose(w2, -w) and np.allclose(t2, -t)
    W, T = closed_pairs(CASES["TP"], w, t)
    assert W.shape == (2, 3) and np.allclose(W[1], t[0]) and np.allclose(T[1], w[0])


@pytest.fixture(scope="module")
def parity_grids():
    case = CASES["parity"]
    good, bad = default_models()["parity"]
    ws = unit(np.array([[0.1, 0.05, 1.0]]))
    ts = unit(np.array([[0.3, -0.1, 1.0]]))
    omega0 = np.array([0.0, 0.0, 1.0])
    return kernel_grids(case, good, KIN, ws, ts, omega0), kernel_grids(case, bad, KIN, ws, ts, omega0)


def test_kernel_identity_parity(parity_grids):
    (g, gf), (gb, gbf) = parity_grids
    assert gf is None
    assert kernel_residual("parity", g, gf) < 1e-5
    assert kernel_residual("parity", gb, gbf) > 1e-5


def test_kernel_residual_requires_flipped_grid(parity_grids):
    (g, _), _ = parity_grids
    with pytest.raises(ConfigError, match="-E"):
        kernel_residual("charge-conjugation", g, None)


def test_kernel_residual_requires_closed_sample_set(parity_grids):
    (g, _), _ = parity_grids
    with pytest.raises(ConfigError, match="not closed"):
        kernel_residual("TP", g)


def test_suite_entry_logic():
    assert SuiteEntry("x", "pointwise", True, 1e-9, 1e-7).passed
    assert not SuiteEntry("x", "pointwise", True, 1e-3, 1e-7).passed
    assert SuiteEntry("x", "pointwise", False, 1e-1, 1e-2, expect_pass=False).passed
    assert not SuiteEntry("x", "pointwise", False, 1e-9, 1e-2, expect_pass=False).passed
    d = SuiteEntry("x", "kernel", True, 0.0, 1.0).to_dict()
    assert d["pass"] and not d["control"]


def test_pointwise_suite():
    entries = run_suite(n_points=8, kernels=False)
    report = suite_report(entries)
    assert report["all_pass"]
    assert sum(e.expect_pass for e in entries) == 8
    assert sum(not e.expect_pass for e in entries) == 6


def test_scalar_only_model_is_parity_symmetric(points):
    model = PotentialModel((GaussianScalar(0.4, 0.8),), ())
    assert pointwise_residual("parity", model, KIN, points, OMEGA, N=1)["max"] < 1e-7
