from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import beta

from diracscat.amplitude import leading_singularity, limit_phase, singular_kernel, xray_cal_v
from diracscat.clifford import kinematics, orthonormal_frame, unit
from diracscat.errors import ConfigError, NumericError
from diracscat.fields import (
    AngularProfile,
    GaussianScalar,
    HomogeneousVector,
    PotentialModel,
    PureGauge,
    VortexVector,
    build_potential_model,
    gauge_from_field,
)
from diracscat.inverse import (
    MIN_DIRECTIONS,
    HomogeneousTerm,
    LimitData,
    PlaneGrid,
    ReconstructionResult,
    SliceData,
    SpaceGrid,
    SymbolSamples,
    centred_axis,
    fit_orders,
    fixed_energy_symbol,
    forward_transform,
    great_circle_transform,
    homogeneous_peel,
    invert_xray_magnetic,
    invert_xray_scalar,
    inverse_transform,
    reconstruct_high_energy,
    recover_R,
    relative_l2,
    sample_symbol,
    sh_basis,
    spectral_divergence,
    split_paths_agree,
    symbol_from_amplitude,
    synthesize_limit,
    theta_lattice,
)
from diracscat.quadrature import fibonacci_sphere

OMEGA = unit(np.array([0.2, 0.1, 1.0]))
AXIS = np.array([0.2, -0.3, 1.0])


def gaussian_xray(y: np.ndarray, omega: np.ndarray, center, amplitude: float = 1.0, width: float = 1.0) -> np.ndarray:
    d = y - np.asarray(center, dtype=float)
    d = d - (d @ omega)[..., None] * omega
    return amplitude * width * math.sqrt(math.pi) * np.exp(-np.sum(d * d, -1) / width**2)


def vortex_xray(y: np.ndarray, omega: np.ndarray, width: float = 1.0) -> np.ndarray:
    # <omega, axis x y> is constant along the line
    d = y - (y @ omega)[..., None] * omega
    return (d @ np.cross(omega, AXIS)) * width * math.sqrt(math.pi) * np.exp(-np.sum(d * d, -1) / width**2)


def slice_data(fn, n_dirs: int = 60, n: int = 64, half_width: float = 8.0, dirs=None) -> SliceData:
    dirs = fibonacci_sphere(n_dirs) if dirs is None else dirs
    grids = tuple(PlaneGrid.build(w, n, half_width) for w in dirs)
    return SliceData(grids, np.array([fn(g.points(), g.omega) for g in grids]))


# ---------------------------------------------------------------- transforms


def test_centred_axis_needs_even_size():
    assert np.allclose(centred_axis(4, 0.5), [-1.0, -0.5, 0.0, 0.5])
    with pytest.raises(ConfigError, match="even"):
        centred_axis(5, 1.0)


def test_plane_transform_of_gaussian():
    g = PlaneGrid.build(OMEGA, 64, 8.0)
    y = g.points()
    f = np.exp(-np.sum(y * y, -1))
    F = forward_transform(f.astype(complex), g.step, (0, 1))
    eta = g.frequencies()
    assert np.abs(F - math.pi * np.exp(-np.sum(eta * eta, -1) / 4)).max() < 1e-12
    assert np.abs(inverse_transform(F, g.step, (0, 1)) - f).max() < 1e-12


def test_plane_grid_frame_and_flip():
    g = PlaneGrid.build(OMEGA, 8, 2.0)
    assert np.abs(g.points() @ OMEGA).max() < 1e-14
    assert np.allclose(g.flipped().omega, -OMEGA)
    assert np.allclose(g.flipped().points(), g.points())
    with pytest.raises(ConfigError, match="orthogonal"):
        PlaneGrid.build(np.array([0.0, 0.0, 1.0]), 8, 2.0, frame=(np.array([1.0, 0, 0]), np.array([0, 0, 1.0])))


# ---------------------------------------------------------------- phase recovery


@pytest.mark.parametrize("amplitude", [0.0, 1.0, 3.0])
def test_recover_R_matches_gaussian_xray(amplitude):
    # amplitude 3 has peak R above pi, so the phase must be unwrapped
    g = PlaneGrid.build(OMEGA, 64, 8.0)
    model = PotentialModel((GaussianScalar(amplitude, 1.0, (0.3, 0.0, 0.0)),), ())
    R = recover_R(synthesize_limit(model, g, 1))
    assert np.abs(R - gaussian_xray(g.points(), OMEGA, (0.3, 0, 0), amplitude)).max() < 1e-10


def test_recover_R_magnetic_branches():
    g = PlaneGrid.build(OMEGA, 64, 8.0)
    model = PotentialModel((), (VortexVector(tuple(AXIS), 1.0),))
    for branch in (1, -1):
        R = recover_R(synthesize_limit(model, g, branch))
        assert np.abs(R - branch * vortex_xray(g.points(), OMEGA)).max() < 1e-10


def test_recover_R_rejects_non_unimodular_data():
    g = PlaneGrid.build(OMEGA, 32, 8.0)
    L = synthesize_limit(PotentialModel((GaussianScalar(1.0, 1.0),), ()), g, 1)
    with pytest.raises(NumericError, match="non-unimodular"):
        recover_R(LimitData(g, 1, 2 * L.scalar, L.projector))


def test_recover_R_detects_wrap_ambiguity():
    g = PlaneGrid.build(np.array([0.0, 0.0, 1.0]), 16, 8.0)
    model = PotentialModel((GaussianScalar(20.0, 0.6, (0.2, 0.1, 0.0)),), ())
    with pytest.raises(NumericError, match="phase wrap ambiguity"):
        recover_R(synthesize_limit(model, g, 1))


def test_limit_data_validation():
    g = PlaneGrid.build(OMEGA, 8, 2.0)
    P = np.eye(4)
    with pytest.raises(ConfigError, match="branch"):
        LimitData(g, 0, np.zeros((8, 8), complex), P)
    with pytest.raises(ConfigError, match="frequency grid"):
        LimitData(g, 1, np.zeros((4, 4), complex), P)


def test_two_splittings_agree():
    model = PotentialModel((GaussianScalar(1.0, 1.0),), (VortexVector(tuple(AXIS), 1.0),))
    assert split_paths_agree(model, PlaneGrid.build(OMEGA, 64, 8.0)) < 1e-12


def test_limit_phase_gauge_invariant():
    model = PotentialModel((GaussianScalar(1.0, 1.0),), (VortexVector(tuple(AXIS), 1.0),))
    gauged = model.with_gauge(PureGauge(3.0, 1.1, (0.4, -0.2, 0.1)))
    y = PlaneGrid.build(OMEGA, 8, 3.0).points().reshape(-1, 3)
    for branch in (1, -1):
        assert np.abs(limit_phase(gauged, OMEGA, branch, y) - limit_phase(model, OMEGA, branch, y)).max() < 1e-10


def test_gauge_constructed_potential_has_same_odd_xray():
    vortex = PotentialModel((), (VortexVector(tuple(AXIS), 1.0),))
    built = PotentialModel((), (gauge_from_field(vortex.B),))
    z = np.array([0.0, 0.0, 1.0])
    y = np.array([[0.5, 0.2, 0.0], [-0.3, 0.7, 0.0]])
    assert np.abs(limit_phase(built, z, 1, y) - limit_phase(vortex, z, 1, y)).max() < 1e-8


# ---------------------------------------------------------------- X-ray inversion


def test_invert_scalar_gaussian():
    space = SpaceGrid(32, 5.0)
    V = invert_xray_scalar(slice_data(lambda y, w: gaussian_xray(y, w, (0.3, 0, 0))), space)
    X = space.points()
    truth = np.exp(-np.sum((X - np.array([0.3, 0, 0])) ** 2, -1))
    assert relative_l2(V, truth) < 0.01


def test_invert_scalar_two_bumps():
    c1, c2 = (0.8, 0.0, 0.3), (-0.6, 0.5, -0.2)
    space = SpaceGrid(32, 5.0)
    data = slice_data(lambda y, w: gaussian_xray(y, w, c1, 1.0, 0.8) - gaussian_xray(y, w, c2, 0.5, 0.7), n_dirs=120)
    V = invert_xray_scalar(data, space)
    X = space.points()
    truth = np.exp(-np.sum((X - c1) ** 2, -1) / 0.64) - 0.5 * np.exp(-np.sum((X - np.array(c2)) ** 2, -1) / 0.49)
    assert relative_l2(V, truth) < 0.03


def test_invert_magnetic_vortex():
    space = SpaceGrid(32, 5.0)
    B = invert_xray_magnetic(slice_data(vortex_xray), space)
    X = space.points().reshape(-1, 3)
    truth = PotentialModel((), (VortexVector(tuple(AXIS), 1.0),)).B(X).reshape(B.shape)
    assert relative_l2(B, truth) < 0.02
    assert spectral_divergence(B, space) < 1e-9


def test_invert_magnetic_zero_data():
    space = SpaceGrid(16, 5.0)
    B = invert_xray_magnetic(slice_data(lambda y, w: np.zeros(y.shape[:-1]), n=32), space)
    assert np.abs(B).max() == 0.0


def test_invert_magnetic_rank_deficiency():
    phis = 2 * math.pi * np.arange(MIN_DIRECTIONS) / MIN_DIRECTIONS
    dirs = np.stack([np.cos(phis), np.sin(phis), np.zeros_like(phis)], axis=-1)
    with pytest.raises(NumericError, match="rank deficiency"):
        invert_xray_magnetic(slice_data(vortex_xray, n=32, dirs=dirs), SpaceGrid(16, 5.0))


def test_insufficient_angular_coverage():
    data = slice_data(lambda y, w: gaussian_xray(y, w, (0, 0, 0)), n_dirs=MIN_DIRECTIONS - 1, n=16)
    with pytest.raises(ConfigError, match="insufficient angular coverage"):
        invert_xray_scalar(data, SpaceGrid(16, 5.0))
    with pytest.raises(ConfigError, match="insufficient angular coverage"):
        reconstruct_high_energy(PotentialModel(), n_directions=10)


def test_slice_data_shape_check():
    g = PlaneGrid.build(OMEGA, 8, 2.0)
    with pytest.raises(ConfigError, match="one data plane"):
        SliceData((g,), np.zeros((2, 8, 8)))


def test_spectral_divergence_of_gradient_field():
    space = SpaceGrid(16, 5.0)
    X = space.points()
    grad = -2 * X * np.exp(-np.sum(X * X, -1))[..., None]
    assert spectral_divergence(grad, space) > 0.1


def test_relative_l2():
    assert relative_l2(np.zeros(3), np.zeros(3)) == 0.0
    assert relative_l2(np.array([1.0, 1.0]), np.array([1.0, 0.0])) == pytest.approx(1.0)


def test_reconstruct_high_energy_end_to_end():
    model = PotentialModel((GaussianScalar(1.0, 1.0),), (VortexVector(tuple(AXIS), 1.0),))
    r = reconstruct_high_energy(model, n_directions=60, plane_n=64, plane_half_width=8.0, space=SpaceGrid(32, 5.0))
    assert r.errors["V_rel_l2"] < 0.02 and r.errors["B_rel_l2"] < 0.02
    assert r.R_e.shape == (60, 64, 64)


def test_reconstruction_result_save_load(tmp_path):
    space = SpaceGrid(4, 1.0)
    V = np.random.default_rng(0).normal(size=(4, 4, 4))
    res = ReconstructionResult(space, V_grid=V, errors={"V_rel_l2": 0.1},
                               homogeneous_terms=[HomogeneousTerm("electric", 1.5, (0.2,) + (0.0,) * 8)])
    paths = res.save(tmp_path)
    assert {p.name for p in paths} == {"reconstruction.json", "reconstruction_V.bin", "reconstruction_V.json"}
    assert np.array_equal(ReconstructionResult.load_array(tmp_path / "reconstruction_V.bin"), V)


# ---------------------------------------------------------------- fixed-energy symbol


def test_zero_potential_symbol_is_scaled_projector():
    kin = kinematics(2.0, 1.0)
    y = np.array([[1.0, 0.5, 0.0], [3.0, -2.0, 0.0]])
    z = np.array([0.0, 0.0, 1.0])
    a = symbol_from_amplitude(PotentialModel(), kin, z, y)
    assert np.abs(a - kin.projector(z)[None] / kin.ratio).max() < 1e-14


def test_theta_lattice():
    thetas, T = theta_lattice(OMEGA, 0.2, 0.9)
    assert np.allclose(np.linalg.norm(thetas, axis=-1), 1.0)
    assert np.linalg.norm(T, axis=-1).max() < 0.9
    e1, e2 = orthonormal_frame(OMEGA)
    assert np.allclose(thetas @ e1, T[:, 0]) and np.allclose(thetas @ e2, T[:, 1])


def test_fixed_energy_symbol_errors():
    from diracscat.amplitude import KernelGrid

    kin = kinematics(2.0, 1.0)
    z = np.array([0.0, 0.0, 1.0])
    thetas, _ = theta_lattice(z, 0.3, 0.5)
    W = np.repeat(z[None], len(thetas), 0)
    grid = KernelGrid(kin.E, kin.m, z, W, thetas, np.zeros((len(thetas), 4, 4), complex), 0.0, 0)
    a = fixed_energy_symbol(grid, z, np.array([[1.0, 0.0, 0.0]]), 0.3)
    assert np.abs(a[0] - kin.projector(z) / kin.ratio).max() < 1e-14
    with pytest.raises(NumericError, match="insufficient theta resolution"):
        fixed_energy_symbol(grid, z, np.array([[20.0, 0.0, 0.0]]), 0.3)
    with pytest.raises(ConfigError, match="no samples"):
        fixed_energy_symbol(grid, unit(np.array([1.0, 0.0, 1.0])), np.array([[0.0, 1.0, 0.0]]), 0.3)


@pytest.mark.slow
def test_kernel_route_symbol_matches_xray():
    m = build_potential_model({"kind": "homogeneous-tail", "rho": 2.0, "angular": 0.05})
    kin = kinematics(2**0.5, 1.0)
    z = np.array([0.0, 0.0, 1.0])
    step = 0.15
    thetas, _ = theta_lattice(z, step, 0.95)
    grid, _ = singular_kernel(np.repeat(z[None], len(thetas), 0), thetas, m, kin, 0, omega0=z)
    e1, e2 = orthonormal_frame(z)
    r = np.array([5, 7, 10, 14, 20.0])
    phi = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    y = (r[:, None, None] * (np.cos(phi)[None, :, None] * e1 + np.sin(phi)[None, :, None] * e2)).reshape(-1, 3)
    Rv = xray_cal_v(m, kin, z, y)
    P = kin.projector(z)
    lead = (
        lambda th: np.array([leading_singularity(m, kin, z, t) for t in th]),
        lambda yy: -1j / kin.ratio * xray_cal_v(m, kin, z, yy)[:, None, None] * P[None],
    )
    a = fixed_energy_symbol(grid, z, y, step, singular=lead)
    rem = a - P / kin.ratio + 1j / kin.ratio * Rv[:, None, None] * P
    rel = np.abs(rem[:, 0, 0]) / np.abs(Rv / kin.ratio * P[0, 0])
    assert rel.max() < 0.15


# ---------------------------------------------------------------- homogeneous peel


@pytest.mark.parametrize("rho", [1.3, 1.5, 2.4])
def test_great_circle_transform_constant_profile(rho):
    one = lambda u: np.ones(u.shape[:-1])  # noqa: E731
    val = great_circle_transform(one, np.array([1.0, 0, 0]), np.array([0, 0, 1.0]), rho)
    assert val[0] == pytest.approx(beta(0.5, (rho - 1) / 2), rel=1e-12)


def test_great_circle_transform_vs_line_quadrature():
    yhat, omega, rho = unit(np.array([1.0, 1.0, 0.0])), np.array([0.0, 0.0, 1.0]), 1.7
    f = lambda u: u[..., 0] ** 2 + 0.3 * u[..., 2] + u[..., 1] * u[..., 2]  # noqa: E731

    def integrand(t: float) -> float:
        x = yhat + t * omega
        r = np.linalg.norm(x)
        return r**-rho * f(x / r)

    ref = quad(integrand, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-12)[0]
    assert great_circle_transform(f, yhat, omega, rho)[0] == pytest.approx(ref, rel=1e-9)
    with pytest.raises(ConfigError, match="exceed 1"):
        great_circle_transform(f, yhat, omega, 1.0)


def test_sh_basis_shape():
    u = fibonacci_sphere(10)
    assert sh_basis(u).shape == (10, 9)


def test_fit_orders_single_and_double():
    r = np.geomspace(4.0, 64.0, 9)
    c = np.array([[0.7], [-0.2]])
    fit = fit_orders(r, c * r**-0.5)
    assert len(fit.orders) == 1 and fit.orders[0] == pytest.approx(-0.5, abs=1e-5)
    assert np.allclose(fit.coefficients[:, 0], c[:, 0], rtol=1e-4)
    fit2 = fit_orders(r, c * r**-0.5 + 0.3 * r**-1.4)
    assert len(fit2.orders) == 2 and fit2.orders[0] == pytest.approx(-0.5, abs=1e-3)


def test_peel_rejects_non_decaying_data():
    kin = kinematics(2.0, 1.0)
    dirs = fibonacci_sphere(4)
    frames = np.array([orthonormal_frame(w) for w in dirs])
    radii = np.geomspace(4.0, 64.0, 5)
    values = np.full((8, 5, 4), 0.1 + 0.0j)
    samples = SymbolSamples(kin, dirs, frames, radii, np.linspace(0, 6, 4), values)
    with pytest.raises(NumericError, match="order separation too small"):
        homogeneous_peel(samples)


def test_peel_one_electric_term():
    kin = kinematics(2.0, 1.0)
    m = build_potential_model({"kind": "homogeneous-tail", "rho": 1.5, "angular": {"0,0": 0.2, "1,1": 0.04}})
    steps = homogeneous_peel(sample_symbol(m, kin), max_terms=1)
    st = steps[0]
    assert st.rho == pytest.approx(1.5, abs=1e-6) and st.magnetic is None
    u = fibonacci_sphere(200)
    truth = m.scalars[0].profile(u)
    assert np.linalg.norm(st.electric.field_term().profile(u) - truth) < 1e-6 * np.linalg.norm(truth)
    assert st.residual_after < 1e-8 * st.residual_before


def test_peel_magnetic_term_reproduces_odd_xray():
    # magnetic profiles are fixed only up to gauge, so compare the odd X-ray data
    kin = kinematics(2.0, 1.0)
    prof = (AngularProfile({(0, 0): 0.1}), AngularProfile({(1, 1): 0.05}), AngularProfile({(2, 0): 0.08}))
    m = PotentialModel((), (HomogeneousVector(prof, 1.6),))
    st = homogeneous_peel(sample_symbol(m, kin), max_terms=1)[0]
    assert st.rho == pytest.approx(1.6, abs=1e-6) and st.electric is None
    found = st.model()
    for om in unit(np.random.default_rng(1).normal(size=(3, 3))):
        e1, e2 = orthonormal_frame(om)
        y = np.array([5 * e1, 7 * e2, 4 * (e1 + e2)])
        odd = lambda mod: 0.5 * (limit_phase(mod, om, 1, y) - limit_phase(mod, om, -1, y))  # noqa: E731
        assert np.abs(odd(found) - odd(m)).max() < 1e-8 * np.abs(odd(m)).max()
