"""Kernel-level forward machinery for the scattering matrix.

The singular part of the scattering kernel is a plane integral over
``Pi_{omega0}`` (the plane orthogonal to the chart centre) of the product of
two approximate amplitudes. After the constant term that produces the delta
function is removed, the remaining integrand decays only like
``|y|^{1 - rho}``; its Fourier integral is evaluated with a smooth erfc
window whose radius scales with the inverse oscillation frequency.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
from scipy.special import erfc

from .clifford import (
    ALPHA,
    BETA,
    Kinematics,
    alpha_dot,
    dagger,
    kinematics,
    projector_infinite,
    unit,
)
from .eikonal import TransportExpansion
from .errors import ConfigError, NumericError
from .fields import PotentialModel
from .io import complex_columns, join_complex, read_csv, read_json, split_complex, write_csv, write_json
from .quadrature import DEFAULT_RULE, PolarRule, RayRule, gauss_legendre, plane_points, smooth_step

DELTA = 0.3
DELTA_PRIME = 0.5
# window radius is WINDOW_PHASE / k; 32 radians gave ~1e-8 on exact Hankel transforms
WINDOW_PHASE = 32.0
WINDOW_CHECK_FACTOR = 1.25
# smallest taper centre for long-range models (keeps the window beyond the smooth cap)
MIN_WINDOW_RADIUS = 8.0


# ---------------------------------------------------------------- chart


def chart_weight(c: np.ndarray | float, delta: float = DELTA, delta_prime: float = DELTA_PRIME) -> np.ndarray:
    """Smooth step in ``c = <omega, omega0>``: 0 below ``delta``, 1 above ``delta_prime``."""
    if not 0 < delta < delta_prime < 1:
        raise ConfigError("chart parameters need 0 < delta < delta' < 1")
    return smooth_step((np.asarray(c, dtype=float) - delta) / (delta_prime - delta))


def chart_cutoff(
    omega: np.ndarray, theta: np.ndarray, omega0: np.ndarray, delta: float = DELTA, delta_prime: float = DELTA_PRIME
) -> tuple[float, int]:
    """``(Psi, chart sign)`` for a pair in the chart around ``omega0``.

    Raises ``ConfigError('chart violation')`` unless both directions lie on
    the same side with ``|<., omega0>| > delta``.
    """
    co, ct = float(np.dot(omega, omega0)), float(np.dot(theta, omega0))
    sgn = 1 if co > 0 else -1
    if not (sgn * co > delta and sgn * ct > delta):
        raise ConfigError(f"chart violation: <omega,omega0>={co:.3f}, <theta,omega0>={ct:.3f}, delta={delta}")
    psi = float(chart_weight(sgn * co, delta, delta_prime) * chart_weight(sgn * ct, delta, delta_prime))
    return psi, sgn


# ---------------------------------------------------------------- plane rule


@dataclass(frozen=True)
class PlaneQuadrature:
    """Windowed polar rule on the plane orthogonal to ``omega0``.

    ``taper = 0`` means a hard disc of the given radius (compactly supported
    integrands); otherwise the weights carry ``erfc((|y| - radius) / taper) / 2``
    and the disc extends to ``radius + 6 taper``.
    """

    omega0: np.ndarray
    radius: float
    taper: float = 0.0
    frequency: float | None = None
    rule: PolarRule = PolarRule()
    points: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        om = unit(np.asarray(self.omega0, dtype=float))
        object.__setattr__(self, "omega0", om)
        if not self.radius > 0 or self.taper < 0:
            raise ConfigError("plane radius must be positive and taper nonnegative")
        r, phi, w = self.rule.nodes(self.extent, self.frequency)
        if self.taper > 0:
            w = w * 0.5 * erfc((r - self.radius) / self.taper)
        pts = plane_points(om, r, phi)
        # remove the rounding component along omega0
        pts = pts - np.outer(pts @ om, om)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def extent(self) -> float:
        return self.radius + 6.0 * self.taper

    def integrate(self, values: np.ndarray, frequency_vector: np.ndarray | None = None) -> np.ndarray:
        """``sum w(y) exp(i <y, q>) values(y)`` over the nodes; values of shape (M, ...)."""
        w = self.weights
        if frequency_vector is not None:
            w = w * np.exp(1j * (self.points @ np.asarray(frequency_vector, dtype=float)))
        return np.tensordot(w, values, axes=(0, 0))

    def metadata(self) -> dict[str, Any]:
        return {
            "omega0": self.omega0.tolist(),
            "radius": self.radius,
            "taper": self.taper,
            "frequency": self.frequency,
            "nodes": int(self.weights.size),
            "r0": self.rule.r0,
        }


def plane_quadrature(
    model: PotentialModel,
    omega0: np.ndarray,
    frequency: float,
    cos_min: float = 1.0,
    window_phase: float = WINDOW_PHASE,
    radius: float | None = None,
    rule: PolarRule = PolarRule(),
) -> PlaneQuadrature:
    """Plane rule adapted to the model range and the oscillation frequency.

    Compact models use a hard disc reaching past every ray that meets the
    support (``reach / cos_min``). Long-range models use the erfc window of
    radius ``window_phase / frequency``; an explicit ``radius`` overrides both.
    """
    reach = model.reach
    if radius is not None:
        taper = 0.0 if math.isfinite(reach) else radius / 4.0
        return PlaneQuadrature(omega0, radius, taper, frequency or None, rule)
    if math.isfinite(reach):
        return PlaneQuadrature(omega0, max(reach, 1e-3) / max(cos_min, 1e-3), 0.0, frequency or None, rule)
    if not frequency > 0:
        raise ConfigError("zero oscillation frequency with a long-range model needs an explicit radius")
    Y0 = max(window_phase / frequency, MIN_WINDOW_RADIUS)
    return PlaneQuadrature(omega0, Y0, Y0 / 4.0, frequency, rule)


# ---------------------------------------------------------------- integrand


def _check_pair(exp_plus: TransportExpansion, exp_minus: TransportExpansion) -> None:
    if exp_plus.kin != exp_minus.kin or exp_plus.sign != 1 or exp_minus.sign != -1 or exp_plus.N != exp_minus.N:
        raise ConfigError("kinematics mismatch: need (+, -) expansions at the same energy and order")


def delta_integrand(kin: Kinematics, omega: np.ndarray, theta: np.ndarray, omega0: np.ndarray) -> np.ndarray:
    """The constant ``sgn(E) P_omega (alpha.omega0) P_theta`` that produces the delta part."""
    return kin.sign * kin.projector(omega) @ alpha_dot(omega0) @ kin.projector(theta)


def h_integrand(
    exp_plus: TransportExpansion,
    exp_minus: TransportExpansion,
    omega0: np.ndarray,
    y: np.ndarray,
    subtracted: bool = False,
) -> np.ndarray:
    """``sgn(E) a_+(y; omega)^* (alpha.omega0) a_-(y; theta)``; shape (M, 4, 4).

    With ``subtracted=True`` the delta-producing constant is removed.
    """
    _check_pair(exp_plus, exp_minus)
    y = np.atleast_2d(np.asarray(y, dtype=float))
    ap = exp_plus.amplitude(y)
    am = exp_minus.amplitude(y)
    h = exp_plus.kin.sign * dagger(ap) @ alpha_dot(omega0) @ am
    if subtracted:
        h = h - delta_integrand(exp_plus.kin, exp_plus.omega, exp_minus.omega, omega0)
    return h


# ---------------------------------------------------------------- kernels


@dataclass(frozen=True)
class DeltaPart:
    """The delta-function part of the kernel: ``(S_00 f)(omega) = P_omega(E) f(omega)``.

    The full scattering matrix is modelled as this identity part plus the
    regular kernel ``g``; the identity is kept symbolic.
    """

    kin: Kinematics
    chart_center: np.ndarray

    def apply(self, omegas: np.ndarray, f_values: np.ndarray) -> np.ndarray:
        return np.einsum("pij,pj->pi", self.kin.projector(np.atleast_2d(omegas)), f_values)

    def describe(self) -> str:
        return "S(E) = I + G + R; the identity is the delta part carried symbolically"


@dataclass
class KernelEvaluator:
    """Evaluates ``g_N(omega, theta; E)`` for pairs in one chart around ``omega0``.

    Phase values of the outgoing amplitude are cached per plane rule so that
    many incoming directions share them when the rule does not change.
    """

    model: PotentialModel
    kin: Kinematics
    omega0: np.ndarray
    N: int = 0
    delta: float = DELTA
    delta_prime: float = DELTA_PRIME
    window_phase: float = WINDOW_PHASE
    radius: float | None = None
    rule: PolarRule = field(default_factory=PolarRule)
    ray_rule: RayRule = DEFAULT_RULE
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self) -> None:
        self.omega0 = unit(np.asarray(self.omega0, dtype=float))

    def expansion(self, direction: np.ndarray, sign: int) -> TransportExpansion:
        return TransportExpansion(self.model, direction, self.kin, sign, self.N, self.ray_rule)

    def frequency(self, omega: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """The in-plane frequency vector ``nu (theta - omega)`` projected on ``Pi_omega0``."""
        q = self.kin.nu * (np.asarray(theta, dtype=float) - np.asarray(omega, dtype=float))
        return q - np.dot(q, self.omega0) * self.omega0

    def plane(self, omega: np.ndarray, theta: np.ndarray, window_phase: float | None = None) -> PlaneQuadrature:
        q = self.frequency(omega, theta)
        cos_min = min(abs(float(np.dot(omega, self.omega0))), abs(float(np.dot(theta, self.omega0))))
        return plane_quadrature(
            self.model,
            self.omega0,
            float(np.linalg.norm(q)),
            cos_min,
            window_phase or self.window_phase,
            self.radius,
            self.rule,
        )

    def _phase_plus(self, omega: np.ndarray, plane: PlaneQuadrature) -> np.ndarray:
        key = (tuple(np.round(omega, 15)), plane.radius, plane.taper, plane.frequency)
        if key not in self._cache:
            if len(self._cache) > 8:
                self._cache.clear()
            self._cache[key] = self.expansion(omega, 1).phase(plane.points)
        return self._cache[key]

    def h_int(self, omega: np.ndarray, theta: np.ndarray, y: np.ndarray) -> np.ndarray:
        return h_integrand(self.expansion(omega, 1), self.expansion(theta, -1), self.omega0, y, subtracted=True)

    def kernel(
        self, omega: np.ndarray, theta: np.ndarray, check: bool = False, check_tol: float = 1e-3
    ) -> np.ndarray:
        """``g_N(omega, theta)``, a 4x4 matrix.

        With ``check`` the window is enlarged by ``WINDOW_CHECK_FACTOR`` and the
        two results must agree to ``check_tol`` relative.
        """
        omega, theta = unit(omega), unit(theta)
        psi, chart_sign = chart_cutoff(omega, theta, self.omega0, self.delta, self.delta_prime)
        g = self._kernel_on(omega, theta, self.plane(omega, theta))
        if check and not math.isfinite(self.model.reach):
            g2 = self._kernel_on(omega, theta, self.plane(omega, theta, self.window_phase * WINDOW_CHECK_FACTOR))
            scale = max(np.abs(g).max(), 1e-300)
            if np.abs(g2 - g).max() > check_tol * scale:
                raise NumericError(
                    f"insufficient oscillation order: window self-check differs by {np.abs(g2 - g).max() / scale:.2e}"
                )
        kin = self.kin
        return chart_sign * psi * (2 * np.pi) ** -2 * kin.upsilon**2 * g

    def _kernel_on(self, omega: np.ndarray, theta: np.ndarray, plane: PlaneQuadrature) -> np.ndarray:
        q = self.kin.nu * (theta - omega)
        if self.N == 0:
            # a_0 = exp(i Phi) P, so the subtracted integrand is scalar times a constant matrix
            phi_p = self._phase_plus(omega, plane)
            phi_m = self.expansion(theta, -1).phase(plane.points)
            s = np.expm1(1j * (phi_m - phi_p))
            return plane.integrate(s, q) * delta_integrand(self.kin, omega, theta, self.omega0)
        return plane.integrate(self.h_int(omega, theta, plane.points), q)

    def kernels(
        self, omegas: np.ndarray, thetas: np.ndarray, jobs: int = 1, check: bool = False
    ) -> np.ndarray:
        """Kernels for paired rows of ``omegas`` and ``thetas``; shape (n, 4, 4)."""
        omegas, thetas = np.atleast_2d(omegas), np.atleast_2d(thetas)
        if omegas.shape != thetas.shape:
            raise ConfigError("omega and theta samples must pair up")
        pairs = list(zip(omegas, thetas))
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as ex:
                out = list(ex.map(lambda p: self.kernel(p[0], p[1], check), pairs))
        else:
            out = [self.kernel(o, t, check) for o, t in pairs]
        return np.array(out).reshape(-1, 4, 4)


@dataclass(frozen=True)
class KernelGrid:
    """Sampled regular kernel ``g_N`` on direction pairs inside one chart."""

    E: float
    m: float
    chart_center: np.ndarray
    omegas: np.ndarray
    thetas: np.ndarray
    samples: np.ndarray
    delta: float = DELTA
    N: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        w0 = unit(np.asarray(self.chart_center, dtype=float))
        object.__setattr__(self, "chart_center", w0)
        co, ct = np.atleast_2d(self.omegas) @ w0, np.atleast_2d(self.thetas) @ w0
        ok = ((co > self.delta) & (ct > self.delta)) | ((co < -self.delta) & (ct < -self.delta))
        if not np.all(ok):
            raise ConfigError("chart violation: grid contains pairs outside the chart")

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    def lookup(self, omega: np.ndarray, theta: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        d = np.linalg.norm(self.omegas - omega, axis=1) + np.linalg.norm(self.thetas - theta, axis=1)
        i = int(np.argmin(d))
        if d[i] > tol:
            raise KeyError("pair not sampled")
        return self.samples[i]

    def header(self) -> dict[str, Any]:
        return {
            "E": self.E,
            "m": self.m,
            "N": self.N,
            "delta": self.delta,
            "omega0": self.chart_center.tolist(),
            "quadrature": self.meta,
        }

    def save(self, csv_path: str | Path, json_path: str | Path | None = None) -> None:
        cols = ["omega_x", "omega_y", "omega_z", "theta_x", "theta_y", "theta_z"] + complex_columns("g", (4, 4))
        rows = np.hstack([self.omegas, self.thetas, split_complex(self.samples)])
        write_csv(csv_path, cols, rows)
        write_json(json_path or Path(csv_path).with_suffix(".json"), self.header())

    @classmethod
    def load(cls, csv_path: str | Path, json_path: str | Path | None = None) -> "KernelGrid":
        head = read_json(json_path or Path(csv_path).with_suffix(".json"))
        _, data = read_csv(csv_path)
        return cls(
            E=head["E"],
            m=head["m"],
            chart_center=np.array(head["omega0"]),
            omegas=data[:, 0:3],
            thetas=data[:, 3:6],
            samples=join_complex(data[:, 6:], (4, 4)),
            delta=head["delta"],
            N=head["N"],
            meta=head.get("quadrature", {}),
        )


def singular_kernel(
    omegas: np.ndarray,
    thetas: np.ndarray,
    model: PotentialModel,
    kin: Kinematics,
    N: int = 0,
    omega0: np.ndarray | None = None,
    delta: float = DELTA,
    jobs: int = 1,
    check: bool = False,
    **options: Any,
) -> tuple[KernelGrid, DeltaPart]:
    """Regular kernel samples on paired directions plus the symbolic delta part.

    ``omega0`` defaults to the normalized mean of all sampled directions.
    Coincident pairs are rejected since ``g`` may be singular there.
    """
    omegas, thetas = unit(np.atleast_2d(omegas)), unit(np.atleast_2d(thetas))
    if np.any(np.linalg.norm(omegas - thetas, axis=1) < 1e-12):
        raise ConfigError("singular_kernel samples need omega != theta")
    if omega0 is None:
        omega0 = unit(np.vstack([omegas, thetas]).mean(axis=0))
    ev = KernelEvaluator(model, kin, omega0, N=N, delta=delta, **options)
    samples = ev.kernels(omegas, thetas, jobs=jobs, check=check)
    meta = {"window_phase": ev.window_phase, "radius": ev.radius, "rule": vars(ev.rule)}
    grid = KernelGrid(kin.E, kin.m, ev.omega0, omegas, thetas, samples, delta, N, meta)
    return grid, DeltaPart(kin, ev.omega0)


# ---------------------------------------------------------------- leading term


def xray_cal_v(model: PotentialModel, kin: Kinematics, omega: np.ndarray, y: np.ndarray, rule: RayRule = DEFAULT_RULE) -> np.ndarray:
    """Full-line integral of ``(|E|/nu) V + sgn(E) <omega, A>`` along ``y + t omega``."""
    omega = unit(omega)
    y = np.atleast_2d(y)
    out = kin.ratio * (model.ray_scalar(y, omega, rule, grad=False)[0] + model.ray_scalar(y, -omega, rule, grad=False)[0])
    if model.vectors:
        a = model.ray_vector(y, omega, rule, grad=False)[0] + model.ray_vector(y, -omega, rule, grad=False)[0]
        out = out + kin.sign * (a @ omega)
    return out


def fourier_cal_v(
    model: PotentialModel,
    kin: Kinematics,
    omega: np.ndarray,
    xi: np.ndarray,
    window_phase: float = WINDOW_PHASE,
    rule: PolarRule = PolarRule(),
) -> complex:
    """Normalized 3D Fourier transform of the eikonal source at ``xi`` orthogonal to ``omega``.

    Evaluated by the slice identity as a windowed plane integral of its X-ray transform.
    """
    omega = unit(omega)
    xi = np.asarray(xi, dtype=float)
    if abs(np.dot(xi, omega)) > 1e-10 * max(1.0, np.linalg.norm(xi)):
        raise ConfigError("frequency must lie in the plane orthogonal to omega")
    plane = plane_quadrature(model, omega, float(np.linalg.norm(xi)), 1.0, window_phase, None, rule)
    return complex((2 * np.pi) ** -1.5 * plane.integrate(xray_cal_v(model, kin, omega, plane.points), -xi))


def leading_singularity(
    model: PotentialModel,
    kin: Kinematics,
    omega: np.ndarray,
    theta: np.ndarray,
    window_phase: float = WINDOW_PHASE,
    rule: PolarRule = PolarRule(),
) -> np.ndarray:
    """``-i (2 pi)^{-1/2} upsilon^2 (nu/|E|) F[cal V](-nu theta~) P_omega`` with ``theta~`` the tangential part."""
    omega, theta = unit(omega), unit(theta)
    tt = theta - np.dot(theta, omega) * omega
    if np.linalg.norm(tt) < 1e-12 or np.dot(theta, omega) <= 0:
        raise ConfigError("leading singularity needs theta != omega in the forward hemisphere")
    F = fourier_cal_v(model, kin, omega, -kin.nu * tt, window_phase, rule)
    return -1j * (2 * np.pi) ** -0.5 * kin.upsilon**2 / kin.ratio * F * kin.projector(omega)


# ---------------------------------------------------------------- free trace


def sphere_rule(n: int = 24) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre in ``cos(polar angle)`` times trapezoid in azimuth; exact for degree < 2n."""
    x, w = gauss_legendre(n)
    phi = 2 * np.pi * np.arange(2 * n) / (2 * n)
    ct, ph = np.meshgrid(x, phi, indexing="ij")
    st = np.sqrt(1 - ct**2)
    dirs = np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=-1).reshape(-1, 3)
    weights = (w[:, None] * np.full(2 * n, np.pi / n)).ravel()
    return dirs, weights


def psi0(kin: Kinematics, f_values: np.ndarray, rule: tuple[np.ndarray, np.ndarray], x: np.ndarray) -> np.ndarray:
    """Averaged free solution ``int_{S^2} exp(i nu <omega, x>) P_omega(E) f(omega) d omega``; shape (P, 4)."""
    dirs, w = rule
    x = np.atleast_2d(np.asarray(x, dtype=float))
    pf = np.einsum("nij,nj->ni", kin.projector(dirs), f_values)
    return (np.exp(1j * kin.nu * (x @ dirs.T)) * w) @ pf


def gamma0_adjoint(
    kin: Kinematics, f_values: np.ndarray, rule: tuple[np.ndarray, np.ndarray], x: np.ndarray
) -> np.ndarray:
    """``Gamma_0(E)^* f`` at points ``x``; shape (P, 4)."""
    return (2 * np.pi) ** -1.5 * kin.upsilon * psi0(kin, f_values, rule, x)


def free_trace(kin: Kinematics, f_values: np.ndarray, rule: tuple[np.ndarray, np.ndarray], x: np.ndarray) -> np.ndarray:
    """Alias of :func:`psi0`, the free trace of a density on the sphere."""
    return psi0(kin, f_values, rule, x)


def gamma0(
    kin: Kinematics,
    g: Callable[[np.ndarray], np.ndarray],
    omegas: np.ndarray,
    half_width: float = 6.0,
    nodes: int = 40,
) -> np.ndarray:
    """``Gamma_0(E) g`` at directions ``omegas`` for a spinor field decaying inside the cube; shape (n, 4)."""
    t, w = gauss_legendre(nodes)
    t, w = half_width * t, half_width * w
    X = np.stack(np.meshgrid(t, t, t, indexing="ij"), axis=-1).reshape(-1, 3)
    W = (w[:, None, None] * w[None, :, None] * w[None, None, :]).ravel()
    gv = g(X)
    omegas = np.atleast_2d(omegas)
    ft = (np.exp(-1j * kin.nu * (omegas @ X.T)) * W) @ gv
    return (2 * np.pi) ** -1.5 * kin.upsilon * np.einsum("nij,nj->ni", kin.projector(omegas), ft)


def free_residual(
    kin: Kinematics, f_values: np.ndarray, rule: tuple[np.ndarray, np.ndarray], x: np.ndarray, h: float = 1e-3
) -> np.ndarray:
    """``|(H_0 - E) psi_0|`` at points ``x`` with fourth-order differences; shape (P,)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = (kin.m * (BETA @ psi0(kin, f_values, rule, x).T)).T - kin.E * psi0(kin, f_values, rule, x)
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        d = (
            -psi0(kin, f_values, rule, x + 2 * e)
            + 8 * psi0(kin, f_values, rule, x + e)
            - 8 * psi0(kin, f_values, rule, x - e)
            + psi0(kin, f_values, rule, x - 2 * e)
        ) / (12 * h)
        out = out - 1j * (ALPHA[k] @ d.T).T
    return np.linalg.norm(out, axis=-1)


def delta_pairing(
    kin: Kinematics,
    f: Callable[[np.ndarray], np.ndarray],
    omega: np.ndarray,
    regulator: float,
    radial_nodes: int = 64,
    angular_nodes: int = 64,
) -> np.ndarray:
    """Apply the delta-producing constant integrand to a density ``f`` at ``omega``.

    The plane integral is regularized by ``exp(-|y|^2 / (2 a^2))`` whose
    transform is analytic; the sphere integral uses a polar rule around
    ``omega``. As ``a`` grows the result tends to ``P_omega(E) f(omega)``.
    """
    omega = unit(omega)
    a = float(regulator)
    # the regularized kernel has width ~ 1/(a nu); integrate a few widths
    zmax = min(12.0 / (a * kin.nu), 0.95)
    x, w = gauss_legendre(radial_nodes)
    r = 0.5 * zmax * (x + 1)
    wr = 0.5 * zmax * w * r
    phi = 2 * np.pi * np.arange(angular_nodes) / angular_nodes
    e1, e2 = _frame(omega)
    R, PH = np.meshgrid(r, phi, indexing="ij")
    zeta = R.ravel()[:, None] * (np.cos(PH).ravel()[:, None] * e1 + np.sin(PH).ravel()[:, None] * e2)
    nz = np.sqrt(1 - np.sum(zeta**2, axis=1))
    thetas = zeta + nz[:, None] * omega
    wz = np.repeat(wr, angular_nodes) * (2 * np.pi / angular_nodes) / nz
    ft = 2 * np.pi * a * a * np.exp(-0.5 * (a * kin.nu) ** 2 * np.sum(zeta**2, axis=1))
    mats = kin.sign * kin.projector(omega) @ alpha_dot(omega) @ kin.projector(thetas)
    vals = np.einsum("nij,nj->ni", mats, f(thetas))
    return (2 * np.pi) ** -2 * kin.upsilon**2 * np.sum((wz * ft)[:, None] * vals, axis=0)


def _frame(omega: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    from .clifford import orthonormal_frame

    return orthonormal_frame(omega)


# ---------------------------------------------------------------- cross-section


@dataclass(frozen=True)
class CrossSection:
    """Total cross-section from the forward kernel and, optionally, by direct integration."""

    sigma: float
    direct: float | None
    optical_residual: float | None


def _diagonal_combination(ev: KernelEvaluator, theta: np.ndarray, radius: float | None) -> np.ndarray:
    """``g(theta, theta) + g(theta, theta)^*`` using the absolutely convergent real part."""
    model, kin = ev.model, ev.kin
    plane = plane_quadrature(model, theta, 0.0, 1.0, radius=radius or (None if math.isfinite(model.reach) else 50.0), rule=ev.rule)
    if plane.taper > 0:
        # hard disc: the combined integrand decays like |y|^{2 - 2 rho}, no window needed
        plane = PlaneQuadrature(theta, plane.radius, 0.0, None, ev.rule)
    pref = (2 * np.pi) ** -2 * kin.upsilon**2
    if ev.N == 0:
        phi_p = ev.expansion(theta, 1).phase(plane.points)
        phi_m = ev.expansion(theta, -1).phase(plane.points)
        c = plane.integrate(2 * (np.cos(phi_m - phi_p) - 1))
        return pref * c * delta_integrand(kin, theta, theta, theta)
    h = ev.h_int(theta, theta, plane.points)
    I = plane.integrate(h)
    return pref * (I + dagger(I))


def cross_section(
    model: PotentialModel,
    kin: Kinematics,
    theta: np.ndarray,
    u: np.ndarray,
    N: int = 0,
    radius: float | None = None,
    direct: bool = False,
    polar_panels: int = 10,
    polar_nodes: int = 16,
    azimuth_nodes: int = 32,
    **options: Any,
) -> CrossSection:
    """``sigma = -((g + g^*)(theta, theta) u, u)`` for a unit spinor ``u`` with ``P_theta u = u``.

    For long-range models the disc radius is extrapolated from ``radius`` and
    ``2 radius`` using the ``Y^{4 - 2 rho}`` tail law. With ``direct`` the
    integral of ``|g(omega, theta) u|^2`` over the chart is also returned,
    together with the norm of the optical-theorem residual on the range of
    ``P_theta``.
    """
    theta = unit(theta)
    u = np.asarray(u, dtype=complex)
    if abs(np.linalg.norm(u) - 1) > 1e-10:
        raise ConfigError("spinor u must be normalized")
    P = kin.projector(theta)
    if np.linalg.norm(P @ u - u) > 1e-10:
        raise ConfigError("spinor u must lie in the range of P_theta(E)")
    ev = KernelEvaluator(model, kin, theta, N=N, **options)
    if math.isfinite(model.reach):
        comb = _diagonal_combination(ev, theta, radius)
    else:
        rho = model.rho
        if not rho > 2:
            raise ConfigError("forward cross-section needs rho > 2")
        Y = radius or 50.0
        c1, c2 = _diagonal_combination(ev, theta, Y), _diagonal_combination(ev, theta, 2 * Y)
        f = 2.0 ** (4 - 2 * rho)
        comb = (c2 - f * c1) / (1 - f)
    sigma = float(-np.real(np.vdot(u, comb @ u)))
    if not direct:
        return CrossSection(sigma, None, None)
    beta_max = math.acos(ev.delta)
    edges = beta_max * 2.0 ** -np.arange(polar_panels)[::-1]
    edges = np.concatenate([[0.0], edges])
    x, w = gauss_legendre(polar_nodes)
    betas, wb = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        betas.append(0.5 * (b - a) * (x + 1) + a)
        wb.append(0.5 * (b - a) * w)
    beta, wbeta = np.concatenate(betas), np.concatenate(wb)
    phi = 2 * np.pi * np.arange(azimuth_nodes) / azimuth_nodes
    e1, e2 = _frame(theta)
    Bt, Ph = np.meshgrid(beta, phi, indexing="ij")
    omegas = (
        np.cos(Bt).ravel()[:, None] * theta
        + np.sin(Bt).ravel()[:, None] * (np.cos(Ph).ravel()[:, None] * e1 + np.sin(Ph).ravel()[:, None] * e2)
    )
    wts = (wbeta * np.sin(beta))[:, None].repeat(azimuth_nodes, 1).ravel() * (2 * np.pi / azimuth_nodes)
    gs = ev.kernels(omegas, np.broadcast_to(theta, omegas.shape).copy())
    gu = gs @ u
    dsum = float(np.sum(wts * np.sum(np.abs(gu) ** 2, axis=1)))
    gram = np.einsum("n,nki,nkj->ij", wts, gs.conj(), gs)
    resid = P @ (comb + gram) @ P
    return CrossSection(sigma, dsum, float(np.linalg.norm(resid, 2)))


def eikonal_cross_section(model: PotentialModel, theta: np.ndarray, radius: float | None = None, rule: PolarRule = PolarRule()) -> float:
    """High-energy value ``2 int_{Pi_theta} (1 - cos R) dy`` with ``R`` the X-ray of ``V + <theta, A>``."""
    theta = unit(theta)
    plane = plane_quadrature(model, theta, 0.0, 1.0, radius=radius, rule=rule)
    plane = PlaneQuadrature(theta, plane.radius, 0.0, None, rule)
    R = limit_phase(model, theta, 1, plane.points)
    return float(np.real(plane.integrate(2 * (1 - np.cos(R)))))


# ---------------------------------------------------------------- high energy


def limit_phase(model: PotentialModel, omega: np.ndarray, branch: int, y: np.ndarray, rule: RayRule = DEFAULT_RULE) -> np.ndarray:
    """``R(y, omega; +-inf)``: full-line integral of ``V +- <omega, A>``."""
    if branch not in (1, -1):
        raise ConfigError("branch must be +1 or -1")
    omega = unit(omega)
    y = np.atleast_2d(y)
    out = model.ray_scalar(y, omega, rule, grad=False)[0] + model.ray_scalar(y, -omega, rule, grad=False)[0]
    if model.vectors:
        a = model.ray_vector(y, omega, rule, grad=False)[0] + model.ray_vector(y, -omega, rule, grad=False)[0]
        out = out + branch * (a @ omega)
    return out


def high_energy_kernel_limit(
    model: PotentialModel,
    omega: np.ndarray,
    eta: np.ndarray,
    branch: int,
    window_phase: float = WINDOW_PHASE,
    rule: PolarRule = PolarRule(),
) -> np.ndarray:
    """``(2 pi)^{-2} int exp(-i <y, eta>) (exp(-i R(y, omega)) - 1) dy P_omega(+-inf)``."""
    omega = unit(omega)
    eta = np.asarray(eta, dtype=float)
    if np.linalg.norm(eta) == 0:
        raise ConfigError("eta must be nonzero")
    if abs(np.dot(eta, omega)) > 1e-10 * np.linalg.norm(eta):
        raise ConfigError("eta must be orthogonal to omega")
    plane = plane_quadrature(model, omega, float(np.linalg.norm(eta)), 1.0, window_phase, None, rule)
    R = limit_phase(model, omega, branch, plane.points)
    return (2 * np.pi) ** -2 * plane.integrate(np.expm1(-1j * R), -eta) * projector_infinite(omega, branch)


def scaled_pair(omega: np.ndarray, eta: np.ndarray, nu: float) -> tuple[np.ndarray, np.ndarray]:
    """Unit vectors ``omega(E), theta(E)`` symmetric about ``omega`` with ``nu (omega(E) - theta(E)) = eta``."""
    omega = unit(omega)
    half = np.asarray(eta, dtype=float) / (2 * nu)
    c = math.sqrt(1 - float(np.dot(half, half)))
    return c * omega + half, c * omega - half


@dataclass(frozen=True)
class Convergence:
    energies: tuple[float, ...]
    errors: tuple[float, ...]

    @property
    def monotone(self) -> bool:
        return all(b < a for a, b in zip(self.errors[:-1], self.errors[1:]))


def high_energy_convergence(
    model: PotentialModel,
    omega: np.ndarray,
    eta: np.ndarray,
    branch: int,
    m: float,
    multiples: Sequence[float] = (10.0, 20.0, 40.0),
    **options: Any,
) -> Convergence:
    """Distance of ``upsilon^{-2} g_0`` at ``E = +-k m`` from the high-energy limit."""
    limit = high_energy_kernel_limit(model, omega, eta, branch)
    errs = []
    for k in multiples:
        kin = kinematics(branch * k * m, m)
        w, t = scaled_pair(omega, eta, kin.nu)
        g = KernelEvaluator(model, kin, omega, **options).kernel(w, t)
        errs.append(float(np.abs(g / kin.upsilon**2 - limit).max()))
    return Convergence(tuple(float(branch * k * m) for k in multiples), tuple(errs))


def s0_diagonal_action(
    model: PotentialModel,
    kin: Kinematics,
    omega: np.ndarray,
    f: Callable[[np.ndarray], np.ndarray],
    z_max: float = 48.0,
    zeta_max: float | None = None,
    z_rule: PolarRule = PolarRule(r0=6.0, radial_nodes=24, angular_nodes=48),
    zeta_rule: PolarRule = PolarRule(r0=0.12, radial_nodes=24, angular_nodes=96),
    chunk: int = 256,
) -> np.ndarray:
    """``(S_0 f)(omega) = P_omega f(omega) + int g_0(omega, theta) f(theta) d theta`` with ``omega0 = omega``.

    The incoming direction is parametrized by its tangential part ``zeta``
    and the plane variable is rescaled to ``z = nu y``, so the inner
    ``zeta`` integral is a smooth Fourier integral in ``z`` which decays at the
    rate set by the smoothness of ``f``.
    """
    omega = unit(omega)
    zeta_max = zeta_max or math.sqrt(1 - DELTA**2)
    rz, pz, wz = z_rule.nodes(z_max)
    z = plane_points(omega, rz, pz)
    rt, pt, wt = zeta_rule.nodes(zeta_max)
    zeta = plane_points(omega, rt, pt)
    nz = np.sqrt(1 - np.sum(zeta**2, axis=1))
    thetas = zeta + nz[:, None] * omega
    psi = chart_weight(nz)
    # theta-dependent factor without the phase: Psi M(theta) f(theta) / <theta, omega>
    F = np.einsum("nij,nj->ni", delta_integrand(kin, omega, thetas, omega), f(thetas)) * (psi * wt / nz)[:, None]
    y = z / kin.nu
    phi_p = TransportExpansion(model, omega, kin, 1, 0).phase(y)
    T = np.zeros((len(y), 4), dtype=complex)
    for i in range(0, len(thetas), chunk):
        sl = slice(i, i + chunk)
        phase = np.exp(1j * (z @ zeta[sl].T))  # (Z, n)
        phi_m = np.stack([TransportExpansion(model, t, kin, -1, 0).phase(y) for t in thetas[sl]], axis=1)
        s = np.expm1(1j * (phi_m - phi_p[:, None]))
        T += (phase * s) @ F[sl]
    integral = (2 * np.pi) ** -2 * kin.upsilon**2 / kin.nu**2 * (wz @ T)
    return kin.projector(omega) @ f(omega[None])[0] + integral


def s0_diagonal_limit(
    model: PotentialModel, kin: Kinematics, omega: np.ndarray, f: Callable[[np.ndarray], np.ndarray]
) -> np.ndarray:
    """High-energy limit ``exp(-i R(0, omega)) P_omega f(omega)`` of the diagonal action."""
    omega = unit(omega)
    R = limit_phase(model, omega, kin.sign, np.zeros((1, 3)))[0]
    return np.exp(-1j * R) * kin.projector(omega) @ f(omega[None])[0]
