"""Closed-form electromagnetic potential models, the magnetic gauge built from a
field B, and line (X-ray) transforms.

A model is a finite sum of scalar terms (the electric potential V) and vector
terms (the magnetic potential A). Every term returns values and first
derivatives in closed form; ``B = rot A`` is read off the Jacobian.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from scipy.special import erfc
from scipy.special import gamma as gamma_fn

from .clifford import Kinematics, unit
from .errors import ConfigError
from .quadrature import (
    DEFAULT_RULE,
    RayRule,
    fd_gradient,
    fd_step,
    gauss_legendre,
    ray_integral,
    ray_integral_ball,
    smooth_step,
    smooth_step_deriv,
    smooth_step_deriv2,
)

VectorField = Callable[[np.ndarray], np.ndarray]

_S = 0.5 * math.sqrt(15.0 / math.pi)
_Y00 = 0.5 / math.sqrt(math.pi)
_Y1 = math.sqrt(3.0 / (4.0 * math.pi))
_Y20 = 0.25 * math.sqrt(5.0 / math.pi)
_Y22 = 0.25 * math.sqrt(15.0 / math.pi)

SH_INDICES: tuple[tuple[int, int], ...] = tuple((l, m) for l in range(3) for m in range(-l, l + 1))


def real_sph_harm(l: int, m: int, u: np.ndarray) -> np.ndarray:
    """Orthonormal real spherical harmonic ``Y_lm`` (l <= 2) at unit vectors ``u``."""
    u = np.asarray(u, dtype=float)
    x, y, z = u[..., 0], u[..., 1], u[..., 2]
    table = {
        (0, 0): lambda: _Y00 * np.ones_like(x),
        (1, -1): lambda: _Y1 * y,
        (1, 0): lambda: _Y1 * z,
        (1, 1): lambda: _Y1 * x,
        (2, -2): lambda: _S * x * y,
        (2, -1): lambda: _S * y * z,
        (2, 0): lambda: _Y20 * (2 * z * z - x * x - y * y),
        (2, 1): lambda: _S * x * z,
        (2, 2): lambda: _Y22 * (x * x - y * y),
    }
    if (l, m) not in table:
        raise ConfigError(f"spherical harmonic (l={l}, m={m}) not supported; need l <= 2, |m| <= l")
    return table[(l, m)]()


def _sh_polynomial(l: int, m: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Coefficients ``(c0, b, Q)`` with ``Y_lm(u) = c0 + b.u + u^T Q u`` on the sphere."""
    c0, b, Q = 0.0, np.zeros(3), np.zeros((3, 3))
    if (l, m) == (0, 0):
        c0 = _Y00
    elif l == 1:
        b[{-1: 1, 0: 2, 1: 0}[m]] = _Y1
    elif (l, m) == (2, -2):
        Q[0, 1] = Q[1, 0] = _S / 2
    elif (l, m) == (2, -1):
        Q[1, 2] = Q[2, 1] = _S / 2
    elif (l, m) == (2, 0):
        Q = _Y20 * np.diag([-1.0, -1.0, 2.0])
    elif (l, m) == (2, 1):
        Q[0, 2] = Q[2, 0] = _S / 2
    elif (l, m) == (2, 2):
        Q = _Y22 * np.diag([1.0, -1.0, 0.0])
    else:
        raise ConfigError(f"spherical harmonic (l={l}, m={m}) not supported; need l <= 2")
    return c0, b, Q


@dataclass(frozen=True)
class AngularProfile:
    """A smooth function on the sphere given by real spherical harmonics, l <= 2."""

    coeffs: Mapping[tuple[int, int], float]

    def __post_init__(self) -> None:
        for l, m in self.coeffs:
            _sh_polynomial(l, m)

    @classmethod
    def constant(cls, value: float) -> "AngularProfile":
        """Profile equal to ``value`` everywhere."""
        return cls({(0, 0): value / _Y00})

    @classmethod
    def from_spec(cls, spec: Any) -> "AngularProfile":
        """Accept ``{"l,m": c}``, ``[[l, m, c], ...]`` or a bare number (constant)."""
        if isinstance(spec, (int, float)):
            return cls.constant(float(spec))
        if isinstance(spec, Mapping):
            out = {}
            for k, v in spec.items():
                l, m = (int(s) for s in str(k).split(","))
                out[(l, m)] = float(v)
            return cls(out)
        if isinstance(spec, Sequence):
            return cls({(int(l), int(m)): float(c) for l, m, c in spec})
        raise ConfigError(f"cannot parse angular profile {spec!r}")

    def to_spec(self) -> dict[str, float]:
        return {f"{l},{m}": float(c) for (l, m), c in self.coeffs.items()}

    def polynomial(self) -> tuple[float, np.ndarray, np.ndarray]:
        c0, b, Q = 0.0, np.zeros(3), np.zeros((3, 3))
        for (l, m), c in self.coeffs.items():
            a0, a1, a2 = _sh_polynomial(l, m)
            c0, b, Q = c0 + c * a0, b + c * a1, Q + c * a2
        return c0, b, Q

    def __call__(self, u: np.ndarray) -> np.ndarray:
        c0, b, Q = self.polynomial()
        u = np.asarray(u, dtype=float)
        return c0 + u @ b + np.einsum("...i,ij,...j->...", u, Q, u)

    def ambient_grad(self, u: np.ndarray) -> np.ndarray:
        """Gradient of the quadratic extension; project tangentially for the sphere."""
        _, b, Q = self.polynomial()
        return b + 2.0 * np.asarray(u, dtype=float) @ Q

    @property
    def parity(self) -> int:
        ls = {l for (l, _), c in self.coeffs.items() if c != 0}
        if not ls or ls <= {0, 2}:
            return 1
        if ls <= {1}:
            return -1
        return 0

    def scaled(self, c: float) -> "AngularProfile":
        return AngularProfile({k: c * v for k, v in self.coeffs.items()})


# Gaussian terms are below exp(-42) of their peak beyond this many widths
_REACH_WIDTHS = 6.5


def _cutoff(r: np.ndarray, R: float) -> tuple[np.ndarray, np.ndarray]:
    """Smooth cap: 0 for r <= R/2, 1 for r >= R, and its radial derivative."""
    s = (r - 0.5 * R) / (0.5 * R)
    return smooth_step(s), smooth_step_deriv(s) * (2.0 / R)


def _radial_parts(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = np.linalg.norm(x, axis=-1)
    safe = np.where(r > 0, r, 1.0)
    return r, x / safe[..., None]


def gaussian_ray_moments(
    p: np.ndarray, d: np.ndarray, width: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``int_0^inf t^k exp(-|p + t d|^2 / w^2) dt`` for k = 0, 1, 2 (unit d).

    Closed forms via erfc; used as the fast path for Gaussian-type terms.
    """
    w = width
    a = np.sum(p * d, axis=-1)
    perp2 = np.sum(p * p, axis=-1) - a * a
    base = np.exp(-np.maximum(perp2, 0.0) / w**2)
    K = 0.5 * w * math.sqrt(math.pi) * erfc(a / w)  # int_a^inf exp(-s^2/w^2) ds
    ea = 0.5 * w**2 * np.exp(-(a * a) / w**2)  # int_a^inf s exp(-s^2/w^2) ds
    s2 = 0.5 * w**2 * (a * np.exp(-(a * a) / w**2)) + 0.5 * w**2 * K  # int_a^inf s^2 exp
    I0 = base * K
    I1 = base * (ea - a * K)
    I2 = base * (s2 - 2 * a * ea + a * a * K)
    return I0, I1, I2


# ---------------------------------------------------------------- scalar terms


@dataclass(frozen=True)
class GaussianScalar:
    """``amplitude * exp(-|x - center|^2 / width^2)``."""

    amplitude: float
    width: float = 1.0
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    kind: str = field(default="gaussian", init=False)

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise ConfigError("parameter out of range: gaussian width must be positive")

    @property
    def decay(self) -> float:
        return math.inf

    @property
    def reach(self) -> float:
        return float(np.linalg.norm(self.center)) + _REACH_WIDTHS * self.width

    @property
    def parity(self) -> int:
        return 1 if not any(self.center) else 0

    def value(self, x: np.ndarray) -> np.ndarray:
        d = np.asarray(x, dtype=float) - np.asarray(self.center)
        return self.amplitude * np.exp(-np.sum(d * d, axis=-1) / self.width**2)

    def grad(self, x: np.ndarray) -> np.ndarray:
        d = np.asarray(x, dtype=float) - np.asarray(self.center)
        return (-2.0 / self.width**2) * d * self.value(x)[..., None]

    def ray(self, x: np.ndarray, d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Half-line integrals of the value and gradient along ``x + t d``."""
        p = np.asarray(x, dtype=float) - np.asarray(self.center)
        d = np.broadcast_to(np.asarray(d, dtype=float), p.shape)
        I0, I1, _ = gaussian_ray_moments(p, d, self.width)
        val = self.amplitude * I0
        grad = (-2.0 * self.amplitude / self.width**2) * (p * I0[..., None] + d * I1[..., None])
        return val, grad

    def scaled(self, c: float) -> "GaussianScalar":
        return GaussianScalar(c * self.amplitude, self.width, self.center)

    def reflected(self) -> "GaussianScalar":
        return GaussianScalar(self.amplitude, self.width, tuple(-c for c in self.center))

    def to_spec(self) -> dict[str, Any]:
        return {"kind": "gaussian", "amplitude": self.amplitude, "width": self.width, "center": list(self.center)}


@dataclass(frozen=True)
class HomogeneousScalar:
    """``chi(|x|) |x|^{-rho} Omega(x/|x|)`` with a smooth cap ``chi`` inside ``cut_radius``."""

    profile: AngularProfile
    rho: float
    cut_radius: float = 1.0
    kind: str = field(default="homogeneous-tail", init=False)

    def __post_init__(self) -> None:
        if not self.rho > 0:
            raise ConfigError("parameter out of range: homogeneity exponent must be positive")
        if not self.cut_radius > 0:
            raise ConfigError("parameter out of range: cut_radius must be positive")

    @property
    def order(self) -> float:
        return -self.rho

    @property
    def decay(self) -> float:
        return self.rho

    @property
    def feature_radius(self) -> float:
        """Radius of the ball holding the cap shell."""
        return self.cut_radius

    @property
    def parity(self) -> int:
        return self.profile.parity

    def homogeneous(self, x: np.ndarray) -> np.ndarray:
        """The uncapped term ``|x|^{-rho} Omega(x/|x|)``."""
        r, u = _radial_parts(np.asarray(x, dtype=float))
        return r ** (-self.rho) * self.profile(u)

    def value(self, x: np.ndarray) -> np.ndarray:
        r, u = _radial_parts(np.asarray(x, dtype=float))
        chi, _ = _cutoff(r, self.cut_radius)
        safe = np.where(r > 0, r, 1.0)
        return chi * safe ** (-self.rho) * self.profile(u)

    def grad(self, x: np.ndarray) -> np.ndarray:
        r, u = _radial_parts(np.asarray(x, dtype=float))
        chi, dchi = _cutoff(r, self.cut_radius)
        safe = np.where(r > 0, r, 1.0)
        om = self.profile(u)
        g = self.profile.ambient_grad(u)
        tang = g - np.sum(g * u, axis=-1, keepdims=True) * u
        p = safe ** (-self.rho)
        radial = (dchi * p - self.rho * chi * p / safe) * om
        return radial[..., None] * u + (chi * p / safe)[..., None] * tang

    def scaled(self, c: float) -> "HomogeneousScalar":
        return HomogeneousScalar(self.profile.scaled(c), self.rho, self.cut_radius)

    def to_spec(self) -> dict[str, Any]:
        return {
            "kind": "homogeneous-tail",
            "rho": self.rho,
            "cut_radius": self.cut_radius,
            "angular": self.profile.to_spec(),
        }


# ---------------------------------------------------------------- vector terms


def curl_from_jacobian(J: np.ndarray) -> np.ndarray:
    """``rot A`` from ``J[..., i, k] = d_k A_i``."""
    return np.stack(
        [J[..., 2, 1] - J[..., 1, 2], J[..., 0, 2] - J[..., 2, 0], J[..., 1, 0] - J[..., 0, 1]],
        axis=-1,
    )


@dataclass(frozen=True)
class GaussianVector:
    """``vector * exp(-|x|^2 / width^2)``; even under ``x -> -x``."""

    vector: tuple[float, float, float]
    width: float = 1.0
    kind: str = field(default="magnetic-gaussian", init=False)

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise ConfigError("parameter out of range: width must be positive")

    decay = math.inf
    parity = 1

    @property
    def reach(self) -> float:
        return _REACH_WIDTHS * self.width

    def value(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        e = np.exp(-np.sum(x * x, axis=-1) / self.width**2)
        return e[..., None] * np.asarray(self.vector)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        e = np.exp(-np.sum(x * x, axis=-1) / self.width**2)
        return (-2.0 / self.width**2) * e[..., None, None] * np.einsum("i,...k->...ik", np.asarray(self.vector), x)

    def ray(self, x: np.ndarray, d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Half-line integrals of the value and Jacobian along ``x + t d``."""
        p = np.asarray(x, dtype=float)
        d = np.broadcast_to(np.asarray(d, dtype=float), p.shape)
        c = np.asarray(self.vector, dtype=float)
        I0, I1, _ = gaussian_ray_moments(p, d, self.width)
        val = I0[..., None] * c
        mom = p * I0[..., None] + d * I1[..., None]
        jac = (-2.0 / self.width**2) * np.einsum("i,...k->...ik", c, mom)
        return val, jac

    def scaled(self, c: float) -> "GaussianVector":
        return GaussianVector(tuple(c * v for v in self.vector), self.width)

    def to_spec(self) -> dict[str, Any]:
        return {"kind": "magnetic-gaussian", "vector": list(self.vector), "width": self.width}


@dataclass(frozen=True)
class VortexVector:
    """``(axis x x) exp(-|x|^2 / width^2)``; odd under ``x -> -x``.

    Its field is a localized dipole-like B along ``axis``.
    """

    axis: tuple[float, float, float]
    width: float = 1.0
    kind: str = field(default="magnetic-vortex", init=False)

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise ConfigError("parameter out of range: width must be positive")

    decay = math.inf
    parity = -1

    @property
    def reach(self) -> float:
        return _REACH_WIDTHS * self.width

    def value(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        e = np.exp(-np.sum(x * x, axis=-1) / self.width**2)
        return e[..., None] * np.cross(np.asarray(self.axis, dtype=float), x)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a = np.asarray(self.axis, dtype=float)
        e = np.exp(-np.sum(x * x, axis=-1) / self.width**2)
        # d_k (a x x)_i = eps_ijk a_j
        eps = np.zeros((3, 3, 3))
        eps[0, 1, 2] = eps[1, 2, 0] = eps[2, 0, 1] = 1.0
        eps[0, 2, 1] = eps[2, 1, 0] = eps[1, 0, 2] = -1.0
        lin = np.einsum("ijk,j->ik", eps, a)
        ax = np.cross(a, x)
        return e[..., None, None] * (lin - (2.0 / self.width**2) * np.einsum("...i,...k->...ik", ax, x))

    def ray(self, x: np.ndarray, d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Half-line integrals of the value and Jacobian along ``x + t d``."""
        p = np.asarray(x, dtype=float)
        d = np.broadcast_to(np.asarray(d, dtype=float), p.shape)
        a = np.asarray(self.axis, dtype=float)
        I0, I1, I2 = gaussian_ray_moments(p, d, self.width)
        ap, ad = np.cross(a, p), np.cross(a, d)
        val = ap * I0[..., None] + ad * I1[..., None]
        eps = np.zeros((3, 3, 3))
        eps[0, 1, 2] = eps[1, 2, 0] = eps[2, 0, 1] = 1.0
        eps[0, 2, 1] = eps[2, 1, 0] = eps[1, 0, 2] = -1.0
        lin = np.einsum("ijk,j->ik", eps, a)
        o = lambda u, v: np.einsum("...i,...k->...ik", u, v)
        quad = o(ap, p) * I0[..., None, None] + (o(ap, d) + o(ad, p)) * I1[..., None, None] + o(ad, d) * I2[..., None, None]
        jac = lin * I0[..., None, None] - (2.0 / self.width**2) * quad
        return val, jac

    def scaled(self, c: float) -> "VortexVector":
        return VortexVector(tuple(c * v for v in self.axis), self.width)

    def to_spec(self) -> dict[str, Any]:
        return {"kind": "magnetic-vortex", "axis": list(self.axis), "width": self.width}


@dataclass(frozen=True)
class PureGauge:
    """``A = grad psi`` with ``psi = amplitude * exp(-|x - center|^2 / width^2)``; B = 0."""

    amplitude: float
    width: float = 1.0
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    kind: str = field(default="pure-gauge", init=False)

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise ConfigError("parameter out of range: width must be positive")

    decay = math.inf

    @property
    def reach(self) -> float:
        return float(np.linalg.norm(self.center)) + _REACH_WIDTHS * self.width

    @property
    def parity(self) -> int:
        # grad of an even function is odd
        return -1 if not any(self.center) else 0

    def psi(self, x: np.ndarray) -> np.ndarray:
        d = np.asarray(x, dtype=float) - np.asarray(self.center)
        return self.amplitude * np.exp(-np.sum(d * d, axis=-1) / self.width**2)

    def value(self, x: np.ndarray) -> np.ndarray:
        d = np.asarray(x, dtype=float) - np.asarray(self.center)
        return (-2.0 / self.width**2) * d * self.psi(x)[..., None]

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        d = np.asarray(x, dtype=float) - np.asarray(self.center)
        w2 = self.width**2
        p = self.psi(x)[..., None, None]
        return p * (4.0 / w2**2 * np.einsum("...i,...k->...ik", d, d) - 2.0 / w2 * np.eye(3))

    def ray(self, x: np.ndarray, d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Half-line integrals of ``grad psi`` and its Jacobian along ``x + t d``."""
        p = np.asarray(x, dtype=float) - np.asarray(self.center)
        d = np.broadcast_to(np.asarray(d, dtype=float), p.shape)
        I0, I1, I2 = gaussian_ray_moments(p, d, self.width)
        w2 = self.width**2
        val = (-2.0 * self.amplitude / w2) * (p * I0[..., None] + d * I1[..., None])
        o = lambda u, v: np.einsum("...i,...k->...ik", u, v)
        quad = o(p, p) * I0[..., None, None] + (o(p, d) + o(d, p)) * I1[..., None, None] + o(d, d) * I2[..., None, None]
        jac = self.amplitude * (4.0 / w2**2 * quad - 2.0 / w2 * np.eye(3) * I0[..., None, None])
        return val, jac

    def scaled(self, c: float) -> "PureGauge":
        return PureGauge(c * self.amplitude, self.width, self.center)

    def to_spec(self) -> dict[str, Any]:
        return {"kind": "pure-gauge", "amplitude": self.amplitude, "width": self.width, "center": list(self.center)}


@dataclass(frozen=True)
class HomogeneousVector:
    """``chi(|x|) |x|^{-rho} (Omega_1, Omega_2, Omega_3)(x/|x|)`` with smooth cap ``chi``."""

    profiles: tuple[AngularProfile, AngularProfile, AngularProfile]
    rho: float
    cut_radius: float = 1.0
    kind: str = field(default="homogeneous-vector-tail", init=False)

    def __post_init__(self) -> None:
        if len(self.profiles) != 3:
            raise ConfigError("vector tail needs three angular components")
        if not self.rho > 0:
            raise ConfigError("parameter out of range: homogeneity exponent must be positive")

    @property
    def order(self) -> float:
        return -self.rho

    @property
    def decay(self) -> float:
        return self.rho

    @property
    def feature_radius(self) -> float:
        """Radius of the ball holding the cap shell."""
        return self.cut_radius

    @property
    def parity(self) -> int:
        ps = {p.parity for p in self.profiles if p.coeffs}
        return ps.pop() if len(ps) == 1 else (1 if not ps else 0)

    def homogeneous(self, x: np.ndarray) -> np.ndarray:
        r, u = _radial_parts(np.asarray(x, dtype=float))
        return (r ** (-self.rho))[..., None] * np.stack([p(u) for p in self.profiles], axis=-1)

    def value(self, x: np.ndarray) -> np.ndarray:
        r, u = _radial_parts(np.asarray(x, dtype=float))
        chi, _ = _cutoff(r, self.cut_radius)
        safe = np.where(r > 0, r, 1.0)
        om = np.stack([p(u) for p in self.profiles], axis=-1)
        return (chi * safe ** (-self.rho))[..., None] * om

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        r, u = _radial_parts(np.asarray(x, dtype=float))
        chi, dchi = _cutoff(r, self.cut_radius)
        safe = np.where(r > 0, r, 1.0)
        p = safe ** (-self.rho)
        om = np.stack([q(u) for q in self.profiles], axis=-1)
        g = np.stack([q.ambient_grad(u) for q in self.profiles], axis=-2)  # (..., i, k)
        tang = g - np.einsum("...ij,...j->...i", g, u)[..., None] * u[..., None, :]
        radial = (dchi * p - self.rho * chi * p / safe)[..., None, None] * np.einsum("...i,...k->...ik", om, u)
        return radial + (chi * p / safe)[..., None, None] * tang

    def scaled(self, c: float) -> "HomogeneousVector":
        return HomogeneousVector(tuple(q.scaled(c) for q in self.profiles), self.rho, self.cut_radius)

    def to_spec(self) -> dict[str, Any]:
        return {
            "kind": "homogeneous-vector-tail",
            "rho": self.rho,
            "cut_radius": self.cut_radius,
            "components": [q.to_spec() for q in self.profiles],
        }


# ---------------------------------------------------------------- gauge from B


def _eta(r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Default cutoff profile: 0 for r <= 1/2, 1 for r >= 1."""
    return smooth_step(2.0 * r - 1.0), 2.0 * smooth_step_deriv(2.0 * r - 1.0)


@dataclass(frozen=True)
class GaugeConstructed:
    """Magnetic potential with ``rot A = B`` built by radial integrals of B.

    ``A = A_reg + (1 - eta) A_inf - U grad(eta)`` where
    ``A_reg(x) = int_1^inf s x x B(sx) ds`` (singular at 0, equals A outside the
    unit ball), ``A_inf(x) = -int_0^inf s x x B(sx) ds`` is curl-free and
    homogeneous of degree -1, and ``U`` is its potential normalized by
    ``U(x0) = 0``. Since ``<A_inf(x), x> = 0``, U is constant along rays and
    is computed by an arc integral on the unit sphere.
    """

    field_fn: VectorField
    x0: tuple[float, float, float] = (1.0, 0.0, 0.0)
    decay_B: float = math.inf
    parity: int = 0
    rule: RayRule = DEFAULT_RULE
    panel_nodes: int = 20
    panel_width: float = 0.125
    radial_reach: float = 4.0
    arc_nodes: int = 24
    kind: str = field(default="gauge-from-field", init=False)

    @property
    def decay(self) -> float:
        return self.decay_B - 1.0

    @property
    def feature_radius(self) -> float:
        """The gauge cut-off shell lies in the unit ball."""
        return 1.0

    def _cross_B(self, p: np.ndarray) -> np.ndarray:
        return np.cross(p, self.field_fn(p))

    def _ray_part(self, x: np.ndarray) -> np.ndarray:
        """``int_0^inf p x B(p) dt`` along ``p = x + t x/|x|``."""
        _, u = _radial_parts(x)
        return ray_integral(self._cross_B, x, u, replace(self.rule, check_tail=False))

    def _panel_part(self, u: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """``int_a^b p x B(p) dtau`` along ``p = tau u`` for ``0 <= a <= b <= radial_reach``.

        Fixed panels in absolute radius, clipped to ``[a, b]``, keep the rule
        smooth in the endpoints and resolve steep but smooth features of B.
        """
        g, w = gauss_legendre(self.panel_nodes)
        edges = np.arange(0.0, self.radial_reach + 0.5 * self.panel_width, self.panel_width)
        lo = np.clip(np.maximum(a[:, None], edges[None, :-1]), None, None)
        hi = np.minimum(b[:, None], edges[None, 1:])
        width = np.maximum(hi - lo, 0.0)  # (P, panels)
        tau = lo[..., None] + 0.5 * width[..., None] * (g + 1.0)  # (P, panels, nodes)
        wt = 0.5 * width[..., None] * w
        active = width > 0
        P = u.shape[0]
        out = np.zeros((P, 3))
        rows, cols = np.nonzero(active)
        if rows.size == 0:
            return out
        pts = tau[rows, cols][..., None] * u[rows][:, None, :]
        vals = self._cross_B(pts.reshape(-1, 3)).reshape(rows.size, -1, 3)
        contrib = np.einsum("qk,qkj->qj", wt[rows, cols], vals)
        np.add.at(out, rows, contrib)
        return out

    def _tail(self, u: np.ndarray) -> np.ndarray:
        """``int_R^inf p x B(p) dtau`` beyond the panel region."""
        return self._ray_part(self.radial_reach * u)

    def _cumulative(self, x: np.ndarray) -> np.ndarray:
        """``int_0^|x| p x B(p) dtau`` along ``p = tau x/|x|``."""
        r, u = _radial_parts(x)
        R = self.radial_reach
        out = np.zeros_like(x)
        inside = r <= R
        if np.any(inside):
            out[inside] = self._panel_part(u[inside], np.zeros(int(inside.sum())), r[inside])
        if np.any(~inside):
            o = ~inside
            full = self._panel_part(u[o], np.zeros(int(o.sum())), np.full(int(o.sum()), R))
            out[o] = full + self._tail(u[o]) - self._ray_part(x[o])
        return out

    def _total(self, u: np.ndarray) -> np.ndarray:
        """``int_0^inf p x B(p) dtau`` along direction u."""
        P = u.shape[0]
        return self._panel_part(u, np.zeros(P), np.full(P, self.radial_reach)) + self._tail(u)

    def a_reg(self, x: np.ndarray) -> np.ndarray:
        """``int_1^inf s x x B(sx) ds``; singular at the origin."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r, u = _radial_parts(x)
        out = np.zeros_like(x)
        far = r >= self.radial_reach
        if np.any(far):
            out[far] = self._ray_part(x[far]) / r[far, None]
        near = ~far
        if np.any(near):
            n = int(near.sum())
            part = self._panel_part(u[near], r[near], np.full(n, self.radial_reach)) + self._tail(u[near])
            out[near] = part / r[near, None]
        return out

    def a_inf(self, x: np.ndarray) -> np.ndarray:
        """``-int_0^inf s x x B(sx) ds``; curl-free, homogeneous of degree -1."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r, u = _radial_parts(x)
        return -self._total(u) / r[:, None]

    def a_transversal(self, x: np.ndarray) -> np.ndarray:
        """Transversal gauge ``-int_0^1 s x x B(sx) ds``, smooth at the origin."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=-1)
        out = np.zeros_like(x)
        nz = r > 0
        out[nz] = -self._cumulative(x[nz]) / r[nz, None]
        return out

    def _arc(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """``int <A_inf, dy>`` along the short great-circle arcs from rows of ``a`` to ``b``."""
        cos = np.clip(np.sum(a * b, axis=-1), -1.0, 1.0)
        ang = np.arccos(cos)
        perp = b - cos[:, None] * a
        n = np.linalg.norm(perp, axis=-1)
        ok = n > 1e-14
        e = np.zeros_like(a)
        e[ok] = perp[ok] / n[ok, None]
        g, w = gauss_legendre(self.arc_nodes)
        s = 0.5 * (g + 1.0)[None, :] * ang[:, None]
        pts = np.cos(s)[..., None] * a[:, None, :] + np.sin(s)[..., None] * e[:, None, :]
        tang = -np.sin(s)[..., None] * a[:, None, :] + np.cos(s)[..., None] * e[:, None, :]
        vals = self.a_inf(pts.reshape(-1, 3)).reshape(pts.shape)
        integrand = np.sum(vals * tang, axis=-1)
        return 0.5 * ang * np.einsum("k,pk->p", w, integrand)

    def potential_u(self, x: np.ndarray) -> np.ndarray:
        """``U(x)`` with ``grad U = A_inf`` and ``U(x0) = 0``; constant along rays."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        u = unit(x)
        base = unit(np.asarray(self.x0, dtype=float))
        a = np.broadcast_to(base, u.shape).copy()
        cos = u @ base
        out = np.zeros(x.shape[0])
        far = cos < -0.5
        near = ~far
        if np.any(near):
            out[near] = self._arc(a[near], u[near])
        if np.any(far):
            # detour through a point orthogonal to x0 so no arc is near-antipodal
            trial = np.array([0.0, 1.0, 0.0]) if abs(base[1]) < 0.9 else np.array([0.0, 0.0, 1.0])
            mid = unit(trial - np.dot(trial, base) * base)
            mids = np.broadcast_to(mid, (int(far.sum()), 3)).copy()
            out[far] = self._arc(a[far], mids) + self._arc(mids, u[far])
        return out

    def _chunked(self, fn: VectorField, x: np.ndarray, tail: tuple[int, ...]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 3)
        chunk = 256
        parts = [fn(flat[i : i + chunk]) for i in range(0, flat.shape[0], chunk)]
        out = np.concatenate(parts, axis=0) if parts else np.zeros((0,) + tail)
        return out.reshape(x.shape[:-1] + tail)

    def value(self, x: np.ndarray) -> np.ndarray:
        return self._chunked(lambda p: self._smooth_part(p) + self._gauge_part(p)[0], x, (3,))

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        """FD Jacobian of the smooth part plus the exact Jacobian of ``-U grad(eta)``.

        Using ``grad U = A_inf`` for the second piece makes the curl of the
        two eta-dependent pieces cancel exactly instead of up to FD noise.
        """

        def jac(p: np.ndarray) -> np.ndarray:
            return fd_gradient(self._smooth_part, p) + self._gauge_part(p)[1]

        return self._chunked(jac, x, (3, 3))

    def _smooth_part(self, x: np.ndarray) -> np.ndarray:
        """``A + U grad(eta)``: A_reg outside the unit ball, ``A_tr - eta A_inf`` inside."""
        r, _ = _radial_parts(x)
        out = np.zeros_like(x)
        eta, _ = _eta(r)
        outer = r >= 1.0
        inner_only = r <= 0.5
        mid = ~outer & ~inner_only
        if np.any(outer):
            out[outer] = self.a_reg(x[outer])
        if np.any(inner_only):
            out[inner_only] = self.a_transversal(x[inner_only])
        if np.any(mid):
            xm = x[mid]
            # A_reg + (1 - eta) A_inf = A_tr - eta A_inf since A_reg + A_inf = A_tr
            out[mid] = self.a_transversal(xm) - eta[mid, None] * self.a_inf(xm)
        return out

    def _gauge_part(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``-U grad(eta)`` and its Jacobian, nonzero only for 1/2 < |x| < 1."""
        r, u = _radial_parts(x)
        val = np.zeros_like(x)
        jac = np.zeros(x.shape + (3,))
        mid = (r > 0.5) & (r < 1.0)
        if not np.any(mid):
            return val, jac
        xm, rm, um = x[mid], r[mid], u[mid]
        s = 2.0 * rm - 1.0
        d1 = 2.0 * smooth_step_deriv(s)
        d2 = 4.0 * smooth_step_deriv2(s)
        U = self.potential_u(xm)
        ainf = self.a_inf(xm)
        grad_eta = d1[:, None] * um
        uu = np.einsum("pi,pk->pik", um, um)
        hess_eta = d2[:, None, None] * uu + (d1 / rm)[:, None, None] * (np.eye(3) - uu)
        val[mid] = -U[:, None] * grad_eta
        jac[mid] = -np.einsum("pi,pk->pik", grad_eta, ainf) - U[:, None, None] * hess_eta
        return val, jac

    def scaled(self, c: float) -> "GaugeConstructed":
        fn = self.field_fn
        return replace(self, field_fn=lambda p: c * fn(p))

    def to_spec(self) -> dict[str, Any]:
        return {"kind": "gauge-from-field", "x0": list(self.x0)}


def _divergence(B: VectorField, x: np.ndarray) -> np.ndarray:
    J = fd_gradient(B, x)
    return J[..., 0, 0] + J[..., 1, 1] + J[..., 2, 2]


def estimate_decay(f: VectorField, directions: np.ndarray, r1: float = 1e3, r2: float = 2e3) -> float:
    """Smallest decay exponent of ``|f|`` along the given rays between radii r1 and r2."""
    a = np.linalg.norm(np.atleast_2d(f(r1 * directions)).reshape(len(directions), -1), axis=-1)
    b = np.linalg.norm(np.atleast_2d(f(r2 * directions)).reshape(len(directions), -1), axis=-1)
    ok = (a > 1e-280) & (b > 0)
    if not np.any(ok):
        return math.inf
    return float(np.min(np.log(a[ok] / b[ok]) / math.log(r2 / r1)))


def gauge_from_field(
    B: VectorField,
    x0: Sequence[float] = (1.0, 0.0, 0.0),
    check: bool = True,
    div_tol: float = 1e-6,
    rng: np.random.Generator | None = None,
    parity: int = 0,
) -> GaugeConstructed:
    """Build a short-range magnetic potential A with ``rot A = B``.

    Checks ``div B = 0`` on random samples and that B decays faster than
    ``|x|^{-2}``; both violations raise ``ConfigError``.
    """
    x0a = np.asarray(x0, dtype=float)
    if x0a.shape != (3,) or not np.linalg.norm(x0a) > 0:
        raise ConfigError("base point x0 must be a nonzero 3-vector")
    decay = math.inf
    if check:
        rng = np.random.default_rng(0) if rng is None else rng
        pts = rng.normal(size=(32, 3)) * 1.5
        div = _divergence(B, pts)
        scale = max(1.0, float(np.max(np.abs(B(pts)))))
        if np.max(np.abs(div)) > div_tol * scale:
            raise ConfigError(f"not divergence-free: max |div B| = {np.max(np.abs(div)):.3e}")
        dirs = unit(rng.normal(size=(20, 3)))
        decay = estimate_decay(B, dirs)
        if decay <= 2.0:
            raise ConfigError(f"insufficient decay: B ~ |x|^-{decay:.3f}, need exponent > 2")
    return GaugeConstructed(field_fn=B, x0=tuple(float(v) for v in x0a), decay_B=decay, parity=parity)


# ---------------------------------------------------------------- the model


def _numeric_ray(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, d: np.ndarray, rule: RayRule, terms: Sequence[Any]) -> np.ndarray:
    """Ray quadrature for terms without closed forms, resolving their cut-off shell."""
    radius = max((getattr(t, "feature_radius", 0.0) for t in terms), default=0.0)
    if radius > 0:
        return ray_integral_ball(f, x, d, radius, rule)
    return ray_integral(f, x, d, rule)


ScalarTerm = GaussianScalar | HomogeneousScalar
VectorTerm = GaussianVector | VortexVector | PureGauge | HomogeneousVector | GaugeConstructed


@dataclass(frozen=True)
class PotentialModel:
    """Electric potential V and magnetic potential A as sums of closed-form terms."""

    scalars: tuple[ScalarTerm, ...] = ()
    vectors: tuple[VectorTerm, ...] = ()
    kind: str = "sum"

    @property
    def rho_e(self) -> float:
        return min((t.decay for t in self.scalars), default=math.inf)

    @property
    def rho_m(self) -> float:
        return min((t.decay for t in self.vectors), default=math.inf)

    @property
    def rho(self) -> float:
        return min(self.rho_e, self.rho_m)

    @property
    def reach(self) -> float:
        """Radius outside which every term is negligible; inf for long-range terms."""
        return max((getattr(t, "reach", math.inf) for t in self.scalars + self.vectors), default=0.0)

    @property
    def feature_radius(self) -> float:
        """Largest ball holding a cut-off shell of a term; 0 if there is none."""
        return max((getattr(t, "feature_radius", 0.0) for t in self.scalars + self.vectors), default=0.0)

    @property
    def parity_V(self) -> int:
        return _combined_parity(t.parity for t in self.scalars)

    @property
    def parity_A(self) -> int:
        return _combined_parity(t.parity for t in self.vectors)

    def V(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for t in self.scalars:
            out = out + t.value(x)
        return out

    def grad_V(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for t in self.scalars:
            out = out + t.grad(x)
        return out

    def A(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for t in self.vectors:
            out = out + t.value(x)
        return out

    def jac_A(self, x: np.ndarray) -> np.ndarray:
        """``J[..., i, k] = d_k A_i``."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape + (3,))
        for t in self.vectors:
            out = out + t.jacobian(x)
        return out

    def B(self, x: np.ndarray) -> np.ndarray:
        return curl_from_jacobian(self.jac_A(x))

    def ray_scalar(
        self, x: np.ndarray, d: np.ndarray, rule: RayRule = DEFAULT_RULE, grad: bool = True
    ) -> tuple[np.ndarray, np.ndarray]:
        """``(int_0^inf V, int_0^inf grad V)`` along ``x + t d``; shapes (P,), (P, 3).

        Gaussian terms use closed forms; other terms use the ray quadrature.
        With ``grad=False`` the gradient of quadrature terms is skipped (left zero).
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = np.broadcast_to(np.asarray(d, dtype=float), x.shape)
        val = np.zeros(x.shape[0])
        gsum = np.zeros(x.shape)
        numeric = []
        for t in self.scalars:
            if hasattr(t, "ray"):
                v, g = t.ray(x, d)
                val, gsum = val + v, gsum + g
            else:
                numeric.append(t)
        if numeric and not grad:
            out = _numeric_ray(lambda p: sum(t.value(p) for t in numeric)[:, None], x, d, rule, numeric)
            val = val + out[:, 0]
        elif numeric:
            f = lambda p: np.concatenate(
                [sum(t.value(p) for t in numeric)[:, None], sum(t.grad(p) for t in numeric)], axis=-1
            )
            out = _numeric_ray(f, x, d, rule, numeric)
            val, gsum = val + out[:, 0], gsum + out[:, 1:]
        return val, gsum

    def ray_vector(
        self, x: np.ndarray, d: np.ndarray, rule: RayRule = DEFAULT_RULE, grad: bool = True
    ) -> tuple[np.ndarray, np.ndarray]:
        """``(int_0^inf A, int_0^inf J_A)`` along ``x + t d``; shapes (P, 3), (P, 3, 3).

        With ``grad=False`` the Jacobian of quadrature terms is skipped (left zero).
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = np.broadcast_to(np.asarray(d, dtype=float), x.shape)
        val = np.zeros(x.shape)
        jac = np.zeros(x.shape + (3,))
        numeric = []
        for t in self.vectors:
            if hasattr(t, "ray"):
                v, j = t.ray(x, d)
                val, jac = val + v, jac + j
            else:
                numeric.append(t)
        if numeric and not grad:
            out = _numeric_ray(lambda p: sum(t.value(p) for t in numeric), x, d, rule, numeric)
            val = val + out
        elif numeric:
            P = x.shape[0]
            f = lambda p: np.concatenate(
                [sum(t.value(p) for t in numeric), sum(t.jacobian(p) for t in numeric).reshape(-1, 9)], axis=-1
            )
            out = _numeric_ray(f, x, d, rule, numeric)
            val, jac = val + out[:, :3], jac + out[:, 3:].reshape(P, 3, 3)
        return val, jac

    def has_magnetic(self) -> bool:
        return bool(self.vectors)

    def cal_v(self, omega: np.ndarray, kin: Kinematics, x: np.ndarray) -> np.ndarray:
        return cal_v(self, omega, kin, x)

    def scaled(self, c: float) -> "PotentialModel":
        """Every coupling multiplied by ``c``."""
        return PotentialModel(
            tuple(t.scaled(c) for t in self.scalars), tuple(t.scaled(c) for t in self.vectors), self.kind
        )

    def with_gauge(self, psi: PureGauge) -> "PotentialModel":
        """Same fields with ``A -> A + grad psi``."""
        return PotentialModel(self.scalars, self.vectors + (psi,), self.kind)

    def electric(self) -> "PotentialModel":
        return PotentialModel(self.scalars, (), self.kind)

    def magnetic(self) -> "PotentialModel":
        return PotentialModel((), self.vectors, self.kind)

    def __add__(self, other: "PotentialModel") -> "PotentialModel":
        return PotentialModel(self.scalars + other.scalars, self.vectors + other.vectors, "sum")

    def to_spec(self) -> dict[str, Any]:
        return {"kind": "sum", "terms": [t.to_spec() for t in self.scalars + self.vectors]}


def _combined_parity(ps: Any) -> int:
    s = set(ps)
    if not s:
        return 1  # the zero field is both even and odd; report even
    return s.pop() if len(s) == 1 else 0


def cal_v(model: PotentialModel, omega: np.ndarray, kin: Kinematics, x: np.ndarray) -> np.ndarray:
    """``(|E|/nu) V(x) + sgn(E) <omega, A(x)>``, the effective potential seen along omega."""
    x = np.asarray(x, dtype=float)
    out = kin.ratio * model.V(x)
    if model.vectors:
        out = out + kin.sign * model.A(x) @ np.asarray(omega, dtype=float)
    return out


def xray_transform(
    f: VectorField,
    omega: np.ndarray,
    y: np.ndarray,
    half: str = "full",
    rule: RayRule = DEFAULT_RULE,
) -> np.ndarray:
    """Line integral of ``f`` over ``y + t omega`` for t in R, [0, inf) or (-inf, 0]."""
    omega = unit(omega)
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if half == "forward":
        return ray_integral(f, y, omega, rule)
    if half == "backward":
        return ray_integral(f, y, -omega, rule)
    if half == "full":
        return ray_integral(f, y, omega, rule) + ray_integral(f, y, -omega, rule)
    raise ConfigError(f"half must be full, forward or backward, got {half!r}")


def fourier_homogeneous_tail(rho: float, xi_mag: np.ndarray | float) -> np.ndarray | float:
    """``int e^{-i<x,xi>} |x|^{-rho} dx`` (no normalizing prefactor), for 1 < rho < 3.

    Equals ``2^{3-rho} pi^{3/2} Gamma((3-rho)/2) / Gamma(rho/2) |xi|^{rho-3}``.
    """
    if not 1.0 < rho < 3.0:
        raise ConfigError(f"parameter out of range: rho={rho} must lie in (1, 3)")
    xi = np.asarray(xi_mag, dtype=float)
    if np.any(xi <= 0):
        raise ConfigError("|xi| must be positive")
    c = 2.0 ** (3 - rho) * math.pi**1.5 * gamma_fn((3 - rho) / 2) / gamma_fn(rho / 2)
    out = c * xi ** (rho - 3)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------- catalog


def _vec3(v: Any, name: str) -> tuple[float, float, float]:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise ConfigError(f"parameter out of range: {name} must be a 3-vector")
    return tuple(float(a) for a in arr)


def _terms_from_spec(spec: Mapping[str, Any]) -> tuple[list[ScalarTerm], list[VectorTerm]]:
    if not isinstance(spec, Mapping) or "kind" not in spec:
        raise ConfigError(f"catalog entry must be a mapping with a 'kind', got {spec!r}")
    kind = spec["kind"]
    try:
        if kind == "gaussian":
            return [GaussianScalar(float(spec.get("amplitude", 1.0)), float(spec.get("width", 1.0)),
                                   _vec3(spec.get("center", (0, 0, 0)), "center"))], []
        if kind == "homogeneous-tail":
            rho = float(spec["rho"])
            if not rho > 1.0:
                raise ConfigError(f"parameter out of range: rho={rho} must exceed 1")
            prof = AngularProfile.from_spec(spec.get("angular", 1.0))
            return [HomogeneousScalar(prof, rho, float(spec.get("cut_radius", 1.0)))], []
        if kind == "homogeneous-vector-tail":
            rho = float(spec["rho"])
            if not rho > 1.0:
                raise ConfigError(f"parameter out of range: rho={rho} must exceed 1")
            comps = spec["components"]
            if len(comps) != 3:
                raise ConfigError("parameter out of range: need three components")
            profs = tuple(AngularProfile.from_spec(c) for c in comps)
            return [], [HomogeneousVector(profs, rho, float(spec.get("cut_radius", 1.0)))]
        if kind == "magnetic-gaussian":
            return [], [GaussianVector(_vec3(spec["vector"], "vector"), float(spec.get("width", 1.0)))]
        if kind == "magnetic-vortex":
            return [], [VortexVector(_vec3(spec["axis"], "axis"), float(spec.get("width", 1.0)))]
        if kind == "pure-gauge":
            return [], [PureGauge(float(spec.get("amplitude", 1.0)), float(spec.get("width", 1.0)),
                                  _vec3(spec.get("center", (0, 0, 0)), "center"))]
        if kind == "gauge-from-field":
            # B is given as the field of an analytic vector term; A is rebuilt from B
            _, src = _terms_from_spec(spec["field"])
            if len(src) != 1:
                raise ConfigError("gauge-from-field needs exactly one vector term as its field")
            term = src[0]
            B = lambda p, t=term: curl_from_jacobian(t.jacobian(p))
            return [], [gauge_from_field(B, spec.get("x0", (1.0, 0.0, 0.0)), parity=term.parity)]
        if kind == "sum":
            sc: list[ScalarTerm] = []
            ve: list[VectorTerm] = []
            for sub in spec["terms"]:
                a, b = _terms_from_spec(sub)
                sc += a
                ve += b
            return sc, ve
    except KeyError as exc:
        raise ConfigError(f"missing parameter {exc} for catalog entry {kind!r}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"parameter out of range in {kind!r}: {exc}") from exc
    raise ConfigError(f"unknown catalog entry {kind!r}")


def build_potential_model(spec: Mapping[str, Any]) -> PotentialModel:
    """Build a model from a catalog description (see the README for the format)."""
    sc, ve = _terms_from_spec(spec)
    return PotentialModel(tuple(sc), tuple(ve), str(spec["kind"]))


def load_catalog(path: str | Path) -> dict[str, PotentialModel]:
    """Read ``{"models": {name: spec}}`` from JSON."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read catalog {path}: {exc}") from exc
    models = data.get("models", data)
    return {name: build_potential_model(s) for name, s in models.items()}


def check_decay(
    f: VectorField, claimed: float, n_rays: int = 20, rng: np.random.Generator | None = None
) -> bool:
    """Whether ``|f|`` decays at least like ``|x|^{-claimed}`` out to |x| = 1e3."""
    rng = np.random.default_rng(1) if rng is None else rng
    dirs = unit(rng.normal(size=(n_rays, 3)))
    rs = np.geomspace(2.0, 1e3, 12)
    vals = np.stack([np.linalg.norm(np.atleast_2d(f(r * dirs)).reshape(n_rays, -1), axis=-1) for r in rs])
    bound = vals * (1.0 + rs[:, None]) ** min(claimed, 50.0)
    return bool(np.all(bound <= 10.0 * bound[0].max() + 1e-300))


__all__ = [
    "AngularProfile",
    "GaussianScalar",
    "HomogeneousScalar",
    "GaussianVector",
    "VortexVector",
    "PureGauge",
    "HomogeneousVector",
    "GaugeConstructed",
    "PotentialModel",
    "SH_INDICES",
    "build_potential_model",
    "cal_v",
    "check_decay",
    "curl_from_jacobian",
    "estimate_decay",
    "fd_step",
    "fourier_homogeneous_tail",
    "gauge_from_field",
    "load_catalog",
    "real_sph_harm",
    "xray_transform",
]
