"""Eikonal phases, transport coefficients, approximate eigenfunctions and remainders.

For a direction omega, energy E and label ``sign`` the approximate
eigenfunction is ``u_N = exp(i<x, xi>) exp(i Phi) w_N`` with ``xi = nu omega``
and ``w_N = sum_j nu^-j b_j + P_omega(E) sum_j nu^-j c_j``. The phase solves
``<omega, grad Phi> = g`` with ``g = -(E/nu) V - <omega, A>``; the ``c_j``
solve the same kind of transport equation with a matrix source.

Both transport equations ``<omega, grad d> = F`` are solved by one half-line
integral: ``d(x) = -s int_0^inf F(x + s t omega) dt`` with ``s = sign * sgn(E)``.
This single switch covers the four (sign, sgn E) branches.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .clifford import ALPHA, Kinematics, alpha_dot, spectral_projector, unit
from .errors import ConfigError, NumericError
from .fields import PotentialModel
from .quadrature import DEFAULT_RULE, RayRule, fd_gradient, ray_integral, ray_integral_ball

MatrixFn = Callable[[np.ndarray], np.ndarray]

N_MAX = 2


def ray_sense(sign: int, kin: Kinematics) -> int:
    """Direction of the integration ray: +1 along omega, -1 against it."""
    if sign not in (1, -1):
        raise ConfigError(f"expansion sign must be +1 or -1, got {sign}")
    return sign * kin.sign


@dataclass(frozen=True)
class Cone:
    """Region ``{|x| >= R, sign sgn(E) <x/|x|, omega> >= -1 + eps0}`` where u_N is accurate."""

    omega: np.ndarray
    sign: int
    energy_sign: int
    epsilon0: float = 0.1
    R: float = 1.0

    def __post_init__(self) -> None:
        if not 0 < self.epsilon0 < 1:
            raise ConfigError("epsilon0 must lie in (0, 1)")
        if not self.R > 0:
            raise ConfigError("cone radius must be positive")

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        cos = (x @ unit(self.omega)) / safe
        return (r >= self.R) & (self.sign * self.energy_sign * cos >= -1.0 + self.epsilon0)

    def sample(self, n: int, rng: np.random.Generator, r_max: float = 20.0) -> np.ndarray:
        """``n`` points of the cone with log-uniform radius in ``[R, r_max]``."""
        out: list[np.ndarray] = []
        while sum(len(o) for o in out) < n:
            d = rng.normal(size=(4 * n, 3))
            d /= np.linalg.norm(d, axis=-1, keepdims=True)
            r = np.exp(rng.uniform(np.log(self.R), np.log(r_max), size=4 * n))
            pts = d * r[:, None]
            out.append(pts[self.contains(pts)])
        return np.concatenate(out)[:n]

    def ray_direction(self) -> np.ndarray:
        """The cone's central direction ``sign sgn(E) omega``."""
        return self.sign * self.energy_sign * unit(self.omega)


@dataclass(frozen=True)
class TransportExpansion:
    """Phase and transport coefficients for fixed (model, omega, E, sign, N).

    Coefficients are evaluated on demand; ``b(j, x)`` and ``c(j, x)`` return
    arrays of shape (P, 4, 4). Spatial derivatives of coefficients are
    fourth-order central differences, the phase gradient is a ray integral of
    the analytic gradient of the source.
    """

    model: PotentialModel
    omega: np.ndarray
    kin: Kinematics
    sign: int
    N: int
    rule: RayRule = DEFAULT_RULE
    P: np.ndarray = field(init=False, repr=False)
    P_minus: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not 0 <= self.N <= N_MAX:
            raise ConfigError(f"expansion order N={self.N} outside [0, {N_MAX}]")
        if self.kin.nu < 1e-6:
            raise NumericError("derivative step underflow: |xi| too small for the expansion")
        om = unit(np.asarray(self.omega, dtype=float))
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "P", self.kin.projector(om))
        object.__setattr__(
            self, "P_minus", spectral_projector(self.kin.nu * om, self.kin.m, -self.kin.sign)
        )

    @property
    def sense(self) -> int:
        return ray_sense(self.sign, self.kin)

    @property
    def xi(self) -> np.ndarray:
        return self.kin.nu * self.omega

    def cone(self, epsilon0: float = 0.1, R: float = 1.0) -> Cone:
        return Cone(self.omega, self.sign, self.kin.sign, epsilon0, R)

    # ------------------------------------------------------------ phase

    def source(self, x: np.ndarray) -> np.ndarray:
        """``g = -(E/nu) V - <omega, A>``, the right side of the eikonal equation."""
        x = np.asarray(x, dtype=float)
        out = -(self.kin.E / self.kin.nu) * self.model.V(x)
        if self.model.vectors:
            out = out - self.model.A(x) @ self.omega
        return out

    def source_grad(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = -(self.kin.E / self.kin.nu) * self.model.grad_V(x)
        if self.model.vectors:
            out = out - np.einsum("...ik,i->...k", self.model.jac_A(x), self.omega)
        return out

    def _solve(self, F: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
        s = self.sense
        radius = self.model.feature_radius
        if radius > 0:
            return -s * ray_integral_ball(F, x, s * self.omega, radius, self.rule)
        return -s * ray_integral(F, x, s * self.omega, self.rule)

    def phase_and_grad(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``Phi(x)`` and ``grad Phi(x)``; shapes (P,) and (P, 3).

        Both are half-line integrals of the source and its analytic gradient,
        ``Phi = s [(E/nu) int V + <omega, int A>]`` along ``x + s t omega``.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        s = self.sense
        d = s * self.omega
        ratio = self.kin.E / self.kin.nu
        iv, igv = self.model.ray_scalar(x, d, self.rule)
        phi = ratio * iv
        grad = ratio * igv
        if self.model.vectors:
            ia, ija = self.model.ray_vector(x, d, self.rule)
            phi = phi + ia @ self.omega
            grad = grad + np.einsum("pik,i->pk", ija, self.omega)
        return s * phi, s * grad

    def phase(self, x: np.ndarray) -> np.ndarray:
        """``Phi(x)``; shape (P,)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = self.sense * self.omega
        phi = (self.kin.E / self.kin.nu) * self.model.ray_scalar(x, d, self.rule, grad=False)[0]
        if self.model.vectors:
            phi = phi + self.model.ray_vector(x, d, self.rule, grad=False)[0] @ self.omega
        return self.sense * phi

    def phase_grad(self, x: np.ndarray) -> np.ndarray:
        """``grad Phi(x)``; shape (P, 3)."""
        return self.phase_and_grad(x)[1]

    def phase_by_quadrature(self, x: np.ndarray) -> np.ndarray:
        """``Phi(x)`` from the ray quadrature of the source alone (no closed forms)."""
        return self._solve(self.source, x)

    def covariant(self, x: np.ndarray) -> np.ndarray:
        """``grad Phi + A``, the gauge-invariant combination; shape (P, 3)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = self.phase_grad(x)
        if self.model.vectors:
            out = out + self.model.A(x)
        return out

    # ------------------------------------------------------------ transport

    def _dirac(self, M: MatrixFn, x: np.ndarray, values: np.ndarray | None = None) -> np.ndarray:
        """``alpha.(-i grad + grad Phi + A) M`` at x, derivative by central differences."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        Mx = M(x) if values is None else values
        dM = fd_gradient(M, x)  # (P, 4, 4, 3)
        deriv = -1j * np.einsum("kab,pbck->pac", ALPHA, dM)
        return deriv + alpha_dot(self.covariant(x)) @ Mx

    def b(self, j: int, x: np.ndarray) -> np.ndarray:
        """``b_j(x)``; ``b_0 = 0``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if j < 0 or j > self.N + 1:
            raise ConfigError(f"b_{j} not available for N={self.N}")
        if j == 0:
            return np.zeros((x.shape[0], 4, 4), dtype=complex)
        k = self.kin
        pref = k.nu / (2.0 * k.E)
        if j == 1:
            return pref * self.P_minus @ alpha_dot(self.covariant(x)) @ self.P
        prev_b = lambda p: self.b(j - 1, p)
        prev_c = lambda p: self.c(j - 1, p)
        bj = prev_b(x)
        term_b = self._dirac(prev_b, x, bj) + self.model.V(x)[:, None, None] * bj
        term_c = self._dirac(prev_c, x)
        return pref * self.P_minus @ (term_b + term_c)

    def transport_source(self, j: int, x: np.ndarray) -> np.ndarray:
        """``-i (E/nu) P_omega(E) alpha.(-i grad + grad Phi + A) b_j``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        k = self.kin
        return -1j * (k.E / k.nu) * self.P @ self._dirac(lambda p: self.b(j, p), x)

    def c(self, j: int, x: np.ndarray) -> np.ndarray:
        """``c_j(x)``; ``c_0 = I``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if j < 0 or j > self.N:
            raise ConfigError(f"c_{j} not available for N={self.N}")
        if j == 0:
            return np.broadcast_to(np.eye(4, dtype=complex), (x.shape[0], 4, 4)).copy()
        return self._solve(lambda p: self.transport_source(j, p), x)

    # ------------------------------------------------------------ assembled objects

    def w(self, x: np.ndarray) -> np.ndarray:
        """``w_N = sum nu^-j b_j + P sum nu^-j c_j``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        nu = self.kin.nu
        bsum = np.zeros((x.shape[0], 4, 4), dtype=complex)
        csum = np.zeros_like(bsum)
        for j in range(self.N + 1):
            if j >= 1:
                bsum = bsum + nu ** (-j) * self.b(j, x)
            csum = csum + nu ** (-j) * self.c(j, x)
        return bsum + self.P @ csum

    def amplitude(self, x: np.ndarray) -> np.ndarray:
        """``a_N = exp(i Phi) w_N``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.exp(1j * self.phase(x))[:, None, None] * self.w(x)

    def eigenfunction(self, x: np.ndarray) -> np.ndarray:
        """``u_N = exp(i <x, xi>) a_N``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.exp(1j * (x @ self.xi))[:, None, None] * self.amplitude(x)

    def remainder(self, x: np.ndarray) -> np.ndarray:
        """``exp(-i<x,xi>) (H - E) u_N`` with the derivative of ``w_N`` by central differences.

        The plane-wave factor is differentiated exactly, which turns
        ``alpha.xi + m beta - E`` into ``-2E P_omega(-E)``.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        wx = self.w(x)
        k = self.kin
        inner = -2.0 * k.E * self.P_minus @ wx + self._dirac(self.w, x, wx)
        inner = inner + self.model.V(x)[:, None, None] * wx
        return np.exp(1j * self.phase(x))[:, None, None] * inner

    def remainder_closed(self, x: np.ndarray) -> np.ndarray:
        """``exp(i Phi) (2E/nu) nu^-N b_{N+1}``: the same remainder from the recursion."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        k = self.kin
        pref = (2.0 * k.E / k.nu) * k.nu ** (-self.N)
        return pref * np.exp(1j * self.phase(x))[:, None, None] * self.b(self.N + 1, x)

    def eikonal_residual(self, x: np.ndarray) -> np.ndarray:
        """``<omega, grad Phi + A> + (E/nu) V`` with ``grad Phi`` by central differences of Phi."""
        from .quadrature import fd_directional

        x = np.atleast_2d(np.asarray(x, dtype=float))
        dphi = fd_directional(self.phase, x, self.omega)
        out = dphi + (self.kin.E / self.kin.nu) * self.model.V(x)
        if self.model.vectors:
            out = out + self.model.A(x) @ self.omega
        return out


def eikonal_phase(
    model: PotentialModel, omega: np.ndarray, kin: Kinematics, sign: int, x: np.ndarray
) -> np.ndarray:
    """``Phi(x)`` for the given branch; shape (P,)."""
    return TransportExpansion(model, np.asarray(omega, dtype=float), kin, sign, 0).phase(x)


def transport_coefficients(
    model: PotentialModel, omega: np.ndarray, kin: Kinematics, sign: int, N: int, rule: RayRule = DEFAULT_RULE
) -> TransportExpansion:
    return TransportExpansion(model, np.asarray(omega, dtype=float), kin, sign, N, rule)


def approx_eigenfunction(exp: TransportExpansion, x: np.ndarray) -> np.ndarray:
    return exp.eigenfunction(x)


def remainder(exp: TransportExpansion, x: np.ndarray) -> np.ndarray:
    return exp.remainder(x)


def matrix_norm(M: np.ndarray) -> np.ndarray:
    """Largest entry modulus of each matrix in a stack."""
    return np.abs(M).reshape(M.shape[:-2] + (-1,)).max(axis=-1)


def fit_power(s: np.ndarray, values: np.ndarray) -> float:
    """Least-squares slope of ``log values`` against ``log s``."""
    s = np.asarray(s, dtype=float)
    v = np.asarray(values, dtype=float)
    if np.any(v <= 0):
        raise NumericError("power fit needs positive values")
    return float(np.polyfit(np.log(s), np.log(v), 1)[0])
