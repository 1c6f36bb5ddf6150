"""Dirac matrices, kinematic scalars and spectral projectors.

All matrix-valued functions broadcast over leading axes: a momentum array of
shape ``(..., 3)`` produces matrices of shape ``(..., 4, 4)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SpectralGapError

SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)
_Z2 = np.zeros((2, 2), dtype=complex)


def _block(a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray) -> np.ndarray:
    return np.block([[a, b], [c, d]])


ALPHA = np.stack([_block(_Z2, s, s, _Z2) for s in SIGMA])
BETA = _block(I2, _Z2, _Z2, -I2)
# gamma = alpha_1 alpha_2 alpha_3 beta, used by the CT and CTP identities
GAMMA = ALPHA[0] @ ALPHA[1] @ ALPHA[2] @ BETA
# upper / lower spinor projectors onto the diagonal blocks
P_UPPER = _block(I2, _Z2, _Z2, _Z2)
P_LOWER = _block(_Z2, _Z2, _Z2, I2)


def dirac_matrices() -> tuple[np.ndarray, np.ndarray]:
    """Return ``(alpha, beta)`` in the standard representation.

    ``alpha`` has shape (3, 4, 4) with off-diagonal Pauli blocks and
    ``beta = diag(1, 1, -1, -1)``.
    """
    return ALPHA.copy(), BETA.copy()


def all_generators() -> np.ndarray:
    """The four anticommuting generators alpha_1, alpha_2, alpha_3, beta."""
    return np.concatenate([ALPHA, BETA[None]], axis=0)


def alpha_dot(v: np.ndarray) -> np.ndarray:
    """``alpha . v`` for vectors of shape (..., 3); complex v allowed."""
    v = np.asarray(v)
    return np.einsum("...k,kij->...ij", v, ALPHA)


def dagger(M: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(M, -1, -2))


def _check_mass(m: float) -> None:
    if not m > 0:
        raise ConfigError(f"mass must be positive, got m={m}")


def free_symbol(xi: np.ndarray, m: float) -> np.ndarray:
    """The free Dirac symbol ``alpha . xi + m beta``."""
    xi = np.asarray(xi, dtype=float)
    return alpha_dot(xi) + m * BETA


def spectral_projector(xi: np.ndarray, m: float, branch: int) -> np.ndarray:
    """Orthogonal projector onto the ``branch``-energy eigenspace of the symbol.

    ``P(xi) = (I + branch * (alpha.xi + m beta) / sqrt(xi^2 + m^2)) / 2``.
    ``xi = 0`` is allowed.
    """
    _check_mass(m)
    if branch not in (1, -1):
        raise ConfigError(f"branch must be +1 or -1, got {branch}")
    xi = np.asarray(xi, dtype=float)
    norm = np.sqrt(np.sum(xi**2, axis=-1) + m * m)
    h = free_symbol(xi, m) / norm[..., None, None]
    return 0.5 * (I4 + branch * h)


def projector_infinite(omega: np.ndarray, branch: int) -> np.ndarray:
    """Infinite-energy projector ``(I + branch * alpha.omega) / 2``."""
    if branch not in (1, -1):
        raise ConfigError(f"branch must be +1 or -1, got {branch}")
    return 0.5 * (I4 + branch * alpha_dot(np.asarray(omega, dtype=float)))


def fw_angle(t: np.ndarray, m: float) -> np.ndarray:
    """``arctan(t/m) / (2t)`` extended continuously by ``1/(2m)`` at t = 0."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    small = np.abs(t) < 1e-8 * m
    ts = t[~small]
    out[~small] = np.arctan(ts / m) / (2 * ts)
    # series arctan(u)/u = 1 - u^2/3 + ...
    u2 = (t[small] / m) ** 2
    out[small] = (1 - u2 / 3) / (2 * m)
    return out


def fw_matrix(xi: np.ndarray, m: float) -> np.ndarray:
    """Unitary ``exp(beta (alpha.xi) theta(|xi|))`` diagonalizing the free symbol.

    Uses ``(beta alpha.xi)^2 = -|xi|^2 I`` so the exponential is
    ``cos(|xi| theta) I + sin(|xi| theta) beta alpha.xi / |xi|``.
    """
    _check_mass(m)
    xi = np.asarray(xi, dtype=float)
    t = np.sqrt(np.sum(xi**2, axis=-1))
    phi = t * fw_angle(t, m)
    safe = np.where(t > 0, t, 1.0)
    gen = BETA @ alpha_dot(xi / safe[..., None])
    return np.cos(phi)[..., None, None] * I4 + np.sin(phi)[..., None, None] * gen


@dataclass(frozen=True)
class Kinematics:
    """Energy-dependent scalars for a fixed mass and energy outside the gap."""

    m: float
    E: float
    nu: float
    upsilon: float
    sign: int

    def lam(self, xi: np.ndarray) -> np.ndarray:
        """``sgn(E) sqrt(xi^2 + m^2)``."""
        xi = np.asarray(xi, dtype=float)
        return self.sign * np.sqrt(np.sum(xi**2, axis=-1) + self.m**2)

    def projector(self, omega: np.ndarray) -> np.ndarray:
        """``P_omega(E)``, the projector at momentum ``nu * omega`` on branch sgn E."""
        return spectral_projector(self.nu * np.asarray(omega, dtype=float), self.m, self.sign)

    def flipped(self) -> "Kinematics":
        """Same mass at energy ``-E``."""
        return kinematics(-self.E, self.m)

    @property
    def ratio(self) -> float:
        """``|E| / nu``, the weight of the electric potential in the eikonal equation."""
        return abs(self.E) / self.nu


def kinematics(E: float, m: float) -> Kinematics:
    _check_mass(m)
    if not abs(E) > m:
        raise SpectralGapError(E, m)
    nu = float(np.sqrt(E * E - m * m))
    upsilon = float((E * E * (E * E - m * m)) ** 0.25)
    return Kinematics(m=float(m), E=float(E), nu=nu, upsilon=upsilon, sign=1 if E > 0 else -1)


def kinematics_from_nu(nu: float, m: float, sign: int = 1) -> Kinematics:
    """Kinematics at momentum magnitude ``nu`` on the given energy branch."""
    return kinematics(sign * float(np.sqrt(nu * nu + m * m)), m)


def unit(v: np.ndarray) -> np.ndarray:
    """Normalize vectors along the last axis."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0):
        raise ConfigError("direction vector must be nonzero")
    return v / n


def orthonormal_frame(omega: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors spanning the plane orthogonal to ``omega`` (single vector)."""
    omega = unit(omega)
    trial = np.array([1.0, 0.0, 0.0]) if abs(omega[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = unit(trial - np.dot(trial, omega) * omega)
    e2 = np.cross(omega, e1)
    return e1, e2
