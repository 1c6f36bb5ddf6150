"""Fixed-node quadrature rules shared by the physics modules.

Ray integrals use nodes that depend smoothly on the base point, so finite
differences of ray integrals are as clean as the integrals themselves.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ConfigError, NumericError

ArrayFn = Callable[[np.ndarray], np.ndarray]


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Cached Gauss-Legendre nodes and weights on [-1, 1]."""
    g, w = np.polynomial.legendre.leggauss(n)
    g.flags.writeable = False
    w.flags.writeable = False
    return g, w


@dataclass(frozen=True)
class RayRule:
    """Parameters of the half-line rule.

    The far piece ``[t_c, inf)`` uses an exp-sinh map with trapezoid step
    ``h`` on ``u in [u_min, u_max]``. The near piece ``[0, t_c]`` uses
    Gauss-Legendre nodes in a sinh-stretched variable.
    """

    h: float = 1.0 / 12.0
    u_min: float = -3.7
    u_max: float = 4.3
    near_nodes: int = 48
    max_evals: int = 400_000
    check_tail: bool = True

    def far_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        u = np.arange(self.u_min, self.u_max + 0.5 * self.h, self.h)
        s = 0.5 * np.pi * np.sinh(u)
        tau = np.exp(s)
        w = self.h * 0.5 * np.pi * np.cosh(u) * tau
        return tau, w

    def near_gl(self) -> tuple[np.ndarray, np.ndarray]:
        return gauss_legendre(self.near_nodes)


DEFAULT_RULE = RayRule()
FINE_RULE = RayRule(h=1.0 / 24.0, near_nodes=96)


def ray_nodes(
    x: np.ndarray, d: np.ndarray, rule: RayRule = DEFAULT_RULE
) -> tuple[np.ndarray, np.ndarray]:
    """Nodes ``t`` and weights for integrating ``t -> f(x + t d)`` over ``[0, inf)``.

    ``x`` has shape (P, 3), ``d`` shape (3,) or (P, 3) with unit rows.
    Returns arrays of shape (P, K).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = np.broadcast_to(np.asarray(d, dtype=float), x.shape)
    xd = np.sum(x * d, axis=-1)
    tc = np.maximum(0.0, -xd)
    closest = x + tc[:, None] * d
    ell = np.sqrt(1.0 + np.sum(closest**2, axis=-1))

    tau, wf = rule.far_nodes()
    t_far = tc[:, None] + ell[:, None] * tau[None, :]
    w_far = ell[:, None] * wf[None, :]

    # near piece: t = t_c - ell sinh(v), v in [0, asinh(t_c / ell)]
    g, gw = rule.near_gl()
    vmax = np.arcsinh(tc / ell)
    v = 0.5 * vmax[:, None] * (g[None, :] + 1.0)
    t_near = tc[:, None] - ell[:, None] * np.sinh(v)
    w_near = 0.5 * vmax[:, None] * gw[None, :] * ell[:, None] * np.cosh(v)
    return np.concatenate([t_near, t_far], axis=1), np.concatenate([w_near, w_far], axis=1)


def _tail_exponent(f: ArrayFn, x: np.ndarray, d: np.ndarray, T: float) -> np.ndarray:
    pts = np.concatenate([x + T * d, x + 2 * T * d], axis=0)
    vals = np.asarray(f(pts))
    n = x.shape[0]
    a = np.abs(vals[:n]).reshape(n, -1).max(axis=1)
    b = np.abs(vals[n:]).reshape(n, -1).max(axis=1)
    out = np.full(n, np.inf)
    ok = (a > 1e-300) & (b > 0)
    out[ok] = np.log2(a[ok] / b[ok])
    return out


def ray_integral(
    f: ArrayFn,
    x: np.ndarray,
    d: np.ndarray,
    rule: RayRule = DEFAULT_RULE,
) -> np.ndarray:
    """``int_0^inf f(x + t d) dt`` for each row of ``x``.

    ``f`` maps points of shape (n, 3) to values of shape (n, ...). The result
    has shape (P, ...). Raises ``NumericError`` if the integrand visibly
    decays no faster than ``1/t``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = np.broadcast_to(np.asarray(d, dtype=float), x.shape)
    if rule.check_tail:
        T = 1e6 * (1.0 + np.max(np.linalg.norm(x, axis=-1)))
        expo = _tail_exponent(f, x[:1], d[:1], T)
        if np.any(expo < 1.05):
            raise NumericError(
                f"integrand decays like t^-{float(np.min(expo)):.3f} along the ray; not integrable"
            )
    P = x.shape[0]
    t0, _ = ray_nodes(x[:1], d[:1], rule)
    batch = max(1, rule.max_evals // t0.shape[1])
    out = None
    for start in range(0, P, batch):
        xs, ds = x[start : start + batch], d[start : start + batch]
        t, w = ray_nodes(xs, ds, rule)
        K = t.shape[1]
        pts = xs[:, None, :] + t[..., None] * ds[:, None, :]
        vals = np.asarray(f(pts.reshape(-1, 3)))
        vals = vals.reshape((xs.shape[0], K) + vals.shape[1:])
        res = np.einsum("pk,pk...->p...", w, vals)
        if out is None:
            out = np.empty((P,) + res.shape[1:], dtype=res.dtype)
        out[start : start + xs.shape[0]] = res
    assert out is not None
    if not np.all(np.isfinite(out)):
        raise NumericError("non-finite ray integral")
    return out


def ball_exit(x: np.ndarray, d: np.ndarray, radius: float) -> np.ndarray:
    """Parameter ``t >= 0`` at which ``x + t d`` leaves the ball ``|p| <= radius`` (0 if never inside)."""
    xd = np.sum(x * d, axis=-1)
    disc = xd**2 - np.sum(x * x, axis=-1) + radius**2
    exit_t = np.maximum(0.0, -xd + np.sqrt(np.maximum(disc, 0.0)))
    return np.where(disc > 0, exit_t, 0.0)


def ray_integral_ball(
    f: ArrayFn,
    x: np.ndarray,
    d: np.ndarray,
    radius: float,
    rule: RayRule = DEFAULT_RULE,
    panels: int = 16,
    nodes: int = 16,
) -> np.ndarray:
    """``int_0^inf f(x + t d) dt`` for integrands with steep smooth features inside ``|p| <= radius``.

    The chord inside the ball is covered by composite Gauss-Legendre panels
    and the rest by the half-line rule started at the exit point.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = np.broadcast_to(np.asarray(d, dtype=float), x.shape)
    a = ball_exit(x, d, radius)
    out = ray_integral(f, x + a[:, None] * d, d, rule)
    rows = np.nonzero(a > 0)[0]
    if rows.size == 0:
        return out
    g, w = gauss_legendre(nodes)
    k = np.arange(panels)
    batch = max(1, rule.max_evals // (panels * nodes))
    for start in range(0, rows.size, batch):
        idx = rows[start : start + batch]
        h = a[idx] / panels
        # (B, panels * nodes) positions along the chord
        t = ((k[None, :, None] + 0.5 * (g[None, None, :] + 1.0)) * h[:, None, None]).reshape(idx.size, -1)
        pts = x[idx][:, None, :] + t[..., None] * d[idx][:, None, :]
        vals = np.asarray(f(pts.reshape(-1, 3)))
        vals = vals.reshape((idx.size, t.shape[1]) + vals.shape[1:])
        wt = np.broadcast_to(0.5 * w[None, None, :] * h[:, None, None], (idx.size, panels, nodes)).reshape(idx.size, -1)
        out[idx] = out[idx] + np.einsum("pk,pk...->p...", wt, vals)
    return out


def line_integral(
    f: ArrayFn, x: np.ndarray, d: np.ndarray, rule: RayRule = DEFAULT_RULE
) -> np.ndarray:
    """``int_R f(x + t d) dt``: sum of the two half-line integrals."""
    d = np.asarray(d, dtype=float)
    return ray_integral(f, x, d, rule) + ray_integral(f, x, -d, rule)


def fd_step(x: np.ndarray) -> np.ndarray:
    """Finite-difference step ``max(1e-3, 1e-4 (1 + |x|))`` per point."""
    return np.maximum(1e-3, 1e-4 * (1.0 + np.linalg.norm(x, axis=-1)))


def fd_gradient(f: ArrayFn, x: np.ndarray, h: np.ndarray | None = None) -> np.ndarray:
    """Fourth-order central-difference gradient; result shape (P, ..., 3)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    P = x.shape[0]
    h = fd_step(x) if h is None else np.broadcast_to(h, (P,))
    shifts = []
    for k in range(3):
        e = np.zeros(3)
        e[k] = 1.0
        for c in (2.0, 1.0, -1.0, -2.0):
            shifts.append(x + c * h[:, None] * e)
    vals = np.asarray(f(np.concatenate(shifts, axis=0)))
    vals = vals.reshape((3, 4, P) + vals.shape[1:])
    hh = h.reshape((P,) + (1,) * (vals.ndim - 3))
    grad = (-vals[:, 0] + 8 * vals[:, 1] - 8 * vals[:, 2] + vals[:, 3]) / (12 * hh)
    return np.moveaxis(grad, 0, -1)


def fd_directional(f: ArrayFn, x: np.ndarray, d: np.ndarray, h: np.ndarray | None = None) -> np.ndarray:
    """Fourth-order central difference of ``f`` along the directions ``d``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = np.broadcast_to(np.asarray(d, dtype=float), x.shape)
    P = x.shape[0]
    h = fd_step(x) if h is None else np.broadcast_to(h, (P,))
    pts = np.concatenate([x + c * h[:, None] * d for c in (2.0, 1.0, -1.0, -2.0)], axis=0)
    vals = np.asarray(f(pts))
    vals = vals.reshape((4, P) + vals.shape[1:])
    hh = h.reshape((P,) + (1,) * (vals.ndim - 2))
    return (-vals[0] + 8 * vals[1] - 8 * vals[2] + vals[3]) / (12 * hh)


def fibonacci_sphere(n: int) -> np.ndarray:
    """``n`` nearly uniform unit vectors on the sphere."""
    if n < 1:
        raise ConfigError("need at least one direction")
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = np.pi * (1.0 + np.sqrt(5.0)) * i
    r = np.sqrt(1.0 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def smooth_step(s: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for s <= 0, 1 for s >= 1."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = (s > 0) & (s < 1)
    out[s >= 1] = 1.0
    si = s[inside]
    a = np.exp(-1.0 / si)
    b = np.exp(-1.0 / (1.0 - si))
    out[inside] = a / (a + b)
    return out


def smooth_step_deriv(s: np.ndarray) -> np.ndarray:
    """Derivative of :func:`smooth_step`."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = (s > 0) & (s < 1)
    si = s[inside]
    a = np.exp(-1.0 / si)
    b = np.exp(-1.0 / (1.0 - si))
    da = a / si**2
    db = -b / (1.0 - si) ** 2
    out[inside] = (da * (a + b) - a * (da + db)) / (a + b) ** 2
    return out


def smooth_step_deriv2(s: np.ndarray) -> np.ndarray:
    """Second derivative of :func:`smooth_step`."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = (s > 0) & (s < 1)
    si = s[inside]
    t = 1.0 - si
    a = np.exp(-1.0 / si)
    b = np.exp(-1.0 / t)
    d = a + b
    da = a / si**2
    db = -b / t**2
    dda = a * (1.0 / si**4 - 2.0 / si**3)
    ddb = b * (1.0 / t**4 - 2.0 / t**3)
    num1 = da * b - a * db
    out[inside] = (dda * b - a * ddb) / d**2 - 2.0 * num1 * (da + db) / d**3
    return out


def radial_window(r: np.ndarray, Y: float) -> np.ndarray:
    """Smooth cutoff equal to 1 for ``r <= Y/2`` and 0 for ``r >= Y``."""
    return 1.0 - smooth_step(2.0 * np.asarray(r) / Y - 1.0)


@dataclass(frozen=True)
class PolarRule:
    """Tensor rule on a disc of radius ``Y`` in polar coordinates.

    Radial panels ``[0, r0], [r0, 2 r0], ...`` with Gauss-Legendre nodes and
    a periodic trapezoid rule in angle. When the oscillation frequency ``k``
    of the integrand is given, each panel gets enough nodes to resolve the
    phase ``k r`` it spans; otherwise the fixed counts are used.
    """

    r0: float = 0.05
    radial_nodes: int = 32
    angular_nodes: int = 128
    min_radial: int = 16
    min_angular: int = 32
    max_radial: int = 96
    max_angular: int = 1024

    def _panel_counts(self, a: float, b: float, k: float | None) -> tuple[int, int]:
        if k is None:
            return self.radial_nodes, self.angular_nodes
        nr = int(np.clip(self.min_radial + np.ceil(0.8 * k * (b - a)), self.min_radial, self.max_radial))
        target = 1.3 * k * b + self.min_angular
        na = int(np.clip(2 ** int(np.ceil(np.log2(target))), self.min_angular, self.max_angular))
        return nr, na

    def nodes(self, Y: float, k: float | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(r, phi, weight)`` flattened; the weight includes ``r dr dphi``."""
        if Y <= 0:
            raise ConfigError("disc radius must be positive")
        edges = [0.0]
        r = min(self.r0, Y)
        while r < Y:
            edges.append(r)
            r *= 2.0
        edges.append(Y)
        rs, ps, ws = [], [], []
        for a, b in zip(edges[:-1], edges[1:]):
            nr, na = self._panel_counts(a, b, k)
            g, gw = gauss_legendre(nr)
            rr = 0.5 * (b - a) * (g + 1) + a
            wr = 0.5 * (b - a) * gw * rr
            phi = 2 * np.pi * np.arange(na) / na
            R, PHI = np.meshgrid(rr, phi, indexing="ij")
            rs.append(R.ravel())
            ps.append(PHI.ravel())
            ws.append(np.repeat(wr * (2 * np.pi / na), na))
        return np.concatenate(rs), np.concatenate(ps), np.concatenate(ws)


def plane_points(omega: np.ndarray, r: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Points ``r (cos phi e1 + sin phi e2)`` in the plane orthogonal to ``omega``."""
    from .clifford import orthonormal_frame

    e1, e2 = orthonormal_frame(omega)
    return r[:, None] * (np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2)
