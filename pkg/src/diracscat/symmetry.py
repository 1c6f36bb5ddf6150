"""Discrete-symmetry and gauge identities of the approximate kernels.

Each discrete case maps the data ``(branch, x, omega, E)`` of an expansion to
primed data and asserts ``M op(Q) = Q' M`` for the transport coefficients
``Q = b_j, c_j`` and the amplitude ``a_N``, where ``op`` is the identity or
complex conjugation; the phase satisfies ``Phi' = kappa Phi``. Kernel-level
identities relate ``g`` at the image pairs and, when needed, at ``-E``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .amplitude import KernelEvaluator, KernelGrid, h_integrand
from .clifford import ALPHA, BETA, GAMMA, Kinematics, kinematics, unit
from .eikonal import TransportExpansion
from .errors import ConfigError
from .fields import PotentialModel, PureGauge
from .quadrature import DEFAULT_RULE, RayRule

ALPHA13 = ALPHA[0] @ ALPHA[2]


@dataclass(frozen=True)
class SymmetryCase:
    """One discrete symmetry with its potential hypothesis.

    ``v_parity``/``a_parity``: +1 even, -1 odd, 0 must vanish, None unrestricted.
    The pointwise map sends ``(branch, x, omega, E)`` to
    ``(branch_flip * branch, x_sign * x, omega_sign * omega, energy_flip * E)``.
    The kernel map sends ``(omega, theta)`` to ``(theta, omega)`` when ``swap``
    and negates both when ``negate``; ``adjoint`` marks a starred right side.
    """

    name: str
    v_parity: int | None
    a_parity: int | None
    matrix: np.ndarray
    conjugate: bool
    kappa: int
    branch_flip: int
    x_sign: int
    omega_sign: int
    energy_flip: int
    swap: bool
    negate: bool
    adjoint: bool

    @property
    def flips_energy(self) -> bool:
        return self.energy_flip == -1


CASES: dict[str, SymmetryCase] = {
    c.name: c
    for c in [
        # s(w,t;E) = beta s(-w,-t;E) beta
        SymmetryCase("parity", 1, -1, BETA, False, 1, 1, -1, -1, 1, False, True, False),
        # conj s(w,t;E) = alpha2 s(w,t;-E) alpha2
        SymmetryCase("charge-conjugation", -1, 1, ALPHA[1], True, -1, 1, -1, 1, -1, False, False, False),
        # (a1 a3) conj s(w,t;E) = s(-t,-w;E)^* (a1 a3)
        SymmetryCase("time-reversal", None, 0, ALPHA13, True, -1, -1, 1, -1, 1, True, True, True),
        # (a1 a3 beta) conj s(w,t;E) = s(t,w;E)^* (a1 a3 beta)
        SymmetryCase("TP", 1, 1, ALPHA13 @ BETA, True, -1, -1, -1, 1, 1, True, False, True),
        # s(w,t;E) = gamma s(t,w;-E)^* gamma
        SymmetryCase("CT", 0, None, GAMMA, False, 1, -1, 1, 1, -1, True, False, True),
        # s(w,t;E) = beta gamma s(-t,-w;-E)^* gamma beta
        SymmetryCase("CTP", -1, -1, GAMMA @ BETA, False, 1, -1, -1, -1, -1, True, True, True),
    ]
}

_KERNEL_SANDWICH = {
    "parity": (BETA, BETA),
    "CT": (GAMMA, GAMMA),
    "CTP": (BETA @ GAMMA, GAMMA @ BETA),
}


def get_case(name: str) -> SymmetryCase:
    if name not in CASES:
        raise ConfigError(f"unknown symmetry case {name!r}; choose from {sorted(CASES) + ['gauge']}")
    return CASES[name]


# ---------------------------------------------------------------- hypotheses


def _asymmetry(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, parity: int | None) -> float:
    if parity is None:
        return 0.0
    fx, fm = f(x), f(-x)
    scale = max(float(np.abs(fx).max()), 1.0)
    if parity == 0:
        return float(np.abs(fx).max()) / scale
    return float(np.abs(fm - parity * fx).max()) / scale


def hypothesis_asymmetry(case: SymmetryCase, model: PotentialModel, x: np.ndarray) -> float:
    """Largest relative violation of the case's parity conditions on V and A at ``x``."""
    av = _asymmetry(model.V, x, case.v_parity)
    aa = _asymmetry(model.A, x, case.a_parity) if model.vectors else 0.0
    return max(av, aa)


def check_hypothesis(case: SymmetryCase, model: PotentialModel, x: np.ndarray, tol: float = 1e-10) -> float:
    asym = hypothesis_asymmetry(case, model, x)
    if asym > tol:
        raise ConfigError(f"{case.name} precondition violated: measured asymmetry {asym:.3e}")
    return asym


# ---------------------------------------------------------------- pointwise


def _image_expansion(
    case: SymmetryCase, model: PotentialModel, kin: Kinematics, omega: np.ndarray, sign: int, N: int, rule: RayRule
) -> TransportExpansion:
    kin2 = kinematics(case.energy_flip * kin.E, kin.m)
    return TransportExpansion(model, case.omega_sign * omega, kin2, case.branch_flip * sign, N, rule)


def _matrix_residual(case: SymmetryCase, Q: np.ndarray, Q2: np.ndarray) -> float:
    M = case.matrix
    lhs = M @ (np.conj(Q) if case.conjugate else Q)
    return float(np.abs(lhs - Q2 @ M).max())


def pointwise_residual(
    case: SymmetryCase | str,
    model: PotentialModel,
    kin: Kinematics,
    points: np.ndarray,
    omega: np.ndarray,
    N: int = 1,
    enforce: bool = True,
    rule: RayRule = DEFAULT_RULE,
) -> dict[str, float]:
    """Residuals of the phase, ``b_j``, ``c_j`` and ``a_N`` identities at ``points``.

    With ``enforce`` the potential hypothesis is checked first.
    """
    case = get_case(case) if isinstance(case, str) else case
    x = np.atleast_2d(np.asarray(points, dtype=float))
    omega = unit(omega)
    asym = hypothesis_asymmetry(case, model, x)
    if enforce and asym > 1e-10:
        raise ConfigError(f"{case.name} precondition violated: measured asymmetry {asym:.3e}")
    x2 = case.x_sign * x
    out = {"phase": 0.0, "b": 0.0, "c": 0.0, "a": 0.0, "asymmetry": asym}
    for sign in (1, -1):
        e1 = TransportExpansion(model, omega, kin, sign, N, rule)
        e2 = _image_expansion(case, model, kin, omega, sign, N, rule)
        out["phase"] = max(out["phase"], float(np.abs(case.kappa * e1.phase(x) - e2.phase(x2)).max()))
        for j in range(1, N + 1):
            out["b"] = max(out["b"], _matrix_residual(case, e1.b(j, x), e2.b(j, x2)))
            out["c"] = max(out["c"], _matrix_residual(case, e1.c(j, x), e2.c(j, x2)))
        out["a"] = max(out["a"], _matrix_residual(case, e1.amplitude(x), e2.amplitude(x2)))
    out["max"] = max(out["phase"], out["b"], out["c"], out["a"])
    return out


def gauge_residual(
    model: PotentialModel,
    psi: PureGauge,
    kin: Kinematics,
    points: np.ndarray,
    omega: np.ndarray,
    theta: np.ndarray,
    omega0: np.ndarray | None = None,
    N: int = 1,
    rule: RayRule = DEFAULT_RULE,
) -> dict[str, float]:
    """Gauge invariance of ``b_j``, ``c_j`` and ``h_N`` plus the phase shift ``-psi``."""
    y = np.atleast_2d(np.asarray(points, dtype=float))
    omega, theta = unit(omega), unit(theta)
    omega0 = unit(omega if omega0 is None else omega0)
    gauged = model.with_gauge(psi)
    out = {"phase_shift": 0.0, "b": 0.0, "c": 0.0}
    for sign, d in ((1, omega), (-1, theta)):
        e1 = TransportExpansion(model, d, kin, sign, N, rule)
        e2 = TransportExpansion(gauged, d, kin, sign, N, rule)
        out["phase_shift"] = max(out["phase_shift"], float(np.abs(e2.phase(y) - e1.phase(y) + psi.psi(y)).max()))
        for j in range(1, N + 1):
            out["b"] = max(out["b"], float(np.abs(e2.b(j, y) - e1.b(j, y)).max()))
            out["c"] = max(out["c"], float(np.abs(e2.c(j, y) - e1.c(j, y)).max()))
    h1 = h_integrand(
        TransportExpansion(model, omega, kin, 1, N, rule), TransportExpansion(model, theta, kin, -1, N, rule), omega0, y
    )
    h2 = h_integrand(
        TransportExpansion(gauged, omega, kin, 1, N, rule), TransportExpansion(gauged, theta, kin, -1, N, rule), omega0, y
    )
    out["h"] = float(np.abs(h2 - h1).max())
    out["max"] = max(out.values())
    return out


# ---------------------------------------------------------------- kernels


def image_pairs(case: SymmetryCase, omegas: np.ndarray, thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pairs at which the right side of the kernel identity is evaluated."""
    w, t = (thetas, omegas) if case.swap else (omegas, thetas)
    if case.negate:
        w, t = -w, -t
    return w, t


def closed_pairs(case: SymmetryCase, omegas: np.ndarray, thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Union of the pairs and their images (a sample set closed under the case)."""
    w2, t2 = image_pairs(case, omegas, thetas)
    return np.vstack([omegas, w2]), np.vstack([thetas, t2])


def kernel_residual(case: SymmetryCase | str, grid: KernelGrid, grid_flipped: KernelGrid | None = None) -> float:
    """Largest residual of the kernel identity over the pairs of ``grid``.

    Energy-flipping cases read the right side from ``grid_flipped`` sampled at ``-E``.
    """
    case = get_case(case) if isinstance(case, str) else case
    other = grid
    if case.flips_energy:
        if grid_flipped is None or not np.isclose(grid_flipped.E, -grid.E):
            raise ConfigError(f"{case.name} needs a grid at -E")
        other = grid_flipped
    w2, t2 = image_pairs(case, grid.omegas, grid.thetas)
    M = case.matrix
    res = 0.0
    for i in range(len(grid)):
        try:
            rhs = other.lookup(w2[i], t2[i], tol=1e-9)
        except KeyError:
            raise ConfigError("sample set not closed under symmetry") from None
        g = grid.samples[i]
        if case.adjoint:
            rhs = rhs.conj().T
        lhs = M @ (np.conj(g) if case.conjugate else g)
        if case.conjugate:
            # M conj(s) = rhs M
            r = lhs - rhs @ M
        else:
            # s = L rhs R with (L, R) = (beta, beta), (gamma, gamma), (beta gamma, gamma beta)
            r = g - _KERNEL_SANDWICH[case.name][0] @ rhs @ _KERNEL_SANDWICH[case.name][1]
        res = max(res, float(np.abs(r).max()))
    return res


def kernel_grids(
    case: SymmetryCase,
    model: PotentialModel,
    kin: Kinematics,
    omegas: np.ndarray,
    thetas: np.ndarray,
    omega0: np.ndarray,
    N: int = 0,
    **options: Any,
) -> tuple[KernelGrid, KernelGrid | None]:
    """Grids on the closed sample set at ``E`` (and ``-E`` when the case flips energy)."""
    W, T = closed_pairs(case, unit(np.atleast_2d(omegas)), unit(np.atleast_2d(thetas)))

    def grid_at(k: Kinematics) -> KernelGrid:
        ev = KernelEvaluator(model, k, omega0, N=N, **options)
        return KernelGrid(k.E, k.m, ev.omega0, W, T, ev.kernels(W, T), ev.delta, N)

    g = grid_at(kin)
    return g, (grid_at(kin.flipped()) if case.flips_energy else None)


# ---------------------------------------------------------------- suite


@dataclass(frozen=True)
class SuiteEntry:
    case: str
    level: str
    hypothesis_ok: bool
    residual: float
    tolerance: float
    expect_pass: bool = True

    @property
    def passed(self) -> bool:
        ok = self.residual < self.tolerance
        return ok and self.hypothesis_ok if self.expect_pass else (not ok and not self.hypothesis_ok)

    def to_dict(self) -> dict[str, Any]:
        return {
            "case": self.case,
            "level": self.level,
            "hypothesis": self.hypothesis_ok,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "control": not self.expect_pass,
            "pass": self.passed,
        }


def default_models() -> dict[str, tuple[PotentialModel, PotentialModel]]:
    """For each case a model satisfying its hypothesis and a deliberately broken one."""
    from .fields import GaussianScalar, GaussianVector, VortexVector

    even_v = GaussianScalar(0.6, 1.0)
    shifted_v = GaussianScalar(0.6, 1.0, (0.5, 0.0, 0.0))
    odd_v = (GaussianScalar(0.6, 1.0, (0.6, 0.2, 0.0)), GaussianScalar(-0.6, 1.0, (-0.6, -0.2, 0.0)))
    odd_a = VortexVector((0.2, 0.3, 0.4), 1.0)
    even_a = GaussianVector((0.3, -0.2, 0.25), 1.0)
    M = PotentialModel
    return {
        "parity": (M((even_v,), (odd_a,)), M((shifted_v,), (odd_a,))),
        "charge-conjugation": (M(odd_v, (even_a,)), M((even_v,), (even_a,))),
        "time-reversal": (M((shifted_v,), ()), M((shifted_v,), (even_a,))),
        "TP": (M((even_v,), (even_a,)), M((even_v,), (odd_a,))),
        "CT": (M((), (odd_a, even_a)), M((shifted_v,), (odd_a,))),
        "CTP": (M(odd_v, (odd_a,)), M((even_v,), (odd_a,))),
    }


def run_suite(
    kin: Kinematics | None = None,
    n_points: int = 50,
    seed: int = 0,
    kernels: bool = True,
    pointwise_tol: float = 1e-7,
    kernel_tol: float = 1e-5,
    N: int = 1,
) -> list[SuiteEntry]:
    """Pointwise and kernel identities on their hypothesis classes plus negative controls."""
    kin = kin or kinematics(2.0, 1.0)
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2.0, 2.0, size=(n_points, 3))
    omega = unit(np.array([0.3, -0.2, 1.0]))
    entries: list[SuiteEntry] = []
    omega0 = np.array([0.0, 0.0, 1.0])
    ws = unit(np.array([[0.1, 0.05, 1.0], [-0.2, 0.1, 1.0]]))
    ts = unit(np.array([[0.3, -0.1, 1.0], [0.05, 0.25, 1.0]]))
    for name, (good, bad) in default_models().items():
        case = CASES[name]
        r = pointwise_residual(case, good, kin, x, omega, N=N)
        entries.append(SuiteEntry(name, "pointwise", True, r["max"], pointwise_tol))
        rb = pointwise_residual(case, bad, kin, x, omega, N=N, enforce=False)
        entries.append(SuiteEntry(name, "pointwise", rb["asymmetry"] <= 1e-10, rb["max"], 1e-2, expect_pass=False))
        if kernels:
            g, gf = kernel_grids(case, good, kin, ws, ts, omega0)
            entries.append(SuiteEntry(name, "kernel", True, kernel_residual(case, g, gf), kernel_tol))
            g, gf = kernel_grids(case, bad, kin, ws, ts, omega0)
            entries.append(
                SuiteEntry(name, "kernel", hypothesis_asymmetry(case, bad, x) <= 1e-10, kernel_residual(case, g, gf),
                           kernel_tol, expect_pass=False)
            )
    # gauge: exact identity, also for large gauge functions
    base = default_models()["parity"][0]
    for amp in (1.0, 10.0):
        psi = PureGauge(amp, 1.2, (0.3, -0.1, 0.2))
        r = gauge_residual(base, psi, kin, x[:20], omega, unit(omega + np.array([0.2, 0.0, 0.0])), N=N)
        entries.append(SuiteEntry("gauge", "pointwise", True, r["max"], 1e-8 if amp == 1.0 else 1e-6))
    return entries


def suite_report(entries: list[SuiteEntry]) -> dict[str, Any]:
    return {"entries": [e.to_dict() for e in entries], "all_pass": all(e.passed for e in entries)}
