"""Reconstruction of V and B from scattering data.

High-energy route: sample the limit kernel on a frequency grid of each plane,
recover the phase ``R(y, omega)`` by an inverse plane transform and phase
unwrapping, split it into parts even and odd in omega, and invert the X-ray
transform by Fourier slice assembly.

Fixed-energy route: compute the symbol ``a(y, omega; E)`` near the diagonal,
fit its leading homogeneous term on scaling shells, identify that term with
``-i (nu/|E|) R P_omega``, invert, subtract the forward map of what was found,
and repeat.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
from scipy.fft import fftn, fftshift, ifftn, ifftshift
from scipy.optimize import minimize
from scipy.special import roots_jacobi

from .amplitude import KernelGrid, chart_weight, limit_phase
from .clifford import Kinematics, orthonormal_frame, projector_infinite, unit
from .errors import ConfigError, NumericError
from .fields import (
    SH_INDICES,
    AngularProfile,
    HomogeneousScalar,
    HomogeneousVector,
    PotentialModel,
    real_sph_harm,
)
from .io import write_json
from .quadrature import DEFAULT_RULE, RayRule, fibonacci_sphere

MIN_DIRECTIONS = 60
DEFAULT_DIRECTIONS = 120

# ---------------------------------------------------------------- centred transforms


def centred_axis(n: int, step: float) -> np.ndarray:
    """``(j - n/2) step`` for j = 0..n-1; n must be even."""
    if n % 2:
        raise ConfigError("grid size must be even")
    return (np.arange(n) - n // 2) * step


def dual_step(n: int, step: float) -> float:
    return 2 * math.pi / (n * step)


def forward_transform(f: np.ndarray, step: float, axes: Sequence[int]) -> np.ndarray:
    """``sum_j exp(-i x_j xi_k) f_j step^d`` on centred grids along ``axes``."""
    axes = tuple(axes)
    return step ** len(axes) * fftshift(fftn(ifftshift(f, axes=axes), axes=axes), axes=axes)


def inverse_transform(F: np.ndarray, step: float, axes: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`forward_transform`; ``step`` is the spatial step."""
    axes = tuple(axes)
    return step ** (-len(axes)) * fftshift(ifftn(ifftshift(F, axes=axes), axes=axes), axes=axes)


# ---------------------------------------------------------------- limit data


@dataclass(frozen=True)
class PlaneGrid:
    """Cartesian grid on ``Pi_omega`` with frame ``(e1, e2)``; ``n`` points per side."""

    omega: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    n: int
    half_width: float

    @classmethod
    def build(cls, omega: np.ndarray, n: int = 128, half_width: float = 16.0, frame: tuple | None = None) -> "PlaneGrid":
        omega = unit(omega)
        if frame is None:
            e1, e2 = orthonormal_frame(omega)
        else:
            e1, e2 = (np.asarray(v, dtype=float) for v in frame)
            if abs(e1 @ omega) > 1e-12 or abs(e2 @ omega) > 1e-12:
                raise ConfigError("frame vectors must be orthogonal to omega")
        return cls(omega, e1, e2, int(n), float(half_width))

    @property
    def step(self) -> float:
        return 2 * self.half_width / self.n

    @property
    def axis(self) -> np.ndarray:
        return centred_axis(self.n, self.step)

    @property
    def freq_axis(self) -> np.ndarray:
        return centred_axis(self.n, dual_step(self.n, self.step))

    def points(self) -> np.ndarray:
        a = self.axis
        return a[:, None, None] * self.e1 + a[None, :, None] * self.e2

    def frequencies(self) -> np.ndarray:
        k = self.freq_axis
        return k[:, None, None] * self.e1 + k[None, :, None] * self.e2

    def flipped(self) -> "PlaneGrid":
        """The same points regarded as a grid on ``Pi_{-omega}``."""
        return PlaneGrid(-self.omega, self.e1, self.e2, self.n, self.half_width)


@dataclass(frozen=True)
class LimitData:
    """Regular part of the high-energy limit kernel on a frequency grid of ``Pi_omega``.

    The limit is ``scalar(eta) P_omega(+-inf)``; the scalar factor and the
    projector are stored separately and :meth:`entry` rebuilds matrix entries.
    """

    grid: PlaneGrid
    branch: int
    scalar: np.ndarray
    projector: np.ndarray

    def __post_init__(self) -> None:
        if self.branch not in (1, -1):
            raise ConfigError("branch must be +1 or -1")
        if self.scalar.shape != (self.grid.n, self.grid.n):
            raise ConfigError("limit samples do not match the frequency grid")

    @property
    def omega(self) -> np.ndarray:
        return self.grid.omega

    def entry(self, i: int, j: int) -> np.ndarray:
        return self.scalar * self.projector[i, j]

    def values(self) -> np.ndarray:
        """Full ``(n, n, 4, 4)`` array; memory heavy for large grids."""
        return self.scalar[..., None, None] * self.projector


def synthesize_limit(
    model: PotentialModel,
    grid: PlaneGrid,
    branch: int,
    rule: RayRule = DEFAULT_RULE,
) -> LimitData:
    """Limit kernel ``(2 pi)^{-2} int exp(-i<y, eta>)(exp(-iR) - 1) dy P`` on the dual grid."""
    R = limit_phase(model, grid.omega, branch, grid.points().reshape(-1, 3), rule).reshape(grid.n, grid.n)
    F = forward_transform(np.expm1(-1j * R), grid.step, (0, 1)) / (2 * math.pi) ** 2
    return LimitData(grid, branch, F, projector_infinite(grid.omega, branch))


def recover_R(limit: LimitData, unimodular_tol: float = 1e-3, max_jump: float = 0.9 * math.pi) -> np.ndarray:
    """``R(y, omega; +-inf)`` on the spatial grid of ``limit.grid``.

    The inverse plane transform gives ``(exp(-iR) - 1) P``; the (1,1) entry of
    ``P(+-inf)`` is 1/2. The phase is unwrapped along rows and then along
    columns starting from the grid edge, where R vanishes.
    """
    grid = limit.grid
    m11 = inverse_transform(limit.entry(0, 0), grid.step, (0, 1)) * (2 * math.pi) ** 2 / 0.5
    u = 1.0 + m11
    dev = float(np.abs(np.abs(u) - 1.0).max())
    if dev > unimodular_tol:
        raise NumericError(f"non-unimodular data: max | |exp(-iR)| - 1 | = {dev:.3g}")
    wrapped = -np.angle(u)
    n = grid.n
    # edges: track along the first column, then along each row from it
    col = np.unwrap(wrapped[:, 0])
    rows = np.unwrap(np.concatenate([col[:, None], wrapped[:, 1:]], axis=1), axis=1)
    # the other path order must give the same phase; otherwise a 2 pi jump is undetermined
    row = np.unwrap(wrapped[0])
    cols = np.unwrap(np.concatenate([row[None], wrapped[1:]], axis=0), axis=0)
    mismatch = float(np.abs(rows - cols).max())
    if mismatch > math.pi:
        raise NumericError(f"phase wrap ambiguity: unwrapping paths disagree by {mismatch:.3g} rad")
    for axis in (0, 1):
        jump = float(np.abs(np.diff(rows, axis=axis)).max()) if n > 1 else 0.0
        if jump > max_jump:
            raise NumericError(f"phase wrap ambiguity: adjacent samples differ by {jump:.3g} rad")
    # R -> 0 at infinity fixes the global 2 pi multiple
    edge = np.concatenate([rows[0], rows[-1], rows[:, 0], rows[:, -1]])
    shift = 2 * math.pi * round(float(np.median(edge)) / (2 * math.pi))
    return rows - shift


def split_even_odd(R_first: np.ndarray, R_second: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(R_e, R_m)`` from R at (omega, -omega) or at branches (+, -) on common points."""
    return 0.5 * (R_first + R_second), 0.5 * (R_first - R_second)


# ---------------------------------------------------------------- Fourier slice inversion


@dataclass(frozen=True)
class SpaceGrid:
    """Cubic centred grid with ``n`` points per side on ``[-half_width, half_width)``."""

    n: int = 64
    half_width: float = 6.0

    @property
    def step(self) -> float:
        return 2 * self.half_width / self.n

    @property
    def axis(self) -> np.ndarray:
        return centred_axis(self.n, self.step)

    @property
    def freq_axis(self) -> np.ndarray:
        return centred_axis(self.n, dual_step(self.n, self.step))

    def points(self) -> np.ndarray:
        a = self.axis
        return np.stack(np.meshgrid(a, a, a, indexing="ij"), axis=-1)

    def frequencies(self) -> np.ndarray:
        k = self.freq_axis
        return np.stack(np.meshgrid(k, k, k, indexing="ij"), axis=-1)

    def metadata(self) -> dict[str, Any]:
        return {"n": self.n, "half_width": self.half_width, "step": self.step}


@dataclass(frozen=True)
class SliceData:
    """X-ray data ``R(omega_i, y)`` on one plane grid per direction (common size)."""

    grids: tuple[PlaneGrid, ...]
    values: np.ndarray  # (n_dirs, n, n) real

    def __post_init__(self) -> None:
        if self.values.shape[0] != len(self.grids):
            raise ConfigError("one data plane per direction required")

    @property
    def directions(self) -> np.ndarray:
        return np.array([g.omega for g in self.grids])

    def spectra(self) -> np.ndarray:
        """Plane transforms ``int exp(-i<y, eta>) R(omega, y) dy`` on each dual grid."""
        step = self.grids[0].step
        return forward_transform(self.values.astype(complex), step, (1, 2))


def _shell_radius(xi_mag: np.ndarray, n_dirs: int, planes_wanted: float, floor: float) -> np.ndarray:
    # a band |<xi_hat, omega>| < eps holds about n_dirs * eps of the directions
    return np.maximum(xi_mag * planes_wanted / n_dirs, floor)


def _plane_samples(spec: np.ndarray, grid: PlaneGrid, pts: np.ndarray) -> np.ndarray:
    """Cubic interpolation of one plane spectrum at in-plane points ``pts`` (P, 3)."""
    from scipy.ndimage import map_coordinates

    dk = dual_step(grid.n, grid.step)
    i = pts @ grid.e1 / dk + grid.n // 2
    j = pts @ grid.e2 / dk + grid.n // 2
    coords = np.stack([i, j])
    re = map_coordinates(spec.real, coords, order=3, mode="constant", cval=0.0)
    im = map_coordinates(spec.imag, coords, order=3, mode="constant", cval=0.0)
    return re + 1j * im


def _slice_pass(
    data: SliceData,
    space: SpaceGrid,
    planes_wanted: float,
    visit: Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray], None],
) -> None:
    """For every direction, call ``visit(idx, weight, value, omega, xi)`` on nearby targets."""
    xi = space.frequencies().reshape(-1, 3)
    mag = np.linalg.norm(xi, axis=-1)
    n_dirs = len(data.grids)
    radius = _shell_radius(mag, n_dirs, planes_wanted, 0.25 * dual_step(space.n, space.step))
    spectra = data.spectra()
    kmax = data.grids[0].freq_axis.max()
    inside = mag <= kmax
    for grid, spec in zip(data.grids, spectra):
        dist = np.abs(xi @ grid.omega)
        idx = np.nonzero(inside & (dist <= radius))[0]
        if idx.size == 0:
            continue
        proj = xi[idx] - np.outer(xi[idx] @ grid.omega, grid.omega)
        w = 1.0 / (dist[idx] + 0.1 * radius[idx]) ** 2
        visit(idx, w, _plane_samples(spec, grid, proj), grid.omega, xi[idx])


def _check_coverage(data: SliceData) -> None:
    if len(data.grids) < MIN_DIRECTIONS:
        raise ConfigError(
            f"insufficient angular coverage: {len(data.grids)} directions, need at least {MIN_DIRECTIONS}"
        )


def invert_xray_scalar(data: SliceData, space: SpaceGrid = SpaceGrid(), planes_wanted: float = 8.0) -> np.ndarray:
    """Scalar field whose full-line X-ray transform is ``data``, on ``space``."""
    _check_coverage(data)
    N = space.n**3
    num = np.zeros(N, dtype=complex)
    den = np.zeros(N)

    def visit(idx, w, val, omega, xi):
        np.add.at(num, idx, w * val)
        np.add.at(den, idx, w)

    _slice_pass(data, space, planes_wanted, visit)
    F = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0).reshape((space.n,) * 3)
    return np.real(inverse_transform(F, space.step, (0, 1, 2)))


def _perp_basis(xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal ``f1, f2`` orthogonal to each row of ``xi`` (rows nonzero)."""
    u = xi / np.linalg.norm(xi, axis=-1, keepdims=True)
    trial = np.where(np.abs(u[:, :1]) < 0.9, np.array([[1.0, 0, 0]]), np.array([[0, 1.0, 0]]))
    f1 = trial - np.sum(trial * u, axis=-1, keepdims=True) * u
    f1 /= np.linalg.norm(f1, axis=-1, keepdims=True)
    return f1, np.cross(u, f1)


def invert_xray_magnetic(
    data: SliceData,
    space: SpaceGrid = SpaceGrid(),
    planes_wanted: float = 8.0,
    rank_tol: float = 1e-3,
) -> np.ndarray:
    """Magnetic field ``B`` (n, n, n, 3) from ``R_m(omega, y) = int <omega, A>``.

    Each plane sample near ``xi`` measures ``<omega, A_hat(xi)>``; a weighted
    least-squares fit over directions gives the part of ``A_hat`` orthogonal to
    ``xi``, and ``B_hat = i xi x A_hat`` is divergence-free by construction.
    """
    _check_coverage(data)
    xi_all = space.frequencies().reshape(-1, 3)
    N = xi_all.shape[0]
    mag = np.linalg.norm(xi_all, axis=-1)
    live = mag > 0
    f1 = np.zeros((N, 3))
    f2 = np.zeros((N, 3))
    f1[live], f2[live] = _perp_basis(xi_all[live])
    normal = np.zeros((N, 2, 2))
    rhs = np.zeros((N, 2), dtype=complex)

    def visit(idx, w, val, omega, xi):
        a = np.stack([f1[idx] @ omega, f2[idx] @ omega], axis=-1)
        np.add.at(normal, idx, w[:, None, None] * a[:, :, None] * a[:, None, :])
        np.add.at(rhs, idx, (w * val)[:, None] * a)

    _slice_pass(data, space, planes_wanted, visit)
    tr = np.trace(normal, axis1=1, axis2=2)
    covered = live & (tr > 0)
    ev = np.linalg.eigvalsh(normal[covered])
    bad = ev[:, 0] < rank_tol * ev[:, 1]
    if np.any(bad):
        worst = float(mag[covered][bad].min())
        raise NumericError(
            f"rank deficiency: fewer than 2 independent directions orthogonal to a frequency of size {worst:.3g}"
        )
    coef = np.zeros((N, 2), dtype=complex)
    coef[covered] = np.linalg.solve(normal[covered], rhs[covered][..., None])[..., 0]
    A_perp = coef[:, :1] * f1 + coef[:, 1:] * f2
    B_hat = 1j * np.cross(xi_all, A_perp).reshape((space.n,) * 3 + (3,))
    return np.real(inverse_transform(B_hat, space.step, (0, 1, 2)))


def spectral_divergence(B: np.ndarray, space: SpaceGrid) -> float:
    """``max |div B| / max |grad B|`` computed spectrally on the periodic grid."""
    F = forward_transform(B.astype(complex), space.step, (0, 1, 2))
    xi = space.frequencies()
    div = inverse_transform(1j * np.sum(xi * F, axis=-1), space.step, (0, 1, 2))
    scale = inverse_transform(np.linalg.norm(xi, axis=-1)[..., None] * F, space.step, (0, 1, 2))
    return float(np.abs(div).max() / max(np.abs(scale).max(), 1e-300))


def relative_l2(estimate: np.ndarray, truth: np.ndarray) -> float:
    nt = float(np.linalg.norm(truth))
    diff = float(np.linalg.norm(estimate - truth))
    return diff if nt == 0 else diff / nt


# ---------------------------------------------------------------- results


@dataclass(frozen=True)
class HomogeneousTerm:
    """One recovered asymptotic term: order of V (or of A) and its angular data."""

    kind: str  # "electric" or "magnetic"
    rho: float
    profile: tuple[float, ...]  # coefficients on SH_INDICES; three blocks for magnetic
    fit_residual: float = 0.0

    def field_term(self, cut_radius: float = 1.0) -> HomogeneousScalar | HomogeneousVector:
        k = len(SH_INDICES)
        if self.kind == "electric":
            return HomogeneousScalar(AngularProfile(dict(zip(SH_INDICES, self.profile))), self.rho, cut_radius)
        blocks = tuple(
            AngularProfile(dict(zip(SH_INDICES, self.profile[i * k : (i + 1) * k]))) for i in range(3)
        )
        return HomogeneousVector(blocks, self.rho, cut_radius)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "rho": self.rho, "profile": list(self.profile), "fit_residual": self.fit_residual}


@dataclass
class ReconstructionResult:
    space: SpaceGrid | None = None
    V_grid: np.ndarray | None = None
    B_grid: np.ndarray | None = None
    directions: np.ndarray | None = None
    R_e: np.ndarray | None = None
    R_m: np.ndarray | None = None
    homogeneous_terms: list[HomogeneousTerm] = field(default_factory=list)
    errors: dict[str, float] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "errors": dict(self.errors),
            "meta": dict(self.meta),
            "homogeneous_terms": [t.to_dict() for t in self.homogeneous_terms],
        }
        if self.space is not None:
            out["space"] = self.space.metadata()
        if self.directions is not None:
            out["directions"] = self.directions
        if self.B_grid is not None and self.space is not None:
            out["divergence_B"] = spectral_divergence(self.B_grid, self.space)
        return out

    def save(self, out_dir: str | Path, stem: str = "reconstruction") -> list[Path]:
        """JSON summary plus little-endian float64 grids, each with a JSON sidecar."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = [write_json(out_dir / f"{stem}.json", self.to_dict())]
        arrays = {"V": self.V_grid, "B": self.B_grid, "R_e": self.R_e, "R_m": self.R_m}
        for name, arr in arrays.items():
            if arr is None:
                continue
            path = out_dir / f"{stem}_{name}.bin"
            np.ascontiguousarray(arr, dtype="<f8").tofile(path)
            side = {"dtype": "float64", "byteorder": "little", "order": "C", "shape": list(arr.shape)}
            if self.space is not None and name in ("V", "B"):
                side["grid"] = self.space.metadata()
            written += [path, write_json(path.with_suffix(".json"), side)]
        return written

    @staticmethod
    def load_array(path: str | Path) -> np.ndarray:
        from .io import read_json

        path = Path(path)
        side = read_json(path.with_suffix(".json"))
        return np.fromfile(path, dtype="<f8").reshape(side["shape"])


# ---------------------------------------------------------------- high-energy pipeline


def direction_phases(
    model: PotentialModel, grid: PlaneGrid, rule: RayRule = DEFAULT_RULE
) -> tuple[np.ndarray, np.ndarray]:
    """``(R_+, R_-)`` recovered from synthesized limit data on both branches."""
    return tuple(recover_R(synthesize_limit(model, grid, b, rule)) for b in (1, -1))  # type: ignore[return-value]


def split_paths_agree(model: PotentialModel, grid: PlaneGrid, rule: RayRule = DEFAULT_RULE) -> float:
    """Largest difference between the branch-flip and omega-flip splittings at one direction."""
    Rp, Rn = direction_phases(model, grid, rule)
    Rflip = recover_R(synthesize_limit(model, grid.flipped(), 1, rule))
    e1, m1 = split_even_odd(Rp, Rn)
    e2, m2 = split_even_odd(Rp, Rflip)
    return float(max(np.abs(e1 - e2).max(), np.abs(m1 - m2).max()))


def reconstruct_high_energy(
    model: PotentialModel,
    n_directions: int = DEFAULT_DIRECTIONS,
    plane_n: int = 128,
    plane_half_width: float = 16.0,
    space: SpaceGrid = SpaceGrid(),
    jobs: int = 1,
    compare: bool = True,
    rule: RayRule = DEFAULT_RULE,
) -> ReconstructionResult:
    """Limit data -> R -> (R_e, R_m) -> (V, B) over a Fibonacci direction set."""
    if n_directions < MIN_DIRECTIONS:
        raise ConfigError(
            f"insufficient angular coverage: {n_directions} directions, need at least {MIN_DIRECTIONS}"
        )
    dirs = fibonacci_sphere(n_directions)
    grids = tuple(PlaneGrid.build(w, plane_n, plane_half_width) for w in dirs)

    def one(g: PlaneGrid) -> tuple[np.ndarray, np.ndarray]:
        return split_even_odd(*direction_phases(model, g, rule))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(one, grids))
    else:
        parts = [one(g) for g in grids]
    R_e = np.array([p[0] for p in parts])
    R_m = np.array([p[1] for p in parts])
    V = invert_xray_scalar(SliceData(grids, R_e), space)
    B = invert_xray_magnetic(SliceData(grids, R_m), space)
    result = ReconstructionResult(
        space, V, B, dirs, R_e, R_m,
        meta={"n_directions": n_directions, "plane_n": plane_n, "plane_half_width": plane_half_width},
    )
    if compare:
        X = space.points()
        result.errors["V_rel_l2"] = relative_l2(V, model.V(X))
        if model.vectors:
            Bt = model.B(X.reshape(-1, 3)).reshape(B.shape)
            result.errors["B_rel_l2"] = relative_l2(B, Bt)
        else:
            result.errors["B_max"] = float(np.abs(B).max())
    return result


# ---------------------------------------------------------------- fixed-energy symbol


def symbol_from_amplitude(
    model: PotentialModel,
    kin: Kinematics,
    omega: np.ndarray,
    y: np.ndarray,
    N: int = 0,
    rule: RayRule = DEFAULT_RULE,
) -> np.ndarray:
    """Leading symbol ``a(y, omega; E) = h_N(y, omega, omega)`` for y in ``Pi_omega``; (P, 4, 4).

    This is the zeroth term of the amplitude-to-symbol expansion; inside the
    chart the cutoff equals one. With no potential it is ``(nu/|E|) P_omega``.
    """
    from .amplitude import h_integrand
    from .eikonal import TransportExpansion

    omega = unit(omega)
    plus = TransportExpansion(model, omega, kin, 1, N, rule)
    minus = TransportExpansion(model, omega, kin, -1, N, rule)
    return h_integrand(plus, minus, omega, np.atleast_2d(y))


def theta_lattice(omega: np.ndarray, step: float, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Directions ``theta`` whose projections on ``Pi_omega`` form a cell-centred square lattice.

    Returns ``(thetas, tilde)`` with ``tilde`` the in-plane coordinates (M, 2).
    """
    omega = unit(omega)
    e1, e2 = orthonormal_frame(omega)
    n = int(math.ceil(radius / step))
    ax = (np.arange(-n, n) + 0.5) * step
    T = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1).reshape(-1, 2)
    T = T[np.linalg.norm(T, axis=-1) < radius]
    c = np.sqrt(1.0 - np.sum(T * T, axis=-1))
    thetas = T[:, :1] * e1 + T[:, 1:] * e2 + c[:, None] * omega
    return thetas, T


def fixed_energy_symbol(
    grid: KernelGrid,
    omega: np.ndarray,
    y: np.ndarray,
    step: float,
    singular: tuple[Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray], np.ndarray]] | None = None,
    delta: float | None = None,
    delta_prime: float | None = None,
) -> np.ndarray:
    """``a(y, omega; E)`` from kernel samples on a lattice built by :func:`theta_lattice`.

    ``a = (nu/|E|) P_omega + (nu/|E|) int exp(-i nu <y, theta~>) g(omega, theta) Psi d theta~``,
    the inverse of ``g = (2 pi)^{-2} upsilon^2 int exp(i nu <y, theta~>) h dy``.
    ``singular = (g_s, a_s)`` optionally removes a known singular part ``g_s`` of
    the kernel before the lattice sum and adds its exact transform ``a_s(y)`` back.
    """
    from .amplitude import DELTA, DELTA_PRIME
    from .clifford import kinematics

    kin = kinematics(grid.E, grid.m)
    omega = unit(omega)
    y = np.atleast_2d(np.asarray(y, dtype=float))
    ymax = float(np.linalg.norm(y, axis=-1).max())
    if kin.nu * step * ymax >= math.pi:
        raise NumericError(
            f"insufficient theta resolution: lattice step {step:.3g} aliases |y| up to {ymax:.3g} (need nu*step*|y| < pi)"
        )
    sel = np.linalg.norm(grid.omegas - omega, axis=-1) < 1e-12
    thetas = grid.thetas[sel]
    g = grid.samples[sel]
    if thetas.shape[0] == 0:
        raise ConfigError("kernel grid holds no samples at this omega")
    e1, e2 = orthonormal_frame(omega)
    tilde = np.stack([thetas @ e1, thetas @ e2], axis=-1)
    c = thetas @ omega
    psi = chart_weight(c, DELTA if delta is None else delta, DELTA_PRIME if delta_prime is None else delta_prime)
    vals = g.copy()
    if singular is not None:
        vals = vals - psi[:, None, None] * singular[0](thetas)
    # g already carries the chart cutoff; the lattice weight is the cell area
    phase = np.exp(-1j * kin.nu * (np.stack([y @ e1, y @ e2], axis=-1) @ tilde.T))
    integral = np.einsum("pm,mij->pij", phase, vals) * step**2
    a = (1.0 / kin.ratio) * (kin.projector(omega)[None] + integral)
    if singular is not None:
        a = a + singular[1](y)
    return a


# ---------------------------------------------------------------- homogeneous peel


def sh_basis(u: np.ndarray) -> np.ndarray:
    """Real spherical harmonics with l <= 2 at unit vectors; shape (..., 9)."""
    return np.stack([real_sph_harm(l, m, u) for l, m in SH_INDICES], axis=-1)


def great_circle_transform(
    f: Callable[[np.ndarray], np.ndarray], yhat: np.ndarray, omega: np.ndarray, rho: float, nodes: int = 24
) -> np.ndarray:
    """``int_{-pi/2}^{pi/2} cos(a)^{rho-2} f(cos(a) yhat + sin(a) omega) da``.

    This is the X-ray of ``|x|^{-rho} f(x/|x|)`` at ``y = yhat`` (|y| = 1). With
    ``u = sin a`` the parts even and odd in ``cos a`` are integrated by
    Gauss-Jacobi rules, exactly for polynomial profiles.
    """
    if not rho > 1:
        raise ConfigError("homogeneity exponent must exceed 1")
    yhat = np.atleast_2d(yhat)
    omega = np.atleast_2d(omega)
    out = 0.0
    for expo, parity in (((rho - 3) / 2, 1), ((rho - 2) / 2, -1)):
        u, w = roots_jacobi(nodes, expo, expo)
        c = np.sqrt(1.0 - u * u)
        up = c[None, :, None] * yhat[:, None, :] + u[None, :, None] * omega[:, None, :]
        dn = -c[None, :, None] * yhat[:, None, :] + u[None, :, None] * omega[:, None, :]
        fp, fd = f(up), f(dn)
        part = 0.5 * (fp + parity * fd)
        if parity < 0:
            part = part / (c[None, :, None] if part.ndim == 3 else c[None, :])
        wt = w[None, :, None] if part.ndim == 3 else w[None, :]
        out = out + np.sum(wt * part, axis=1)
    return out


@dataclass(frozen=True)
class SymbolSamples:
    """Normalized subtracted symbol ``a_11 / ((nu/|E|) P_11) - 1`` on scaling shells.

    Rows ``0..n-1`` hold directions ``omega_i`` and rows ``n..2n-1`` hold
    ``-omega_i``; both use the frame ``(e1_i, e2_i)`` so the plane points agree.
    """

    kin: Kinematics
    directions: np.ndarray  # (n, 3)
    frames: np.ndarray  # (n, 2, 3)
    radii: np.ndarray  # (K,)
    phis: np.ndarray  # (F,)
    values: np.ndarray  # (2n, K, F) complex

    @property
    def n(self) -> int:
        return self.directions.shape[0]

    def omegas(self) -> np.ndarray:
        return np.concatenate([self.directions, -self.directions])

    def yhat(self) -> np.ndarray:
        """Unit in-plane vectors, (n, F, 3)."""
        c, s = np.cos(self.phis), np.sin(self.phis)
        return c[None, :, None] * self.frames[:, None, 0] + s[None, :, None] * self.frames[:, None, 1]

    def points(self, i: int) -> np.ndarray:
        """Plane points for row ``i`` of ``values``, (K*F, 3)."""
        yh = self.yhat()[i % self.n]
        return (self.radii[:, None, None] * yh[None]).reshape(-1, 3)

    def with_values(self, values: np.ndarray) -> "SymbolSamples":
        return SymbolSamples(self.kin, self.directions, self.frames, self.radii, self.phis, values)


def sample_symbol(
    model: PotentialModel,
    kin: Kinematics,
    n_directions: int = 12,
    radii: Sequence[float] | None = None,
    n_phi: int = 12,
    N: int = 0,
    jobs: int = 1,
    rule: RayRule = DEFAULT_RULE,
) -> SymbolSamples:
    """Sample the amplitude-route symbol of ``model`` at ``+-omega`` on shells ``4 <= |y| <= 64``."""
    radii = np.geomspace(4.0, 64.0, 9) if radii is None else np.asarray(radii, dtype=float)
    dirs = fibonacci_sphere(n_directions)
    frames = np.array([orthonormal_frame(w) for w in dirs])
    phis = 2 * math.pi * np.arange(n_phi) / n_phi
    shell = SymbolSamples(kin, dirs, frames, radii, phis, np.zeros((2 * len(dirs), len(radii), n_phi), complex))
    return shell.with_values(_sample_values(model, shell, N, jobs, rule))


def _sample_values(model: PotentialModel, shell: SymbolSamples, N: int, jobs: int, rule: RayRule) -> np.ndarray:
    kin = shell.kin
    scale = kin.projector(shell.directions[0])[0, 0] / kin.ratio
    omegas = shell.omegas()

    def one(i: int) -> np.ndarray:
        a = symbol_from_amplitude(model, kin, omegas[i], shell.points(i), N, rule)
        return (a[:, 0, 0] / scale - 1.0).reshape(len(shell.radii), len(shell.phis))

    idx = range(omegas.shape[0])
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, idx))
    else:
        rows = [one(i) for i in idx]
    return np.array(rows)


@dataclass(frozen=True)
class OrderFit:
    orders: tuple[float, ...]
    coefficients: np.ndarray  # (S, J): coefficient of r^{orders[j]} per sample
    relative_residual: float


def _varpro(radii: np.ndarray, data: np.ndarray, orders: Sequence[float]) -> tuple[np.ndarray, float]:
    """Per-sample least squares on ``sum_j c_j r^{p_j}`` with shells weighted to unit size."""
    scale = np.sqrt(np.mean(np.abs(data) ** 2, axis=0))
    scale = np.where(scale > 0, scale, 1.0)
    D = radii[:, None] ** np.asarray(orders)[None, :] / scale[:, None]
    target = (data / scale[None, :]).T
    coef, *_ = np.linalg.lstsq(D, target, rcond=None)
    res = target - D @ coef
    return coef.T, float(np.linalg.norm(res) / max(np.linalg.norm(target), 1e-300))


def fit_orders(radii: np.ndarray, data: np.ndarray, single_tol: float = 1e-4, min_gap: float = 0.1) -> OrderFit:
    """Leading homogeneous order of ``data`` (S, K) over shells ``radii``.

    A single power is used when it fits to ``single_tol``; otherwise a second,
    lower power absorbs the next term of the expansion and is discarded.
    """
    radii = np.asarray(radii, dtype=float)
    grid = np.arange(-3.0, 0.001, 0.02)
    one = [(_varpro(radii, data, (p,))[1], p) for p in grid]
    p0 = min(one)[1]
    fit1 = minimize(lambda v: _varpro(radii, data, (v[0],))[1], [p0], method="Nelder-Mead",
                    options={"xatol": 1e-7, "fatol": 1e-12})
    p1 = float(fit1.x[0])
    coef, res = _varpro(radii, data, (p1,))
    if res <= single_tol:
        return OrderFit((p1,), coef, res)

    def two(v: np.ndarray) -> float:
        a, gap = v
        if gap < min_gap:
            return 1.0 + (min_gap - gap)
        return _varpro(radii, data, (a, a - gap))[1]

    starts = [(two(np.array([a, g])), a, g) for a in grid[::2] for g in np.arange(0.2, 2.01, 0.1)]
    _, a0, g0 = min(starts)
    fit2 = minimize(two, [a0, g0], method="Nelder-Mead", options={"xatol": 1e-7, "fatol": 1e-12, "maxiter": 4000})
    a, gap = (float(v) for v in fit2.x)
    coef, res2 = _varpro(radii, data, (a, a - gap))
    if res2 >= res:
        return OrderFit((p1,), *_varpro(radii, data, (p1,)))
    return OrderFit((a, a - gap), coef, res2)


@dataclass(frozen=True)
class PeelStep:
    rho: float
    fit: OrderFit
    electric: HomogeneousTerm | None
    magnetic: HomogeneousTerm | None
    residual_before: float
    residual_after: float

    def model(self, cut_radius: float = 1.0) -> PotentialModel:
        sc = (self.electric.field_term(cut_radius),) if self.electric else ()
        ve = (self.magnetic.field_term(cut_radius),) if self.magnetic else ()
        return PotentialModel(sc, ve)

    def to_dict(self) -> dict[str, Any]:
        return {
            "rho": self.rho,
            "orders": list(self.fit.orders),
            "fit_residual": self.fit.relative_residual,
            "electric": self.electric.to_dict() if self.electric else None,
            "magnetic": self.magnetic.to_dict() if self.magnetic else None,
            "residual_before": self.residual_before,
            "residual_after": self.residual_after,
        }


def _profile_fit(
    samples: SymbolSamples, unit_values: np.ndarray, rho: float, presence_tol: float
) -> tuple[HomogeneousTerm | None, HomogeneousTerm | None]:
    """Angular profiles of V_j and A_j from the unit-shell X-ray data ``unit_values`` (2n, F)."""
    kin = samples.kin
    n = samples.n
    first, second = unit_values[:n], unit_values[n:]
    # R = (|E|/nu) R_e + sgn(E) R_m, with R_e even and R_m odd in omega at fixed y
    Re = np.real(0.5 * (first + second)) / kin.ratio
    Rm = np.real(0.5 * (first - second)) * kin.sign
    yh = samples.yhat().reshape(-1, 3)
    om = np.repeat(samples.directions, len(samples.phis), axis=0)
    M = great_circle_transform(sh_basis, yh, om, rho)  # (n*F, 9)
    total = max(np.linalg.norm(Re), np.linalg.norm(Rm), 1e-300)
    electric = magnetic = None
    if np.linalg.norm(Re) > presence_tol * total:
        c, *_ = np.linalg.lstsq(M, Re.reshape(-1), rcond=None)
        res = np.linalg.norm(M @ c - Re.reshape(-1)) / np.linalg.norm(Re)
        electric = HomogeneousTerm("electric", rho, tuple(float(v) for v in c), float(res))
    if np.linalg.norm(Rm) > presence_tol * total:
        D = np.concatenate([om[:, k : k + 1] * M for k in range(3)], axis=1)  # (n*F, 27)
        c, *_ = np.linalg.lstsq(D, Rm.reshape(-1), rcond=1e-10)
        res = np.linalg.norm(D @ c - Rm.reshape(-1)) / np.linalg.norm(Rm)
        magnetic = HomogeneousTerm("magnetic", rho, tuple(float(v) for v in c), float(res))
    return electric, magnetic


def symbol_phase(values: np.ndarray) -> np.ndarray:
    """``i log(1 + s)`` of the normalized subtracted symbol ``s``.

    The leading symbol is ``(nu/|E|) exp(-i R) P_omega`` up to lower-order
    terms, so this phase is ``R`` plus lower-order terms and contributions of
    different potential terms add instead of multiplying.
    """
    return 1j * np.log1p(values)


def homogeneous_peel(
    samples: SymbolSamples,
    max_terms: int = 2,
    min_separation: float = 0.3,
    presence_tol: float = 1e-2,
    N: int = 0,
    rule: RayRule = DEFAULT_RULE,
) -> list[PeelStep]:
    """Recover up to ``max_terms`` homogeneous terms from symbol samples, leading first.

    Each step fits the leading order of the symbol phase on the shells,
    identifies the leading term with ``-i (nu/|E|) R P_omega``, inverts the great-circle transform for
    the angular profiles of ``V_j`` and ``A_j``, and subtracts the forward symbol
    of all terms found so far from the original data.
    """
    steps: list[PeelStep] = []
    target = symbol_phase(samples.values)
    current = target
    found = PotentialModel()
    for _ in range(max_terms):
        before = float(np.linalg.norm(current))
        if before == 0.0:
            break
        data = current.transpose(0, 2, 1).reshape(-1, len(samples.radii))
        fit = fit_orders(samples.radii, data)
        rho = 1.0 - fit.orders[0]
        if not rho > 1.0:
            raise NumericError(f"order separation too small: fitted decay {rho:.3g} is not above 1")
        for prev in steps:
            if abs(rho - prev.rho) < min_separation:
                raise NumericError(
                    f"order separation too small: {rho:.3f} vs {prev.rho:.3f} (need {min_separation})"
                )
        unit_values = fit.coefficients[:, 0].reshape(2 * samples.n, len(samples.phis))
        electric, magnetic = _profile_fit(samples, unit_values, rho, presence_tol)
        step_model = PotentialModel(
            (electric.field_term(),) if electric else (), (magnetic.field_term(),) if magnetic else ()
        )
        found = found + step_model
        # subtract the forward symbol of everything found so far from the original data
        after_values = target - symbol_phase(_sample_values(found, samples, N, 1, rule))
        after = float(np.linalg.norm(after_values))
        if not after < before:
            raise NumericError(f"peel residual not decreasing: {before:.3g} -> {after:.3g}")
        steps.append(PeelStep(rho, fit, electric, magnetic, before, after))
        current = after_values
    return steps
