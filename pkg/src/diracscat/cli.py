"""Command-line driver: forward kernels, reconstructions and verification suites.

Every run writes data files plus ``manifest.json`` (config hash, library
version, timings). Failures write ``error.json`` and exit with 1 for numeric
failures or 2 for configuration errors.

Precedence for settings: command-line flag, then ``DIRACSCAT_*`` environment
variable, then the config file, then built-in defaults.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np
import scipy

from . import __version__
from .amplitude import (
    cross_section,
    eikonal_cross_section,
    leading_singularity,
    singular_kernel,
)
from .clifford import kinematics, unit
from .errors import ConfigError, DiracScatError
from .fields import PotentialModel, PureGauge, build_potential_model, load_catalog
from .inverse import (
    SpaceGrid,
    reconstruct_high_energy,
    sample_symbol,
    homogeneous_peel,
)
from .io import write_csv, write_json

ENV_PREFIX = "DIRACSCAT_"
COMMANDS = ("forward", "recon-he", "recon-fe", "symmetry", "xsection", "gauge")
log = logging.getLogger("diracscat")


@dataclass
class RunConfig:
    command: str
    potential: PotentialModel
    potential_spec: Mapping[str, Any]
    m: float
    energies: tuple[float, ...]
    N: tuple[int, ...]
    grid: dict[str, Any]
    tolerances: dict[str, float]
    output_dir: Path
    seed: int
    jobs: int
    raw: dict[str, Any] = field(default_factory=dict)

    @property
    def kin(self):
        return kinematics(self.energies[0], self.m)

    def hash(self) -> str:
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------- config


def _env(name: str) -> str | None:
    return os.environ.get(ENV_PREFIX + name)


def _as_tuple(v: Any, conv: Callable[[Any], Any]) -> tuple:
    if isinstance(v, (list, tuple)):
        return tuple(conv(x) for x in v)
    return (conv(v),)


def load_config(args: argparse.Namespace) -> RunConfig:
    """Merge flags, environment and the config file into a validated RunConfig."""
    path = args.config or _env("CONFIG")
    raw: dict[str, Any] = {}
    if path:
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    raw = dict(raw)
    kin_raw = dict(raw.get("kinematics", {}))
    for key, conv in (("E", float), ("M", float)):
        val = _env(key)
        if val is not None:
            kin_raw[key.lower() if key == "M" else key] = conv(val)
    if _env("N_ORDER") is not None:
        raw["N"] = int(_env("N_ORDER"))
    raw["kinematics"] = kin_raw
    try:
        m = float(kin_raw.get("m", 1.0))
        energies = _as_tuple(kin_raw.get("E", 2.0), float)
        N = _as_tuple(raw.get("N", 0), int)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad kinematics: {exc}") from exc
    for E in energies:
        kinematics(E, m)  # raises "inside spectral gap"
    if any(n < 0 for n in N):
        raise ConfigError("expansion order N must be non-negative")

    if "catalog" in raw:
        models = load_catalog(raw["catalog"])
        name = raw.get("model")
        if name not in models:
            raise ConfigError(f"unknown catalog model {name!r}")
        spec = models[name].to_spec()
        model = models[name]
    else:
        spec = raw.get("potential", {"kind": "sum", "terms": []})
        model = build_potential_model(spec)

    seed = args.seed if args.seed is not None else int(_env("SEED") or raw.get("seed", 0))
    jobs = args.jobs if args.jobs is not None else int(_env("JOBS") or raw.get("jobs", os.cpu_count() or 1))
    out = args.out or _env("OUT") or raw.get("output_dir", "out")
    if jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    raw["seed"] = seed
    return RunConfig(
        command=args.command,
        potential=model,
        potential_spec=spec,
        m=m,
        energies=energies,
        N=N,
        grid=dict(raw.get("grid", {})),
        tolerances={k: float(v) for k, v in dict(raw.get("tolerances", {})).items()},
        output_dir=Path(out),
        seed=seed,
        jobs=jobs,
        raw=raw,
    )


def _vec(v: Any, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,) or not np.linalg.norm(arr) > 0:
        raise ConfigError(f"{name} must be a nonzero 3-vector")
    return unit(arr)


# ---------------------------------------------------------------- commands


def _ring(omega0: np.ndarray, angles: list[float], n_azimuth: int) -> np.ndarray:
    from .clifford import orthonormal_frame

    e1, e2 = orthonormal_frame(omega0)
    out = []
    for a in angles:
        for k in range(n_azimuth):
            phi = 2 * np.pi * k / n_azimuth
            out.append(np.cos(a) * omega0 + np.sin(a) * (np.cos(phi) * e1 + np.sin(phi) * e2))
    return np.array(out)


def run_forward(cfg: RunConfig) -> dict[str, Any]:
    omega0 = _vec(cfg.grid.get("omega0", [0, 0, 1]), "grid.omega0")
    angles = [float(a) for a in cfg.grid.get("angles", [0.05, 0.1, 0.2])]
    thetas = _ring(omega0, angles, int(cfg.grid.get("n_azimuth", 4)))
    omegas = np.repeat(omega0[None], thetas.shape[0], axis=0)
    kin = cfg.kin
    out: dict[str, Any] = {"files": []}
    grids = {}
    for N in cfg.N:
        grid, _ = singular_kernel(omegas, thetas, cfg.potential, kin, N, omega0=omega0, jobs=cfg.jobs)
        stem = cfg.output_dir / f"kernel_N{N}"
        grid.save(stem.with_suffix(".csv"), stem.with_suffix(".json"))
        out["files"] += [f"kernel_N{N}.csv", f"kernel_N{N}.json"]
        grids[N] = grid
    if len(cfg.N) > 1:
        base = grids[cfg.N[0]].samples
        out["max_abs_difference"] = {
            f"N{n}-N{cfg.N[0]}": float(np.abs(grids[n].samples - base).max()) for n in cfg.N[1:]
        }
    rows = []
    g0 = grids[cfg.N[0]]
    for w, t, g in zip(g0.omegas, g0.thetas, g0.samples):
        lead = leading_singularity(cfg.potential, kin, w, t)
        scale = max(float(np.abs(lead).max()), 1e-300)
        rows.append([float(np.arccos(np.clip(w @ t, -1, 1))), float(np.abs(g).max()), float(np.abs(lead).max()),
                     float(np.abs(g - lead).max()) / scale if np.abs(lead).max() > 0 else 0.0])
    write_csv(cfg.output_dir / "leading.csv", ["angle", "max_abs_kernel", "max_abs_leading", "relative_difference"], rows)
    out["files"].append("leading.csv")
    return out


def run_reconstruct(cfg: RunConfig) -> dict[str, Any]:
    if cfg.command == "recon-he":
        n_dirs = int(cfg.grid.get("n_directions", 0))
        space = SpaceGrid(int(cfg.grid.get("space_n", 64)), float(cfg.grid.get("space_half_width", 6.0)))
        res = reconstruct_high_energy(
            cfg.potential,
            n_directions=n_dirs,
            plane_n=int(cfg.grid.get("plane_n", 128)),
            plane_half_width=float(cfg.grid.get("plane_half_width", 16.0)),
            space=space,
            jobs=cfg.jobs,
        )
        files = [p.name for p in res.save(cfg.output_dir)]
        return {"files": files, "errors": res.errors}
    kin = cfg.kin
    samples = sample_symbol(
        cfg.potential,
        kin,
        n_directions=int(cfg.grid.get("n_directions", 12)),
        n_phi=int(cfg.grid.get("n_phi", 12)),
        N=cfg.N[0],
        jobs=cfg.jobs,
    )
    steps = homogeneous_peel(samples, max_terms=int(cfg.grid.get("max_terms", 1)), N=cfg.N[0])
    summary: dict[str, Any] = {"steps": [s.to_dict() for s in steps]}
    truth = sorted(
        [t.rho for t in cfg.potential.scalars + cfg.potential.vectors if hasattr(t, "homogeneous")]
    )
    if truth:
        summary["true_orders"] = truth
        summary["order_errors"] = [abs(s.rho - r) for s, r in zip(steps, truth)]
    write_json(cfg.output_dir / "peel.json", summary)
    return {"files": ["peel.json"], "summary": summary}


def run_symmetry(cfg: RunConfig) -> dict[str, Any]:
    from .symmetry import run_suite, suite_report

    entries = run_suite(
        cfg.kin,
        n_points=int(cfg.grid.get("n_points", 50)),
        seed=cfg.seed,
        kernels=bool(cfg.grid.get("kernels", True)),
        pointwise_tol=cfg.tolerances.get("pointwise", 1e-7),
        kernel_tol=cfg.tolerances.get("kernel", 1e-5),
        N=max(cfg.N[0], 1),
    )
    report = suite_report(entries)
    write_json(cfg.output_dir / "report.json", report)
    return {"files": ["report.json"], "all_pass": report["all_pass"]}


def run_xsection(cfg: RunConfig) -> dict[str, Any]:
    kin = cfg.kin
    theta = _vec(cfg.grid.get("theta", [0, 0, 1]), "grid.theta")
    P = kin.projector(theta)
    # normalized spinor in the range of P_theta: the column of largest norm
    col = P[:, int(np.argmax(np.linalg.norm(P, axis=0)))]
    u = col / np.linalg.norm(col)
    cs = cross_section(cfg.potential, kin, theta, u, N=cfg.N[0], direct=bool(cfg.grid.get("direct", False)))
    out = {"sigma": cs.sigma, "direct": cs.direct, "optical_residual": cs.optical_residual}
    if np.isfinite(cfg.potential.reach):
        out["eikonal_sigma"] = kin.upsilon**2 * (2 * np.pi) ** -2 * eikonal_cross_section(cfg.potential, theta)
    write_json(cfg.output_dir / "xsection.json", out)
    return {"files": ["xsection.json"], **out}


def run_gauge(cfg: RunConfig) -> dict[str, Any]:
    from .symmetry import gauge_residual

    g = cfg.grid.get("gauge", {})
    psi = PureGauge(float(g.get("amplitude", 1.0)), float(g.get("width", 1.0)),
                    tuple(float(c) for c in g.get("center", (0.0, 0.0, 0.0))))
    rng = np.random.default_rng(cfg.seed)
    pts = rng.uniform(-2.0, 2.0, size=(int(cfg.grid.get("n_points", 20)), 3))
    omega = _vec(cfg.grid.get("omega", [0, 0, 1]), "grid.omega")
    theta = _vec(cfg.grid.get("theta", [0.2, 0, 1]), "grid.theta")
    res = gauge_residual(cfg.potential, psi, cfg.kin, pts, omega, theta, N=max(cfg.N[0], 1))
    tol = cfg.tolerances.get("gauge", 1e-8)
    out = {"residuals": res, "tolerance": tol, "passed": bool(res["max"] <= tol)}
    write_json(cfg.output_dir / "gauge.json", out)
    return {"files": ["gauge.json"], **out}


RUNNERS: dict[str, Callable[[RunConfig], dict[str, Any]]] = {
    "forward": run_forward,
    "recon-he": run_reconstruct,
    "recon-fe": run_reconstruct,
    "symmetry": run_symmetry,
    "xsection": run_xsection,
    "gauge": run_gauge,
}


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="diracscat", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--jobs", type=int, help="worker threads (default: machine parallelism)")
    p.add_argument("--seed", type=int, help="seed for randomized sampling")
    p.add_argument("--verbose", action="store_true", help="log progress to stderr")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def _manifest(cfg: RunConfig | None, command: str, result: dict[str, Any], seconds: float) -> dict[str, Any]:
    return {
        "command": command,
        "config_hash": cfg.hash() if cfg else None,
        "config": cfg.raw if cfg else None,
        "version": __version__,
        "versions": {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__},
        "seed": cfg.seed if cfg else None,
        "timings": {"total_seconds": seconds},
        "result": result,
    }


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    verbose = args.verbose or (_env("VERBOSE") or "").lower() in ("1", "true", "yes")
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out_dir = Path(args.out or _env("OUT") or "out")
    cfg: RunConfig | None = None
    start = time.perf_counter()
    try:
        cfg = load_config(args)
        out_dir = cfg.output_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        log.info("running %s with config hash %s", cfg.command, cfg.hash()[:12])
        result = RUNNERS[cfg.command](cfg)
        write_json(out_dir / "manifest.json", _manifest(cfg, args.command, result, time.perf_counter() - start))
        log.info("done in %.1f s", time.perf_counter() - start)
        return 0
    except DiracScatError as exc:
        code = exc.exit_code
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        print(f"diracscat: error: {exc}", file=sys.stderr)
        try:
            write_json(out_dir / "error.json", err)
        except OSError:
            pass
        return code


if __name__ == "__main__":
    sys.exit(main())
