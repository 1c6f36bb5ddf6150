"""Compare the scattering kernel near the diagonal with its leading singular term."""
from __future__ import annotations

import numpy as np

from diracscat.amplitude import leading_singularity, singular_kernel
from diracscat.clifford import kinematics, orthonormal_frame
from diracscat.fields import build_potential_model


def main() -> None:
    model = build_potential_model({"kind": "homogeneous-tail", "rho": 2.0, "angular": 0.05})
    kin = kinematics(2**0.5, 1.0)
    omega = np.array([0.0, 0.0, 1.0])
    e1, _ = orthonormal_frame(omega)
    angles = np.array([0.4, 0.2, 0.1, 0.05])
    thetas = np.cos(angles)[:, None] * omega + np.sin(angles)[:, None] * e1
    grid, _ = singular_kernel(np.repeat(omega[None], len(angles), 0), thetas, model, kin, 0, omega0=omega)
    for a, t, g in zip(angles, thetas, grid.samples):
        lead = leading_singularity(model, kin, omega, t)
        print(f"angle {a:.3f}: |g| {np.abs(g).max():.4e}, |leading| {np.abs(lead).max():.4e}, "
              f"relative gap {np.abs(g - lead).max() / np.abs(lead).max():.3f}")


if __name__ == "__main__":
    main()
