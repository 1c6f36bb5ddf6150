"""Peel two homogeneous tails off the fixed-energy symbol, leading order first."""
from __future__ import annotations

import numpy as np

from diracscat.clifford import kinematics
from diracscat.fields import build_potential_model
from diracscat.inverse import homogeneous_peel, sample_symbol
from diracscat.quadrature import fibonacci_sphere


def main() -> None:
    model = build_potential_model(
        {
            "kind": "sum",
            "terms": [
                {"kind": "homogeneous-tail", "rho": 1.5, "angular": {"0,0": 0.2}},
                {"kind": "homogeneous-tail", "rho": 2.1, "angular": {"0,0": 0.2, "2,0": 0.1}},
            ],
        }
    )
    steps = homogeneous_peel(sample_symbol(model, kinematics(2.0, 1.0)), max_terms=2)
    u = fibonacci_sphere(300)
    for step, truth in zip(steps, sorted(model.scalars, key=lambda t: t.rho)):
        got = step.electric.field_term().profile(u)
        err = np.linalg.norm(got - truth.profile(u)) / np.linalg.norm(truth.profile(u))
        print(f"order {step.rho:.6f} (true {truth.rho}), profile error {err:.1e}, "
              f"residual {step.residual_before:.2e} -> {step.residual_after:.2e}")


if __name__ == "__main__":
    main()
