"""Stationary scattering for massive Dirac operators with long-range potentials."""
from __future__ import annotations

__version__ = "0.1.0"
