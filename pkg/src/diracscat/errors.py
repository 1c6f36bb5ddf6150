"""Exception types shared by all modules.

Config errors map to CLI exit code 2, numeric failures to exit code 1.
"""
from __future__ import annotations


class DiracScatError(Exception):
    """Base class for library errors."""

    exit_code = 1


class ConfigError(DiracScatError, ValueError):
    """Invalid input, precondition or configuration."""

    exit_code = 2


class NumericError(DiracScatError, ArithmeticError):
    """A numerical procedure failed its own consistency check."""

    exit_code = 1


class SpectralGapError(ConfigError):
    def __init__(self, E: float, m: float) -> None:
        super().__init__(f"inside spectral gap: |E|={abs(E):g} <= m={m:g}")
