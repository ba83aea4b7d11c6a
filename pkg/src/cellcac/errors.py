"""Exception types shared across the package."""

from __future__ import annotations


class CellcacError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(CellcacError, ValueError):
    """A traffic, policy, or solver parameter is outside its valid domain."""


class UnsupportedSizeError(CellcacError, ValueError):
    """A problem size exceeds what a reference method is allowed to handle."""


class ConvergenceError(CellcacError, RuntimeError):
    """A fixed-point iteration failed to converge.

    Carries the last iterate and its residual so callers can inspect how
    close the run got before giving up.
    """

    def __init__(self, message: str, lambda_h: float, residual: float, iterations: int):
        super().__init__(message)
        self.lambda_h = lambda_h
        self.residual = residual
        self.iterations = iterations


class DegenerateRunError(CellcacError, ValueError):
    """A simulation was configured so that it could never finish."""


class BatchError(CellcacError, RuntimeError):
    """One or more runs in a batch failed.

    failures holds (index, exception) pairs in input order; reports holds
    the per-run results with None at the failed positions.
    """

    def __init__(self, message: str, failures: list, reports: list):
        super().__init__(message)
        self.failures = failures
        self.reports = reports


class ConfigError(CellcacError, ValueError):
    """A configuration file is missing, malformed, or inconsistent."""
