"""Exception types shared across the package."""

from __future__ import annotations

__all__ = ["NumericalFailure", "InitializationFailure", "ConfigError"]


class NumericalFailure(RuntimeError):
    """A numerical routine could not reach its required accuracy.

    Raised by the contact solver when residuals stay above tolerance at the
    iteration cap, by the stepper on tunneling, and by the filter when an
    innovation covariance is singular. Carries a ``details`` dict with the
    offending residuals where available.
    """

    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.details = details or {}


class InitializationFailure(ValueError):
    """Filter initialization was handed unusable observation frames."""


class ConfigError(ValueError):
    """An experiment configuration file is malformed or inconsistent."""
