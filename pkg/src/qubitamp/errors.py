"""Exception types raised across the package."""

from __future__ import annotations


class ParameterError(ValueError):
    """A physical or numerical parameter is out of its valid range."""


class ConfigError(ValueError):
    """A scenario configuration file is malformed or inconsistent."""


class DivergenceError(RuntimeError):
    """The state trajectory left the physically plausible region.

    Carries the integration step index at which divergence was detected
    so callers can report how far the run got.
    """

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step
