"""Exception types raised across the package."""

from __future__ import annotations


class LocalRegretError(Exception):
    """Base class for all package errors."""


class DimensionError(LocalRegretError, ValueError):
    """Point and set (or loss) dimensions disagree."""


class PreconditionError(LocalRegretError, ValueError):
    """An operation was called outside its stated domain."""


class NumericError(LocalRegretError, ArithmeticError):
    """A non-finite value appeared during a computation.

    ``step`` carries the 1-based time index when the failure happened
    inside an online run.
    """

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class ConfigError(LocalRegretError, ValueError):
    """Invalid experiment configuration, with optional line/key context."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.key = key
        self.line = line
