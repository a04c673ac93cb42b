"""
Custom exceptions for fpdyn.

Every error carries the offending values as attributes plus a readable
``message`` so callers (and the CLI) can report precisely what went wrong.
"""

from __future__ import annotations

from collections.abc import Iterable


def _format_set(values: Iterable[int]) -> str:
    return "{" + ", ".join(str(v) for v in sorted(values)) + "}"


class FPDynError(Exception):
    """Base exception for all fpdyn errors."""
    pass


class ConfigError(FPDynError):
    """Raised when a configuration value or environment override is invalid."""

    def __init__(self, key: str, reason: str | None = None):
        self.key = key
        self.reason = reason or "invalid value"
        self.message = f"Invalid configuration for '{key}': {self.reason}"
        super().__init__(self.message)


class DimensionMismatchError(FPDynError):
    """Raised when a state, trace or permutation does not fit the payoff matrix."""

    def __init__(self, what: str, expected: object, actual: object):
        self.what = what
        self.expected = expected
        self.actual = actual
        self.message = f"Dimension mismatch for {what}: expected {expected}, got {actual}"
        super().__init__(self.message)


class InvalidChoiceError(FPDynError):
    """Raised when a scripted choice is not a best response at step ``t``."""

    def __init__(self, t: int, side: str, index: int, tie_set: Iterable[int]):
        self.t = t
        self.side = side
        self.index = index
        self.tie_set = frozenset(tie_set)
        self.message = (
            f"Invalid {side} choice at step {t}: index {index} is not in the "
            f"best-response set {_format_set(self.tie_set)}"
        )
        super().__init__(self.message)


class PolicyContractError(FPDynError):
    """Raised when a tie-breaking policy returns an index outside the tie set."""

    def __init__(self, policy: str, side: str, index: int, tie_set: Iterable[int]):
        self.policy = policy
        self.side = side
        self.index = index
        self.tie_set = frozenset(tie_set)
        self.message = (
            f"Policy '{policy}' returned {side} index {index} outside the tie set "
            f"{_format_set(self.tie_set)}"
        )
        super().__init__(self.message)


class TraceParseError(FPDynError):
    """Raised when a trace or CSV file cannot be parsed."""

    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        self.reason = reason
        self.message = f"Parse error on line {line_number}: {reason}"
        super().__init__(self.message)


class InsufficientSamplesError(FPDynError):
    """Raised when an analysis needs more samples than the series provides."""

    def __init__(self, what: str, needed: int, available: int):
        self.what = what
        self.needed = needed
        self.available = available
        self.message = f"{what} needs at least {needed} usable samples, got {available}"
        super().__init__(self.message)


class ConstructionError(FPDynError, ValueError):
    """Raised when a schedule construction is called with out-of-range arguments."""

    def __init__(self, operation: str, reason: str | None = None):
        self.operation = operation
        self.reason = reason or "Unknown error"
        self.message = f"Cannot build '{operation}': {self.reason}"
        super().__init__(self.message)


class NonIdentityMatrixError(FPDynError):
    """Raised when an identity-game-only operation receives another matrix."""

    def __init__(self, operation: str):
        self.operation = operation
        self.message = f"'{operation}' is only defined for identity games I_n"
        super().__init__(self.message)
