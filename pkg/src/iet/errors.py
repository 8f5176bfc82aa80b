"""Exceptions with the exit-code contract used by the CLI."""
from __future__ import annotations


class IetError(Exception):
    """Base class; exit_code drives the CLI process status."""

    exit_code = 2


class DomainError(IetError):
    """Input outside an operation's domain (bad point, bad precondition)."""

    exit_code = 2


class ConnectionFound(DomainError):
    """Rauzy-Veech induction halted on a connection."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class PrecisionExhausted(IetError):
    """Bigfloat mantissa can no longer resolve the working scales."""

    exit_code = 3


class InputFormatError(IetError):
    """Malformed JSON / CSV / CLI input."""

    exit_code = 1
