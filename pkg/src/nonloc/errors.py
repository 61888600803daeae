"""Exception hierarchy shared by every module."""

from __future__ import annotations


class NonlocError(Exception):
    """Base class for all package errors."""


class InputError(NonlocError):
    """Malformed or inconsistent user input."""


class StructuralError(InputError):
    """A table or file is missing entries or has the wrong shape."""


class SignalingError(InputError):
    """An operation that requires a no-signaling behavior received a signaling one."""

    def __init__(self, message: str, party: int | None = None, settings: tuple | None = None):
        super().__init__(message)
        self.party = party
        self.settings = settings


class ZeroProbabilityError(NonlocError):
    """Conditioning or branching on an outcome that never occurs."""


class CapExceeded(NonlocError):
    """A configured size cap would be exceeded; the computation is refused."""


class LocalityViolation(InputError):
    """A protocol step acts on a qubit its party does not own, or adapts on foreign outcomes."""
