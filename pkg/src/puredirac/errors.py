"""Exception hierarchy shared by the library and the command line."""

from __future__ import annotations


class PureDiracError(Exception):
    """Base class for all library errors."""


class UsageError(PureDiracError, ValueError):
    """Inputs violate a documented precondition (shape, membership, etc.)."""


class DomainError(PureDiracError, ValueError):
    """A point lies outside the domain where an object is defined."""


class ConsistencyError(PureDiracError, RuntimeError):
    """An internal invariant failed; indicates a numerical or logic fault."""
