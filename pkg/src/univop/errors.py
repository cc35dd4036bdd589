"""Exception hierarchy.

Every error that concerns a concrete mathematical object carries a
``witness`` (usually a vector) that re-verifies the failure exactly.
"""
from __future__ import annotations


class UnivopError(Exception):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class DimensionError(UnivopError, ValueError):
    """Shape mismatch or dimension cap exceeded."""


class UnboundedError(UnivopError, ValueError):
    """Constraint functionals do not span the dual space."""


class DegenerateError(UnivopError, ValueError):
    """Points or functionals span a proper subspace."""


class PreconditionError(UnivopError, ValueError):
    """An operation was called outside its contract."""


class VerificationError(UnivopError):
    """A stored artifact failed exact re-verification."""
