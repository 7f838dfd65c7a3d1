"""Exception taxonomy shared across the library.

Exit-code mapping used by the CLI: invalid/degenerate input and validity
violations exit 2, format or checksum mismatches exit 3, everything else
exits 1.
"""

from __future__ import annotations


class ShmNoveltyError(Exception):
    """Base class for all library errors."""


class InvalidInputError(ShmNoveltyError):
    """An argument violates a documented precondition."""


class DegenerateInputError(InvalidInputError):
    """Input is structurally valid but carries no usable information
    (zero variance, singular covariance, constant sample)."""


class OutOfValidityError(InvalidInputError):
    """A physical-model argument lies outside the model's validity band."""


class IllConditionedError(ShmNoveltyError):
    """A linear solve was rejected because the system is numerically
    singular.  Carries the offending fractional powers so optimizers can
    mark the point instead of aborting."""

    def __init__(self, message: str, gamma=None, cond: float | None = None):
        super().__init__(message)
        self.gamma = gamma
        self.cond = cond


class FormatVersionError(ShmNoveltyError):
    """A persisted artifact has an unknown format version or fails its
    integrity checksum."""
