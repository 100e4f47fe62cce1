"""Exception hierarchy shared by every synthctl module."""

from __future__ import annotations


class SynthctlError(Exception):
    """Base class for data and model errors (CLI exit code 1)."""


class ParseError(SynthctlError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class DuplicateError(SynthctlError):
    pass


class EmptyInputError(SynthctlError):
    pass


class InvalidParameter(SynthctlError, ValueError):
    pass


class MetadataError(SynthctlError):
    pass


class MetricError(SynthctlError):
    pass


class RangeError(SynthctlError):
    pass


class EmptyAlignmentError(SynthctlError):
    pass


class EmptyDonorError(SynthctlError):
    """No donor survived selection.

    ``diagnostics`` carries whatever the raising operation knows about the
    nearest misses (e.g. donor ids with their relative stage distance).
    """

    def __init__(self, message: str, diagnostics: list | None = None):
        self.diagnostics = diagnostics or []
        super().__init__(message)


class DegenerateInputError(SynthctlError):
    pass


class DegenerateModelError(SynthctlError):
    pass


class InsufficientPretreatmentError(SynthctlError):
    pass


class UndefinedReductionError(SynthctlError):
    pass


class GroupingError(SynthctlError):
    pass


class StabilityError(SynthctlError):
    pass
