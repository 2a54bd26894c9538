"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: validation/format/load problems exit
with 2, divergence and other runtime failures with 3.
"""


class GzslError(Exception):
    """Base class for all package errors."""


class DataLoadError(GzslError):
    """A dataset or checkpoint file is missing or unreadable."""


class FormatError(GzslError):
    """On-disk payload disagrees with its metadata descriptor."""


class ValidationError(GzslError, ValueError):
    """A config, bundle, or request violates a documented precondition."""


class ContractViolation(GzslError, ValueError):
    """An in-process call broke a shape or range contract."""


class TrainingDiverged(GzslError, RuntimeError):
    """Training produced a non-finite loss or parameter."""
