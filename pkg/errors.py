#!/usr/bin/env python3
"""
Exception hierarchy for the kriging validation toolkit.

The CLI maps these onto exit codes: usage/configuration problems exit with 2,
numerical failures exit with 3.
"""

from typing import Optional


class KrigingError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 3


class ConfigurationError(KrigingError):
    """Invalid configuration value, scale profile or suite name."""

    exit_code = 2


class InvalidDesignError(KrigingError):
    """Degenerate rectangle, bad grid size or impossible subsample size."""

    exit_code = 2


class DatasetParseError(KrigingError):
    """A CSV file could not be turned into a SpatialDataset."""

    exit_code = 2

    def __init__(self, message: str, row: Optional[int] = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class CovarianceDomainError(KrigingError):
    """Covariance parameters or distances outside their domain."""

    exit_code = 2


class NumericalError(KrigingError):
    """Numerical failure while fitting, solving or sampling."""

    exit_code = 3


class SingularSystemError(NumericalError):
    """Correlation matrix is not numerically positive definite."""

    def __init__(self, message: str, pivot: Optional[float] = None, index: Optional[int] = None):
        super().__init__(message)
        self.pivot = pivot
        self.index = index


class FitError(NumericalError):
    """Likelihood could not be maximized."""


class DegenerateDataError(NumericalError):
    """Data carry no variability (constant values, zero residual)."""


class PosteriorDegenerateError(NumericalError):
    """Every posterior weight on the range support underflowed."""


class UndefinedCriterionError(NumericalError):
    """A validation criterion would divide by zero."""


class FoldError(NumericalError):
    """A leave-one-out fold failed; wraps the original exception."""

    def __init__(self, fold: int, cause: Exception):
        super().__init__(f"fold {fold} failed: {cause.__class__.__name__}: {cause}")
        self.fold = fold
        self.cause = cause
