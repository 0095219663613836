"""Exception hierarchy shared by every module."""

from __future__ import annotations

__all__ = [
    "SpecDistError",
    "DimensionMismatch",
    "SingularC1",
    "NonFinite",
    "PoleHit",
    "BracketFailure",
    "DomainError",
    "CaseError",
    "ContourThroughPole",
    "NonPositiveEigenvalue",
    "FactorizationFailure",
]


class SpecDistError(Exception):
    """Base class; ``str(exc)`` is prefixed by the class name in CLI output."""


class DimensionMismatch(SpecDistError, ValueError):
    """The two sample matrices do not share the same number of rows."""


class SingularC1(SpecDistError, ArithmeticError):
    """The first sample covariance could not be factorized."""


class NonFinite(SpecDistError, ValueError):
    """An input contains NaN or infinity."""


class PoleHit(SpecDistError, ArithmeticError):
    """A transform was evaluated too close to a sample eigenvalue."""


class BracketFailure(SpecDistError, ArithmeticError):
    """A root was not sign-bracketed where theory says it must be."""


class DomainError(SpecDistError, ValueError):
    """Arguments outside the region where a formula is defined."""


class CaseError(DomainError):
    """Arguments of ``f_integral`` match none of its closed-form cases."""


class ContourThroughPole(SpecDistError, ArithmeticError):
    """A quadrature node fell within the pole guard of an eigenvalue."""


class NonPositiveEigenvalue(DomainError):
    """A logarithmic functional met an eigenvalue that is not positive."""


class FactorizationFailure(SpecDistError, ArithmeticError):
    """A covariance handed to the sampler is not positive definite."""
