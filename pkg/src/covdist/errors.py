"""Exception hierarchy.

Everything raised on purpose by the package derives from :class:`CovDistError`.
Input problems additionally derive from :class:`ValueError` so callers that
only know about the builtin still catch them.
"""


class CovDistError(Exception):
    """Base class for all package errors."""


class ModelError(CovDistError, ValueError):
    """Invalid population model."""


class NonPositiveEigenvalue(ModelError):
    pass


class UnsortedOrDuplicateEigenvalues(ModelError):
    pass


class NonPositiveMultiplicity(ModelError):
    pass


class SampleSizeEqualsDim(ModelError):
    pass


class NotHermitian(ModelError):
    pass


class NotPositiveDefinite(ModelError):
    pass


class RhoOutOfRange(ModelError):
    pass


class DimMismatch(ModelError):
    pass


class MissingBasis(ModelError):
    pass


class NumericalError(CovDistError, ArithmeticError):
    """A numerical routine failed to meet its own accuracy contract."""


class RootResidualTooLarge(NumericalError):
    pass


class BracketNotFound(NumericalError):
    pass


class PoleEvaluation(NumericalError, ValueError):
    pass


class NoRootSatisfiesSelection(NumericalError):
    pass


class AmbiguousSelection(NumericalError):
    pass


class InternalInvariantViolation(NumericalError):
    pass


class DomainError(CovDistError, ValueError):
    pass


class NegativeArgument(DomainError):
    pass


class UndersampledKL(DomainError):
    """Symmetrized KL needs invertible sample covariances (N > M)."""


class SingularKL(DomainError):
    pass


class NonPositiveRetainedEigenvalue(DomainError):
    pass


class DegenerateContour(CovDistError, ValueError):
    pass


class BranchCutCrossed(CovDistError, ValueError):
    pass


class ConfigError(CovDistError, ValueError):
    """Malformed experiment configuration.

    ``field`` is a dotted path to the offending entry (``"model_a.spectrum"``).
    """

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)
