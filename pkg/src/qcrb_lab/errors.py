"""Typed errors shared across the toolkit."""


class MetrologyError(Exception):
    """Base class for all qcrb-lab errors."""


class NotHermitianError(MetrologyError, ValueError):
    """A matrix required to be Hermitian is not, beyond tolerance."""


class NotPositiveError(MetrologyError, ValueError):
    """A matrix required to be positive semidefinite has a significantly
    negative eigenvalue."""


class DimensionMismatchError(MetrologyError, ValueError):
    """Operator, state, or measurement dimensions are incompatible."""


class SldUnsolvableError(MetrologyError):
    """The state derivative has weight on the kernel of the density matrix,
    so no symmetric logarithmic derivative exists."""


class SingularOutcomeError(MetrologyError):
    """A measurement outcome has (numerically) zero probability at this
    parameter value while its probability is not locally constant: the
    classical Fisher information is divergent or defined only as a limit."""


class SingularSensitivityError(MetrologyError):
    """The observable's mean has zero slope at this parameter value, so the
    error-propagation estimate is undefined."""


class VariantInapplicableError(MetrologyError, ValueError):
    """The requested optimality-condition variant does not apply to this
    model (e.g. a pure-state variant on a mixed state)."""


class InvalidCoefficientsError(MetrologyError, ValueError):
    """Product-observable coefficients violate the optimal-family constraint
    (identity/z components must vanish, x/y components must not both vanish)."""


class FlatLikelihoodError(MetrologyError):
    """The likelihood does not depend on the parameter over the search
    interval; no maximum-likelihood estimate exists."""


class EvaluationFailureError(MetrologyError):
    """A user-supplied state function failed to evaluate or returned an
    invalid density matrix."""


class InsufficientSamplesError(MetrologyError, ValueError):
    """Too few samples for the requested statistic."""


class InsufficientTrialsError(MetrologyError, ValueError):
    """Too few independent trials for the requested statistical check."""


class SpecFileError(MetrologyError, ValueError):
    """A model specification file failed to parse or validate.

    ``field`` holds the dotted path of the offending entry.
    """

    def __init__(self, message, field=None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
