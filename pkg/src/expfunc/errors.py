"""Exception taxonomy for the expfunc package.

Two broad groups, mirrored by the CLI exit codes:

* precondition failures (bad parameters, unsupported regimes) -> exit code 2
* numerical failures (precision, divergence, inconsistency)   -> exit code 3
"""


class ExpfuncError(Exception):
    """Base class for all package-specific errors."""


# ---------------------------------------------------------------------------
# Precondition failures
# ---------------------------------------------------------------------------

class PreconditionError(ExpfuncError):
    """Input or model state violates a documented precondition."""


class InvalidParameter(PreconditionError):
    """A model or routine parameter is outside its admissible range."""


class UnboundedVariationViolated(PreconditionError):
    """The requested model has paths of bounded variation.

    The whole machinery requires psi(u)/u -> infinity as u -> infinity,
    which for these families means a nonzero Gaussian component, or a
    stable index strictly greater than one.
    """


class DomainError(PreconditionError):
    """A function argument lies outside the function's domain."""


class NoPositiveRoot(PreconditionError):
    """psi has no positive root, i.e. the mean of the process is >= 0."""


class ConditionHViolated(PreconditionError):
    """q = 0 requires a strictly negative mean increment."""


class LaplaceParameterTooSmall(PreconditionError):
    """Asian pricing requires the Laplace parameter q to exceed psi(1)."""


class InvalidConfig(PreconditionError):
    """A CLI or Monte Carlo configuration value is malformed."""


# ---------------------------------------------------------------------------
# Numerical failures
# ---------------------------------------------------------------------------

class NumericalError(ExpfuncError):
    """A computation could not meet its accuracy contract."""


class NonpositiveExponentValue(NumericalError):
    """A shifted exponent evaluated to <= 0 at a positive integer.

    The series coefficients are reciprocals of products of these values,
    so a nonpositive value means the shift is corrupted.
    """


class MaxTermsExceeded(NumericalError):
    """Series summation hit the term cap before the stopping rule fired."""


class PrecisionInsufficient(NumericalError):
    """Cancellation exceeds what the active precision can certify.

    Carries enough context for a caller to retry at higher precision.
    """

    def __init__(self, message: str, *, condition: float = float("nan"),
                 log10_condition: float = float("nan")):
        super().__init__(message)
        self.condition = condition
        self.log10_condition = log10_condition


class ExtrapolationDiverged(NumericalError):
    """The accelerated tail-constant sequence failed to settle."""


class NumericalInconsistency(NumericalError):
    """A computed probability or density violates its bounds beyond budget."""


class QuadratureFailure(NumericalError):
    """Adaptive quadrature did not converge to the requested tolerance."""
