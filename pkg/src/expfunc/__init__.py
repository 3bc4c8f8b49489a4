"""Law and Asian-option pricing for exponential functionals of
spectrally negative Levy processes.

The package computes the distribution function, density and Asian-option
price of the exponential functional

    Sigma = integral_0^T exp(X_s) ds,      T ~ Exp(q)  (T = infinity if q = 0)

for a spectrally negative Levy process X of unbounded variation, through
convergent power series with explicit cancellation control, and validates
the results against a Brownian closed form and seeded Monte Carlo.
"""

from .errors import (
    ConditionHViolated,
    DomainError,
    ExpfuncError,
    ExtrapolationDiverged,
    InvalidConfig,
    InvalidParameter,
    LaplaceParameterTooSmall,
    MaxTermsExceeded,
    NoPositiveRoot,
    NonpositiveExponentValue,
    NumericalError,
    NumericalInconsistency,
    PrecisionInsufficient,
    PreconditionError,
    QuadratureFailure,
    UnboundedVariationViolated,
)
from .law import LawResult, density, quantile, survival, tail_constant
from .levy_model import LevyModel, RootKind, ShiftedExponent, parse_model_file
from .mc_oracle import (
    McConfig,
    McSample,
    empirical_asian,
    empirical_survival,
    read_expf,
    simulate,
    write_expf,
)
from .power_series import (
    SeriesValue,
    coefficients,
    eval_alternating_series,
    eval_alternating_series_extended,
    eval_increasing_series,
)
from .pricing import (
    AsianQuote,
    PriceResult,
    asian_price,
    calibrate_drift,
    functional_moment,
    price_call,
    zero_strike_value,
)

__version__ = "0.1.0"

__all__ = [
    "LevyModel",
    "RootKind",
    "ShiftedExponent",
    "parse_model_file",
    "SeriesValue",
    "coefficients",
    "eval_increasing_series",
    "eval_alternating_series",
    "eval_alternating_series_extended",
    "LawResult",
    "tail_constant",
    "survival",
    "density",
    "quantile",
    "AsianQuote",
    "PriceResult",
    "calibrate_drift",
    "zero_strike_value",
    "functional_moment",
    "price_call",
    "asian_price",
    "McConfig",
    "McSample",
    "simulate",
    "empirical_survival",
    "empirical_asian",
    "write_expf",
    "read_expf",
    "ExpfuncError",
    "PreconditionError",
    "NumericalError",
    "InvalidParameter",
    "UnboundedVariationViolated",
    "DomainError",
    "NoPositiveRoot",
    "ConditionHViolated",
    "LaplaceParameterTooSmall",
    "InvalidConfig",
    "NonpositiveExponentValue",
    "MaxTermsExceeded",
    "PrecisionInsufficient",
    "ExtrapolationDiverged",
    "NumericalInconsistency",
    "QuadratureFailure",
    "__version__",
]
