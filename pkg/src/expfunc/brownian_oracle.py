"""Closed-form reference values for Gaussian (brownian-family) models.

For psi(u) = b*u + (sigma/2)*u**2 everything downstream collapses to
confluent hypergeometric functions.  Writing phi for the inverse of psi at
level q, the shifted exponent factorizes as

    psi_gamma(u) = (sigma/2) * u * (u + m),     m = 2*b/sigma + 2*phi,

so the reciprocal-product series with weight kappa sums to Kummer's M:

    sum_n (-1)^n [prod_{j<n} (kappa+j)] a_n x^n = M(kappa, c; -2*x/sigma),

with c = m + 1.  The tail constant has the closed form

    C = Gamma(c - phi) / ((sigma/2)**phi * Gamma(c)),

and the density admits a Beta-mixture integral representation (classical
for exponential Brownian functionals) used here through adaptive
quadrature.  This module is deliberately independent of the generic
power-series evaluator: M is summed through the Kummer transformation
M(a, c, z) = exp(z) * M(c-a, c, -z), so every series it touches has
positive terms and no cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import (
    ConditionHViolated,
    DomainError,
    InvalidParameter,
    MaxTermsExceeded,
    QuadratureFailure,
)
from .levy_model import LevyModel

__all__ = ["BrownianCase", "hyp1f1", "closed_form_tail_constant", "yor_density"]

_MAX_TERMS = 2_000_000
# Above this argument the positive-term sum risks float overflow and is
# carried out in log space instead.
_LOG_SUM_THRESHOLD = 300.0


@dataclass(frozen=True, slots=True)
class BrownianCase:
    """A Gaussian model together with a Laplace level q and derived constants.

    ``phi`` is the inverse of psi at q (the positive root of psi when
    q = 0) and ``kummer_c`` the second parameter of the associated
    confluent hypergeometric functions.
    """

    b: float
    sigma: float
    q: float
    phi: float = 0.0
    kummer_c: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.b) and math.isfinite(self.sigma) and math.isfinite(self.q)):
            raise InvalidParameter("BrownianCase parameters must be finite")
        if self.sigma <= 0.0:
            raise InvalidParameter("BrownianCase requires sigma > 0")
        if self.q < 0.0:
            raise InvalidParameter("BrownianCase requires q >= 0")
        if self.q == 0.0 and self.b >= 0.0:
            raise ConditionHViolated(
                "condition H violated: q=0 needs negative drift b")
        phi = (-self.b + math.sqrt(self.b * self.b + 2.0 * self.sigma * self.q)) / self.sigma
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "kummer_c", 2.0 * self.b / self.sigma + 2.0 * phi + 1.0)

    @classmethod
    def from_model(cls, model: LevyModel, q: float) -> "BrownianCase":
        """Build from a brownian model (or a stable model with alpha = 2)."""
        if model.family == "brownian":
            return cls(b=model.b, sigma=model.sigma, q=float(q))
        if model.family == "stable" and model.alpha == 2.0:
            return cls(b=model.b, sigma=2.0 * model.c, q=float(q))
        raise InvalidParameter(
            f"closed forms exist only for Gaussian models, not family {model.family!r}")

    def series_argument(self, x: float) -> float:
        """Map the series argument x to the Kummer argument -2*x/sigma."""
        return -2.0 * x / self.sigma


def hyp1f1(a: float, c: float, z: float) -> float:
    """Kummer's confluent hypergeometric M(a, c; z) for a >= 0, c > 0.

    Positive arguments are summed term by term; negative arguments go
    through the Kummer transformation M(a,c,z) = exp(z) M(c-a, c, -z) so
    that the sum again has positive terms.  Arguments beyond the float
    comfort zone are accumulated in log space.
    """
    a = float(a)
    c = float(c)
    z = float(z)
    if not (math.isfinite(a) and math.isfinite(c) and math.isfinite(z)):
        raise DomainError("hyp1f1 arguments must be finite")
    if c <= 0.0:
        raise DomainError(f"hyp1f1 requires c > 0, got c={c}")
    if a < 0.0:
        raise DomainError(f"hyp1f1 requires a >= 0, got a={a}")
    if z == 0.0 or a == 0.0:
        return 1.0
    if z < 0.0:
        # Kummer transformation; c - a >= 0 holds for every use in this
        # package (and a zero first parameter just gives exp(z)).
        ca = c - a
        if ca < 0.0:
            raise DomainError(
                f"hyp1f1 with z < 0 needs c >= a, got a={a}, c={c}")
        if ca == 0.0:
            return math.exp(z)
        if -z > _LOG_SUM_THRESHOLD:
            return math.exp(z + _log_m_positive(ca, c, -z))
        return math.exp(z) * _m_positive(ca, c, -z)
    if z > _LOG_SUM_THRESHOLD:
        return math.exp(_log_m_positive(a, c, z))
    return _m_positive(a, c, z)


def _m_positive(a: float, c: float, z: float) -> float:
    """Direct positive-term Taylor sum of M(a, c, z) for moderate z > 0."""
    term = 1.0
    total = 1.0
    n = 0
    while n < _MAX_TERMS:
        ratio = (a + n) * z / ((c + n) * (n + 1.0))
        term *= ratio
        total += term
        n += 1
        if ratio < 1.0 and term <= 1e-17 * total:
            return total
    raise MaxTermsExceeded("hyp1f1 positive sum did not converge")


def _log_m_positive(a: float, c: float, z: float) -> float:
    """log M(a, c, z) for large z > 0, summed in log space."""
    lz = math.log(z)
    log_term = 0.0
    log_total = 0.0
    n = 0
    while n < _MAX_TERMS:
        log_ratio = math.log(a + n) + lz - math.log(c + n) - math.log(n + 1.0)
        log_term += log_ratio
        log_total = np.logaddexp(log_total, log_term)
        n += 1
        if log_ratio < 0.0 and log_term <= log_total + math.log(1e-17):
            return float(log_total)
    raise MaxTermsExceeded("hyp1f1 log-space sum did not converge")


def closed_form_tail_constant(case: BrownianCase) -> float:
    """The constant C with survival(t) ~ C * t**(-phi) for large t.

    C = Gamma(c - phi) / ((sigma/2)**phi * Gamma(c)); both Gamma arguments
    are >= 1 for admissible cases, so log-Gamma evaluation is safe.
    """
    phi, c = case.phi, case.kummer_c
    log_c_const = (math.lgamma(c - phi) - phi * math.log(case.sigma / 2.0)
                   - math.lgamma(c))
    return math.exp(log_c_const)


def yor_density(case: BrownianCase, t: float) -> float:
    """Density of the exponential functional at t > 0, via the classical
    Beta-mixture integral

        s(t) = phi * C * t**(-phi-1) * Gamma(c) / (Gamma(phi+1) Gamma(c-phi-1))
               * integral_0^1 exp(-x*u) u**phi (1-u)**(c-phi-2) du,

    with x = 2/(sigma*t).  When q = 0 the Beta weight degenerates and the
    density collapses to the elementary phi*C*t**(-phi-1)*exp(-x).
    """
    t = float(t)
    if not math.isfinite(t) or t <= 0.0:
        raise DomainError(f"yor_density requires t > 0, got {t!r}")
    phi, c = case.phi, case.kummer_c
    x = 2.0 / (case.sigma * t)
    const = closed_form_tail_constant(case)
    shape = c - phi - 1.0  # 2b/sigma + phi; vanishes exactly when q = 0
    if shape < 1e-12:
        # Beta weight degenerates; M(1+phi, c, -x) collapses to exp(-x).
        return phi * const * t ** (-phi - 1.0) * math.exp(-x)

    beta_exponent = shape - 1.0  # > -1, integrable endpoint singularity

    def integrand(u: float) -> float:
        return math.exp(-x * u) * u ** phi * (1.0 - u) ** beta_exponent

    # full_output silences QUADPACK's roundoff warning; accuracy is judged
    # below from the reported abserr instead.
    value, abserr = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-15,
                                   epsrel=1e-12, limit=200, full_output=1)[:2]
    # Absolute floor keeps the check meaningful when the integral itself is
    # tiny (large x) and QUADPACK's reported error sits at its epsabs floor.
    if not math.isfinite(value) or value < 0 or abserr > 1e-8 * value + 1e-13:
        raise QuadratureFailure(
            f"density quadrature did not converge: value={value}, abserr={abserr}")
    log_front = (math.lgamma(c) - math.lgamma(phi + 1.0) - math.lgamma(shape))
    return phi * const * t ** (-phi - 1.0) * math.exp(log_front) * value


# Interface aliases.
kummer_phi = hyp1f1
closed_C = closed_form_tail_constant

__all__ += ["kummer_phi", "closed_C"]
