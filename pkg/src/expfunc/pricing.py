"""Asian-option pricing for the exponential functional.

With killing rate ``q`` strictly above ``psi(1)`` the shift is ``phi =
phi(q) > 1`` and the discounted call value at strike ``K`` is

    A(K) = C_phi / (phi - 1) * K**(1 - phi) * O(phi - 1; 1/K),

with the tail constant ``C_phi`` of :func:`expfunc.law.tail_constant` and the
alternating series ``O`` of :mod:`expfunc.power_series`.  The zero-strike
limit is the first moment ``1 / (q - psi(1))``.  A start level ``y`` enters
only through the exact translation ``A(y, K) = exp(y) * A(0, K * exp(-y))``,
applied literally so the identity holds to the last floating-point bit.

:func:`calibrate_drift` solves ``psi(1) = r`` for the linear drift, which is
how a model is pinned to a target unit-time exponential growth rate ``r``
before pricing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, InvalidParameter, LaplaceParameterTooSmall
from .law import tail_constant
from .levy_model import LevyModel
from .power_series import eval_alternating_series

__all__ = [
    "AsianQuote",
    "PriceResult",
    "asian_price",
    "calibrate_drift",
    "functional_moment",
    "price_call",
    "zero_strike_value",
]

#: Below this gap the factor 1/(phi - 1) amplifies the rounding of phi itself;
#: reported error bounds are inflated accordingly.
_NARROW_GAP = 1e-4


@dataclass(frozen=True, slots=True)
class PriceResult:
    """A priced call with a relative error bound and context values."""

    value: float
    error_bound: float
    phi: float
    zero_strike: float


@dataclass(frozen=True, slots=True)
class AsianQuote:
    """A call price together with the inputs that produced it.

    ``price`` is ``E[(exp(y) * Sigma - K)^+]``-style: a nonzero start level
    ``y`` enters through the exact scaling relation
    ``quote(y).price == exp(y) * quote(0, strike * exp(-y)).price``.
    ``error_bound`` is relative (and therefore scale-invariant).
    """

    model: LevyModel
    q: float
    strike: float
    y: float
    price: float
    error_bound: float


def calibrate_drift(family: str, r: float, **params) -> LevyModel:
    """The model of ``family`` whose drift solves ``psi(1) = r``.

    ``params`` are the family parameters except the drift ``b`` (``sigma``;
    ``sigma, lam, eta``; or ``c, alpha``); ``psi(1)`` is affine in the drift,
    so the solution is exact.
    """
    if not math.isfinite(r):
        raise InvalidParameter(f"growth rate r must be finite, got {r}")
    if "b" in params:
        raise InvalidParameter("calibrate_drift determines b; do not pass it")
    probe = LevyModel.from_params(family, b=0.0, **params)
    return LevyModel.from_params(family, b=r - probe.psi(1.0), **params)


def zero_strike_value(model: LevyModel, q: float) -> float:
    """Mean of the functional, ``1 / (q - psi(1))``; the strike-zero price."""
    gap = q - model.psi(1.0)
    if gap <= 0.0:
        raise LaplaceParameterTooSmall(
            f"pricing requires q > psi(1) = {model.psi(1.0):.6g}, got q = {q}")
    return 1.0 / gap


def functional_moment(model: LevyModel, q: float, n: int) -> float:
    """n-th moment of the functional: ``n! / prod_{k<=n} (q - psi(k))``.

    Finite exactly when ``q > psi(n)``; smaller ``q`` raises
    :class:`LaplaceParameterTooSmall`.
    """
    if not (isinstance(n, int) and n >= 1):
        raise InvalidParameter(f"moment order must be an integer >= 1, got {n}")
    value = 1.0
    for k in range(1, n + 1):
        gap = q - model.psi(float(k))
        if gap <= 0.0:
            raise LaplaceParameterTooSmall(
                f"moment {n} needs q > psi({k}) = {model.psi(float(k)):.6g}")
        value *= k / gap
    return value


def price_call(model: LevyModel, q: float, strike: float,
               rel_tol: float = 1e-10, y: float = 0.0) -> PriceResult:
    """Discounted Asian call price with an error bound.

    ``strike = 0`` returns the exact zero-strike limit.  The error bound is
    relative and combines the achieved tail-constant accuracy, the series
    tolerance, and — when ``phi - 1`` is below 1e-4 — the amplification of
    phi's own rounding by the prefactor ``1 / (phi - 1)``.
    """
    if not (0.0 < rel_tol < 1.0):
        raise InvalidParameter(f"rel_tol must lie in (0, 1), got {rel_tol}")
    if not (math.isfinite(strike) and strike >= 0.0):
        raise DomainError(f"strike must be finite and >= 0, got {strike}")
    if not math.isfinite(y):
        raise DomainError(f"start level must be finite, got {y}")
    if y != 0.0:
        base = price_call(model, q, strike * math.exp(-y), rel_tol)
        scale = math.exp(y)
        return PriceResult(scale * base.value, base.error_bound, base.phi,
                           scale * base.zero_strike)
    zero = zero_strike_value(model, q)  # also enforces q > psi(1)
    if strike == 0.0:
        return PriceResult(zero, 1e-15, model.shift(q).shift, zero)
    shifted = model.shift(q)
    phi = shifted.shift
    law = tail_constant(model, q, min(1e-9, rel_tol / 4.0))
    sv = eval_alternating_series(shifted, phi - 1.0, 1.0 / strike,
                                 rel_tol / 4.0, kappa_offset=-1.0)
    value = law.C_gamma * sv.value * strike ** (1.0 - phi) / (phi - 1.0)
    bound = law.C_gamma_error + rel_tol / 2.0 + 5e-16
    if phi - 1.0 < _NARROW_GAP:
        bound *= 1.0 + 1.0 / (phi - 1.0)
    return PriceResult(value, bound, phi, zero)


def asian_price(model: LevyModel, q: float, strike: float,
                rel_tol: float = 1e-10, y: float = 0.0) -> AsianQuote:
    """Discounted Asian call quote (see :func:`price_call` for the numerics)."""
    result = price_call(model, q, strike, rel_tol, y)
    return AsianQuote(model=model, q=float(q), strike=float(strike),
                      y=float(y), price=result.value,
                      error_bound=result.error_bound)
