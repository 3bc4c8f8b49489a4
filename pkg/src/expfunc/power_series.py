"""Certified evaluation of the power series attached to a shifted exponent.

Two series are built from the values ``psi_gamma(1), psi_gamma(2), ...`` of a
shifted Laplace exponent (:class:`~expfunc.levy_model.ShiftedExponent`):

* the increasing series ``I(z) = sum_n a_n z^n`` and
* the alternating series ``O(kappa; z) = sum_n (-1)^n (kappa)_n a_n z^n``,

where ``a_0 = 1``, ``a_n = 1 / prod_{k=1..n} psi_gamma(k)`` and ``(kappa)_n``
is the rising factorial.  Terms are generated by the stable recurrence
``t_{n+1} = -t_n (kappa + n) z / psi_gamma(n + 1)`` so ratios of Gamma
functions never appear explicitly.

The alternating series cancels catastrophically for large ``z``: its largest
term can dwarf the sum by many orders of magnitude.  Every evaluation
therefore reports a first-omitted-term truncation bound together with the
condition number ``max_n |t_n| / |sum|`` and is certified against the
caller's relative tolerance.  When IEEE double precision cannot be certified,
:func:`eval_alternating_series` escalates to multiprecision arithmetic with a
working precision predicted from a cheap logarithmic scan of the term
magnitudes, doubling the precision until the certificate holds.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from ._backend import kernels
from .errors import (
    DomainError,
    InvalidParameter,
    MaxTermsExceeded,
    NonpositiveExponentValue,
    PrecisionInsufficient,
)
from .levy_model import ShiftedExponent

__all__ = [
    "HARD_TERM_CAP",
    "SeriesValue",
    "coefficients",
    "eval_I",
    "eval_O",
    "eval_O_extended",
    "eval_alternating_series",
    "eval_alternating_series_double",
    "eval_alternating_series_extended",
    "eval_increasing_series",
]

#: No evaluation may consume more terms than this, at any precision.
HARD_TERM_CAP = 100_000

_EPS_DOUBLE = 2.0 ** -52
_TINY = 1e-300
_LN_MAX_FLOAT = 709.0
_PRESCAN_BLOCK = 4096
_FIRST_ALLOC = 128
_MAX_MP_ATTEMPTS = 7
_MAX_BITS = 1 << 22

#: mpmath keeps its working precision in global state, so every multiprecision
#: section in this package runs under this lock.
_MP_LOCK = threading.RLock()


@dataclass(frozen=True, slots=True)
class SeriesValue:
    """A certified series value.

    Attributes
    ----------
    value:
        The sum, rounded to double precision.
    truncation_bound:
        Magnitude of the first omitted term; bounds the truncation error.
    terms_used:
        Number of terms accumulated (including the constant term).
    max_term_magnitude:
        Largest term magnitude encountered (clamped to the double range).
    condition:
        ``max_term_magnitude / |value|``; roundoff in the accumulated sum is
        proportional to this factor (clamped to the double range).
    precision_bits:
        Significand bits of the arithmetic that produced the value.
    mp_value:
        The full-precision sum when multiprecision arithmetic was used.
    """

    value: float
    truncation_bound: float
    terms_used: int
    max_term_magnitude: float
    condition: float
    precision_bits: int = 53
    mp_value: mp.mpf | None = None


_AT_ZERO = SeriesValue(1.0, 0.0, 1, 1.0, 1.0)


def _check_rel_tol(rel_tol: float) -> None:
    if not (0.0 < rel_tol < 1.0):
        raise InvalidParameter(f"rel_tol must lie in (0, 1), got {rel_tol}")


def _check_z(z: float) -> None:
    if not (math.isfinite(z) and z >= 0.0):
        raise DomainError(f"series argument must be finite and >= 0, got {z}")


def _check_kappa(kappa: float) -> None:
    if not (math.isfinite(kappa) and kappa > 0.0):
        raise InvalidParameter(f"kappa must be finite and > 0, got {kappa}")


def _psi_gamma_block(shifted: ShiftedExponent, start: int, count: int) -> np.ndarray:
    """``psi_gamma(start + 1 .. start + count)`` as a positive float array."""
    k = np.arange(start + 1, start + count + 1, dtype=np.float64)
    vals = shifted.base.psi_array(k + shifted.shift) - shifted.q
    if not np.all(vals > 0.0):
        bad = start + 1 + int(np.argmax(~(vals > 0.0)))
        raise NonpositiveExponentValue(
            f"psi_gamma({bad}) = {vals[bad - start - 1]:.6g} is not positive; "
            "the shifted exponent must be positive on the positive integers")
    return vals


def _psi_gamma_values(shifted: ShiftedExponent, n: int) -> np.ndarray:
    """``psi_gamma(1..n)``, validated to be strictly positive."""
    if n <= 0:
        return np.empty(0, dtype=np.float64)
    return _psi_gamma_block(shifted, 0, n)


def coefficients(shifted: ShiftedExponent, n_max: int) -> np.ndarray:
    """Series coefficients ``a_0 .. a_n_max``.

    ``a_0 = 1`` and ``a_n = 1 / prod_{k=1..n} psi_gamma(k)``.  Computed by a
    cumulative product in double precision; for large ``n_max`` the entries
    underflow harmlessly to zero (they decay faster than any geometric rate).
    """
    if n_max < 0:
        raise InvalidParameter(f"n_max must be >= 0, got {n_max}")
    out = np.empty(n_max + 1, dtype=np.float64)
    out[0] = 1.0
    if n_max:
        np.cumprod(1.0 / _psi_gamma_values(shifted, n_max), out=out[1:])
    return out


# ---------------------------------------------------------------------------
# Logarithmic prescan of the alternating-series term magnitudes
# ---------------------------------------------------------------------------

def _prescan(shifted: ShiftedExponent, kappa: float, z: float,
             rel_tol: float) -> tuple[int, float, float]:
    """Scan ``ln |t_n|`` without forming the terms.

    Returns ``(n_need, log_peak, log_val_floor)``: a conservative number of
    terms after which the stop rule must have fired, the natural log of the
    largest term magnitude, and a conservative lower estimate of
    ``ln |sum|`` (the sum behaves like ``z**-kappa`` for large ``z`` and like
    ``1`` for small ``z``; a margin of ``e**-16`` absorbs the prefactor).
    """
    log_z = math.log(z)
    log_val_floor = min(0.0, -kappa * math.log(max(z, 1.0))) - 16.0
    threshold = math.log(rel_tol / 2.0) + log_val_floor
    cum = 0.0  # ln |t_n| for the current n
    log_peak = 0.0
    peak_index = 0
    n = 0
    while n < HARD_TERM_CAP:
        m = min(_PRESCAN_BLOCK, HARD_TERM_CAP - n)
        i = np.arange(n, n + m, dtype=np.float64)
        psi_vals = _psi_gamma_block(shifted, n, m)
        ratios = np.log(kappa + i) + log_z - np.log(psi_vals)
        logs = cum + np.cumsum(ratios)  # ln |t_{n+1}| .. ln |t_{n+m}|
        j_peak = int(np.argmax(logs))
        if logs[j_peak] > log_peak:
            log_peak = float(logs[j_peak])
            peak_index = n + 1 + j_peak
        # Stop once past the running peak, below the threshold, and locally
        # decreasing (the magnitude profile can dip before its main rise).
        for j in np.flatnonzero(logs <= threshold):
            idx = n + 1 + int(j)
            if idx > peak_index and ratios[j] <= 0.0:
                return idx, log_peak, log_val_floor
        cum = float(logs[-1])
        n += m
    raise MaxTermsExceeded(
        f"alternating series at z = {z:.6g} does not reach tolerance "
        f"{rel_tol:.1e} within {HARD_TERM_CAP} terms")


# ---------------------------------------------------------------------------
# Certification
# ---------------------------------------------------------------------------

def _clamped_exp(ln_x: float) -> float:
    return math.exp(min(ln_x, _LN_MAX_FLOAT))


def _certify(value: float, trunc: float, n_terms: int, ln_peak: float,
             ln_abs_value: float, rel_tol: float, bits: int) -> None:
    """Raise :class:`PrecisionInsufficient` unless the result is certified.

    The accumulated roundoff of an n-term compensated/multiprecision sum is
    bounded by ``condition * eps * (8 + 2 sqrt(n))`` relative to the result,
    with ``eps = 2**(1 - bits)``; that bound must clear half the tolerance,
    and the truncation bound must clear the full tolerance.
    """
    ln_cond = ln_peak - ln_abs_value
    ln_roundoff = ln_cond + (1 - bits) * math.log(2.0) + math.log(8.0 + 2.0 * math.sqrt(n_terms))
    if ln_roundoff > math.log(rel_tol / 2.0) or trunc > rel_tol * max(abs(value), _TINY):
        raise PrecisionInsufficient(
            f"cancellation (condition ~ 10**{ln_cond / math.log(10.0):.1f}) "
            f"cannot be certified to rel_tol = {rel_tol:.1e} with {bits}-bit "
            "arithmetic",
            condition=_clamped_exp(ln_cond),
            log10_condition=ln_cond / math.log(10.0),
        )


# ---------------------------------------------------------------------------
# Increasing series
# ---------------------------------------------------------------------------

def eval_increasing_series(shifted: ShiftedExponent, z: float,
                           rel_tol: float = 1e-12) -> SeriesValue:
    """Certified value of the increasing series ``I(z)``.

    All terms are positive, so there is no cancellation and double precision
    always certifies; very large ``z`` can overflow the double range, which
    raises :class:`PrecisionInsufficient`.
    """
    _check_rel_tol(rel_tol)
    _check_z(z)
    if z == 0.0:
        return _AT_ZERO
    kern = kernels()
    n_alloc = _FIRST_ALLOC
    while True:
        psi_vals = _psi_gamma_values(shifted, n_alloc)
        status, value, trunc, n_terms, peak = kern.pos_series_sum(z, psi_vals, rel_tol)
        if status == kern.STATUS_OK:
            return SeriesValue(float(value), float(trunc), int(n_terms),
                               float(peak), 1.0)
        if status == kern.STATUS_OVERFLOW:
            raise PrecisionInsufficient(
                f"increasing series at z = {z:.6g} overflows the double range")
        if n_alloc >= HARD_TERM_CAP:
            raise MaxTermsExceeded(
                f"increasing series at z = {z:.6g} needs more than "
                f"{HARD_TERM_CAP} terms")
        n_alloc = min(HARD_TERM_CAP, 2 * n_alloc)


# ---------------------------------------------------------------------------
# Alternating series
# ---------------------------------------------------------------------------

def eval_alternating_series_double(shifted: ShiftedExponent, kappa: float,
                                   z: float, rel_tol: float = 1e-12,
                                   n_first: int = _FIRST_ALLOC) -> SeriesValue:
    """``O(kappa; z)`` in IEEE double precision only.

    Raises :class:`PrecisionInsufficient` when cancellation or overflow
    prevents certification; use :func:`eval_alternating_series` for
    automatic escalation instead.
    """
    _check_kappa(kappa)
    _check_rel_tol(rel_tol)
    _check_z(z)
    if z == 0.0:
        return _AT_ZERO
    kern = kernels()
    n_alloc = min(HARD_TERM_CAP, max(n_first, 8))
    while True:
        psi_vals = _psi_gamma_values(shifted, n_alloc)
        status, value, trunc, n_terms, peak = kern.alt_series_sum(
            kappa, z, psi_vals, rel_tol)
        if status == kern.STATUS_OK:
            break
        if status == kern.STATUS_OVERFLOW:
            raise PrecisionInsufficient(
                f"alternating series at z = {z:.6g} has terms beyond the "
                "double range", condition=float("inf"), log10_condition=float("inf"))
        if n_alloc >= HARD_TERM_CAP:
            raise MaxTermsExceeded(
                f"alternating series at z = {z:.6g} needs more than "
                f"{HARD_TERM_CAP} terms")
        n_alloc = min(HARD_TERM_CAP, 2 * n_alloc)
    ln_abs = math.log(max(abs(value), _TINY))
    _certify(value, trunc, n_terms, math.log(peak), ln_abs, rel_tol, 53)
    cond = _clamped_exp(math.log(peak) - ln_abs)
    return SeriesValue(float(value), float(trunc), int(n_terms), float(peak), cond)


def _kappa_mp(shifted: ShiftedExponent, kappa: float, kappa_offset: float | None,
              gamma_mp: mp.mpf) -> mp.mpf:
    """kappa at working precision, refined through the shift when possible."""
    if kappa_offset is None:
        return mp.mpf(kappa)
    refined = gamma_mp + mp.mpf(kappa_offset)
    if abs(float(refined) - kappa) > 1e-6 * max(1.0, abs(kappa)):
        raise InvalidParameter(
            f"kappa_offset = {kappa_offset} is inconsistent with kappa = {kappa} "
            f"(shift = {shifted.shift})")
    return refined


def eval_alternating_series_extended(shifted: ShiftedExponent, kappa: float,
                                     z: float, rel_tol: float,
                                     precision_bits: int, *,
                                     kappa_offset: float | None = None) -> SeriesValue:
    """``O(kappa; z)`` in multiprecision arithmetic with a fixed precision.

    Mirrors the double-precision stop rule exactly.  ``kappa_offset``, when
    given, declares that ``kappa`` equals the shift plus that offset, so the
    multiprecision path can re-derive it from the shift refined at working
    precision.  Raises :class:`PrecisionInsufficient` when even
    ``precision_bits`` bits cannot be certified against ``rel_tol``.
    """
    _check_kappa(kappa)
    _check_rel_tol(rel_tol)
    _check_z(z)
    if not (isinstance(precision_bits, int) and precision_bits >= 53):
        raise InvalidParameter(
            f"precision_bits must be an integer >= 53, got {precision_bits}")
    if precision_bits > _MAX_BITS:
        raise InvalidParameter(
            f"precision_bits = {precision_bits} exceeds the ceiling {_MAX_BITS}")
    if z == 0.0:
        return SeriesValue(1.0, 0.0, 1, 1.0, 1.0, precision_bits, mp.mpf(1))
    with _MP_LOCK, mp.workprec(precision_bits):
        gamma_mp = shifted.refined_shift_mp()
        kap = _kappa_mp(shifted, kappa, kappa_offset, gamma_mp)
        zz = mp.mpf(z)
        thr = mp.mpf(rel_tol) / 2
        s = mp.mpf(1)
        t = mp.mpf(1)
        peak = mp.mpf(1)
        streak = 0
        n_terms = 1
        for i in range(HARD_TERM_CAP):
            psi_val = shifted.psi_shifted_mp(i + 1, shift_mp=gamma_mp)
            if psi_val <= 0:
                raise NonpositiveExponentValue(
                    f"psi_gamma({i + 1}) is not positive at working precision")
            t = -t * (kap + i) * zz / psi_val
            a = abs(t)
            if a > peak:
                peak = a
            if a < peak and a <= thr * abs(s):
                streak += 1
                if streak >= 3:
                    break
            else:
                streak = 0
            s += t
            n_terms += 1
        else:
            raise MaxTermsExceeded(
                f"alternating series at z = {z:.6g} needs more than "
                f"{HARD_TERM_CAP} terms")
        trunc = float(abs(t))
        ln_peak = float(mp.log(peak))
        ln_abs = float(mp.log(abs(s))) if s != 0 else math.log(_TINY)
        value = float(s)
    _certify(value, trunc, n_terms, ln_peak, ln_abs, rel_tol, precision_bits)
    return SeriesValue(value, trunc, n_terms, _clamped_exp(ln_peak),
                       _clamped_exp(ln_peak - ln_abs), precision_bits, s)


def eval_alternating_series(shifted: ShiftedExponent, kappa: float, z: float,
                            rel_tol: float = 1e-12, *,
                            kappa_offset: float | None = None) -> SeriesValue:
    """``O(kappa; z)`` with automatic precision selection.

    A logarithmic prescan of the term magnitudes predicts the cancellation;
    when double precision can plainly certify the tolerance the compiled
    kernel is used, otherwise evaluation runs in multiprecision arithmetic
    with ``64 + log2(condition / rel_tol)`` bits, doubling the precision on
    a failed certificate.
    """
    _check_kappa(kappa)
    _check_rel_tol(rel_tol)
    _check_z(z)
    if z == 0.0:
        return _AT_ZERO
    n_need, log_peak, log_val_floor = _prescan(shifted, kappa, z, rel_tol)
    ln_pred_cond = log_peak - log_val_floor
    # Route optimistically: predict the condition from the unmargined value
    # estimate.  A wrong double-precision attempt costs microseconds and its
    # certificate (which sees the actual value) catches the mistake.
    ln_route_cond = log_peak - min(0.0, -kappa * math.log(max(z, 1.0)))
    ln_pred_roundoff = (ln_route_cond + math.log(_EPS_DOUBLE)
                        + math.log(8.0 + 2.0 * math.sqrt(n_need)))
    if ln_pred_roundoff <= math.log(rel_tol / 2.0):
        try:
            return eval_alternating_series_double(
                shifted, kappa, z, rel_tol,
                n_first=min(HARD_TERM_CAP, n_need + 16 + n_need // 8))
        except PrecisionInsufficient:
            pass  # the prescan floor was optimistic; fall through to mp
    bits = 64 + math.ceil((ln_pred_cond + math.log(1.0 / rel_tol)) / math.log(2.0))
    for _ in range(_MAX_MP_ATTEMPTS):
        if bits > _MAX_BITS:
            break
        try:
            return eval_alternating_series_extended(
                shifted, kappa, z, rel_tol, bits, kappa_offset=kappa_offset)
        except PrecisionInsufficient:
            bits *= 2
    raise PrecisionInsufficient(
        f"alternating series at z = {z:.6g} could not be certified to "
        f"rel_tol = {rel_tol:.1e} within {_MAX_BITS} bits",
        condition=_clamped_exp(ln_pred_cond),
        log10_condition=ln_pred_cond / math.log(10.0),
    )


# Short operation names mirroring the external interface vocabulary.
eval_I = eval_increasing_series
eval_O = eval_alternating_series
eval_O_extended = eval_alternating_series_extended
