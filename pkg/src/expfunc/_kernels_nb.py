"""JIT-compiled kernels: series summation and Monte Carlo path generation.

Mirror of :mod:`expfunc._kernels_np` using numba.  Paths are distributed over
worker threads with ``prange``; every path writes only its own output slot
and all randomness is counter-based (:mod:`expfunc._rng`), so results are
bit-identical for any thread count.  Series summation is a scalar loop with
Kahan compensation.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

from ._rng import (
    CH_GAUSS,
    CH_JUMP_A,
    CH_JUMP_S,
    CH_TIME,
    CHANNEL_SHIFT,
    GOLDEN,
    MIX_MULT_1,
    MIX_MULT_2,
    TWO_PI,
    U01_SCALE,
    U01_SHIFT,
)

STATUS_OK = 0
STATUS_EXHAUSTED = 1
STATUS_OVERFLOW = 2

_OVERFLOW_GUARD = 1e290

_U1 = np.uint64(1)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)


@njit(cache=True)
def _mix64(x):
    x ^= x >> _U30
    x *= MIX_MULT_1
    x ^= x >> _U27
    x *= MIX_MULT_2
    x ^= x >> _U31
    return x


@njit(cache=True)
def _path_key(seed, p):
    return _mix64(seed + GOLDEN * (np.uint64(p) + _U1))


@njit(cache=True)
def _u01(key, channel, index):
    counter = (channel << CHANNEL_SHIFT) + index
    word = _mix64(key ^ _mix64(counter + GOLDEN))
    return ((word >> U01_SHIFT) + 0.5) * U01_SCALE


@njit(cache=True)
def _gauss(key, pair_index):
    u1 = _u01(key, CH_GAUSS, np.uint64(2 * pair_index))
    u2 = _u01(key, CH_GAUSS, np.uint64(2 * pair_index + 1))
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(TWO_PI * u2)


@njit(cache=True)
def _horizon(key, q, t_cap):
    if q > 0.0:
        return -math.log(_u01(key, CH_TIME, np.uint64(0))) / q
    return t_cap


# ---------------------------------------------------------------------------
# Series summation
# ---------------------------------------------------------------------------

@njit(cache=True)
def alt_series_sum(kappa, z, psi_vals, rel_tol):
    """Alternating-series sum; see the NumPy twin for the full contract."""
    thr = 0.5 * rel_tol
    s = 1.0
    comp = 0.0
    t = 1.0
    peak = 1.0
    streak = 0
    n_terms = 1
    for i in range(psi_vals.shape[0]):
        t_next = -t * (kappa + i) * z / psi_vals[i]
        a = abs(t_next)
        if not np.isfinite(t_next) or a > _OVERFLOW_GUARD:
            return (STATUS_OVERFLOW, 0.0, np.nan, n_terms, np.inf)
        if a > peak:
            peak = a
        if a < peak and a <= thr * abs(s):
            streak += 1
            if streak >= 3:
                return (STATUS_OK, s, a, n_terms, peak)
        else:
            streak = 0
        y = t_next - comp
        tt = s + y
        comp = (tt - s) - y
        s = tt
        n_terms += 1
        t = t_next
    return (STATUS_EXHAUSTED, s, np.nan, n_terms, peak)


@njit(cache=True)
def pos_series_sum(z, psi_vals, rel_tol):
    """Positive-series sum; see the NumPy twin for the full contract."""
    thr = 0.5 * rel_tol
    s = 1.0
    comp = 0.0
    t = 1.0
    peak = 1.0
    n_terms = 1
    for i in range(psi_vals.shape[0]):
        r = z / psi_vals[i]
        t_next = t * r
        if not np.isfinite(t_next) or t_next > _OVERFLOW_GUARD:
            return (STATUS_OVERFLOW, 0.0, np.nan, n_terms, np.inf)
        y = t_next - comp
        tt = s + y
        comp = (tt - s) - y
        s = tt
        n_terms += 1
        if t_next > peak:
            peak = t_next
        if r < 1.0:
            tail_bound = t_next * r / (1.0 - r)
            if tail_bound <= thr * s:
                return (STATUS_OK, s, tail_bound, n_terms, peak)
        t = t_next
    return (STATUS_EXHAUSTED, s, np.nan, n_terms, peak)


# ---------------------------------------------------------------------------
# Monte Carlo path generation
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def simulate_brownian_paths(n_paths, b, sigma, q, dt, t_cap, seed):
    values = np.empty(n_paths)
    seed_u = np.uint64(seed)
    for p in prange(n_paths):
        key = _path_key(seed_u, p)
        horizon = _horizon(key, q, t_cap)
        n_steps = int(math.ceil(horizon / dt))
        x = 0.0
        e_prev = 1.0
        acc = 0.0
        for m in range(n_steps):
            rem = horizon - m * dt
            step = dt if rem > dt else rem
            z = _gauss(key, m)
            x += b * step + math.sqrt(sigma * step) * z
            e = math.exp(x)
            acc += 0.5 * (e_prev + e) * step
            e_prev = e
        values[p] = acc
    return values


@njit(cache=True, parallel=True)
def simulate_stable_paths(n_paths, b, c, alpha, q, dt, t_cap, seed):
    values = np.empty(n_paths)
    seed_u = np.uint64(seed)
    half = 0.5 * math.pi * alpha
    abs_cos = abs(math.cos(half))
    # beta = -1 (spectrally negative): atan(beta * tan(pi alpha / 2)) / alpha
    skew_shift = math.atan(-math.tan(half)) / alpha
    front = (1.0 + math.tan(half) ** 2) ** (1.0 / (2.0 * alpha))
    pow_w = (1.0 - alpha) / alpha
    inv_alpha = 1.0 / alpha
    for p in prange(n_paths):
        key = _path_key(seed_u, p)
        horizon = _horizon(key, q, t_cap)
        n_steps = int(math.ceil(horizon / dt))
        x = 0.0
        e_prev = 1.0
        acc = 0.0
        for m in range(n_steps):
            rem = horizon - m * dt
            step = dt if rem > dt else rem
            u1 = _u01(key, CH_GAUSS, np.uint64(2 * m))
            u2 = _u01(key, CH_GAUSS, np.uint64(2 * m + 1))
            angle = math.pi * (u1 - 0.5)
            w = -math.log(u2)
            shifted = alpha * (angle + skew_shift)
            draw = (
                front
                * math.sin(shifted)
                / math.cos(angle) ** inv_alpha
                * (math.cos(angle - shifted) / w) ** pow_w
            )
            x += b * step + (c * abs_cos * step) ** inv_alpha * draw
            e = math.exp(x)
            acc += 0.5 * (e_prev + e) * step
            e_prev = e
        values[p] = acc
    return values


@njit(cache=True, parallel=True)
def simulate_jumpdiff_paths(n_paths, b, sigma, lam, eta, q, dt, t_cap, seed):
    values = np.empty(n_paths)
    seed_u = np.uint64(seed)
    for p in prange(n_paths):
        key = _path_key(seed_u, p)
        horizon = _horizon(key, q, t_cap)
        x = 0.0
        e_prev = 1.0
        acc = 0.0
        t_cur = 0.0
        m = 0  # next interior grid point is (m + 1) * dt
        j = 0  # arrival ordinal
        k = 0  # interval ordinal (Gaussian pair index)
        next_arr = -math.log(_u01(key, CH_JUMP_A, np.uint64(0))) / lam
        while t_cur < horizon:
            t_grid = (m + 1) * dt
            t_next = t_grid if t_grid < horizon else horizon
            is_jump = next_arr < t_next
            if is_jump:
                t_next = next_arr
            step = t_next - t_cur
            z = _gauss(key, k)
            k += 1
            x += b * step + math.sqrt(sigma * step) * z
            e = math.exp(x)
            acc += 0.5 * (e_prev + e) * step
            if is_jump:
                size = -math.log(_u01(key, CH_JUMP_S, np.uint64(j))) / eta
                x -= size
                e_prev = math.exp(x)
                j += 1
                next_arr += -math.log(_u01(key, CH_JUMP_A, np.uint64(j))) / lam
            else:
                e_prev = e
                if t_next == t_grid:
                    m += 1
            t_cur = t_next
        values[p] = acc
    return values


def warm_up():
    """Trigger JIT compilation of every kernel on tiny inputs."""
    psi = np.array([6.0, 16.0, 30.0, 48.0, 70.0])
    alt_series_sum(1.0, 0.5, psi, 1e-6)
    pos_series_sum(0.5, psi, 1e-6)
    simulate_brownian_paths(2, 0.0, 4.0, 2.0, 0.25, 1.0, 1)
    simulate_stable_paths(2, 0.0, 1.0, 1.5, 2.0, 0.25, 1.0, 1)
    simulate_jumpdiff_paths(2, 1.0, 2.0, 3.0, 2.0, 2.0, 0.25, 1.0, 1)
