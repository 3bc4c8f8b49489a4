"""Pure-NumPy kernels: series summation and Monte Carlo path generation.

Mirror of :mod:`expfunc._kernels_nb` without JIT compilation.  Selected via
the ``EXPFUNC_NO_NUMBA`` environment variable (see :mod:`expfunc._backend`).

The series kernels vectorize the scalar term recurrences over chunks using
running cumulative products; the Monte Carlo kernels materialize per-path
step matrices in path chunks sized to a fixed memory budget.  Random numbers
come from the counter-based scheme in :mod:`expfunc._rng`, so the variates
consumed by path ``p`` are identical to the numba backend's.
"""

from __future__ import annotations

import math

import numpy as np

from ._rng import (
    CH_GAUSS,
    CH_JUMP_A,
    CH_JUMP_S,
    CH_TIME,
    TWO_PI,
    path_keys,
    uniforms,
)

STATUS_OK = 0
STATUS_EXHAUSTED = 1
STATUS_OVERFLOW = 2

_SERIES_CHUNK = 1024
_OVERFLOW_GUARD = 1e290
# Upper bound on (paths in chunk) x (steps) cells live at once in MC kernels.
_MC_CELL_BUDGET = 4_000_000


# ---------------------------------------------------------------------------
# Series summation
# ---------------------------------------------------------------------------

def alt_series_sum(kappa, z, psi_vals, rel_tol):
    """Sum the alternating series with terms t_0=1, t_{n+1} = -t_n (kappa+n) z / psi_vals[n].

    ``psi_vals[n]`` must hold the shifted-exponent value at integer argument
    ``n + 1``.  Stops at the first index past the term-magnitude peak where
    ``|t| <= (rel_tol/2) * |partial sum|`` held for 3 consecutive terms.

    Returns ``(status, value, trunc_bound, n_terms, max_abs_term)`` where
    ``status`` is ``STATUS_OK``, ``STATUS_EXHAUSTED`` (ran out of
    ``psi_vals`` before converging; ``trunc_bound`` is NaN) or
    ``STATUS_OVERFLOW`` (a term left the safe double range).
    """
    psi_vals = np.asarray(psi_vals, dtype=np.float64)
    m = psi_vals.shape[0]
    thr = 0.5 * rel_tol

    chunk_sums = [1.0]  # exact partial sums per chunk, combined with fsum
    running = 1.0       # fast running total, used only in the stop test
    t_carry = 1.0
    peak = 1.0
    streak = 0
    n_terms = 1         # t_0 already counted
    i0 = 0
    while i0 < m:
        hi = min(i0 + _SERIES_CHUNK, m)
        iv = np.arange(i0, hi, dtype=np.float64)
        ratios = (-(kappa + iv) * z) / psi_vals[i0:hi]
        terms = t_carry * np.cumprod(ratios)
        abs_t = np.abs(terms)
        if not np.all(np.isfinite(terms)) or abs_t.max() > _OVERFLOW_GUARD:
            return (STATUS_OVERFLOW, 0.0, math.nan, n_terms, math.inf)
        # partial sum *before* each term is added (loop semantics)
        before = running + np.concatenate(([0.0], np.cumsum(terms[:-1])))
        peaks = np.maximum.accumulate(np.maximum(abs_t, peak))
        qual = (abs_t < peaks) & (abs_t <= thr * np.abs(before))
        qq = np.concatenate((np.ones(streak, dtype=bool), qual))
        hits = np.flatnonzero(qq[2:] & qq[1:-1] & qq[:-2])
        if hits.size:
            third = int(hits[0]) + 2          # index in qq of the 3rd qualifier
            j = third - streak                # local index of the omitted term
            value = math.fsum(chunk_sums + [float(np.sum(terms[:j]))])
            return (STATUS_OK, value, float(abs_t[j]), n_terms + j,
                    float(peaks[j]))
        # carry trailing qualifier run into the next chunk
        not_q = np.flatnonzero(~qq)
        streak = int(qq.shape[0] - 1 - not_q[-1]) if not_q.size else int(qq.shape[0])
        chunk_sums.append(float(np.sum(terms)))
        running += float(np.sum(terms))
        t_carry = float(terms[-1])
        peak = float(peaks[-1])
        n_terms += hi - i0
        i0 = hi
    return (STATUS_EXHAUSTED, math.fsum(chunk_sums), math.nan, n_terms, peak)


def pos_series_sum(z, psi_vals, rel_tol):
    """Sum the positive series with terms t_0=1, t_{n+1} = t_n z / psi_vals[n].

    The term ratios ``z / psi_vals[n]`` decrease strictly in ``n``, so once a
    ratio drops below 1 the geometric bound ``t * r / (1 - r)`` dominates the
    tail.  Returns ``(status, value, trunc_bound, n_terms, max_abs_term)``.
    """
    psi_vals = np.asarray(psi_vals, dtype=np.float64)
    m = psi_vals.shape[0]
    thr = 0.5 * rel_tol

    chunk_sums = [1.0]
    running = 1.0
    t_carry = 1.0
    peak = 1.0
    n_terms = 1
    i0 = 0
    while i0 < m:
        hi = min(i0 + _SERIES_CHUNK, m)
        ratios = z / psi_vals[i0:hi]
        terms = t_carry * np.cumprod(ratios)
        if not np.all(np.isfinite(terms)) or terms.max() > _OVERFLOW_GUARD:
            return (STATUS_OVERFLOW, 0.0, math.nan, n_terms, math.inf)
        after = running + np.cumsum(terms)
        with np.errstate(divide="ignore", invalid="ignore"):
            tail_bound = np.where(
                ratios < 1.0, terms * ratios / (1.0 - ratios), math.inf
            )
        stop = np.flatnonzero(tail_bound <= thr * after)
        if stop.size:
            j = int(stop[0])
            value = math.fsum(chunk_sums + [float(np.sum(terms[: j + 1]))])
            mx = max(peak, float(terms[: j + 1].max()))
            return (STATUS_OK, value, float(tail_bound[j]), n_terms + j + 1, mx)
        chunk_sums.append(float(np.sum(terms)))
        running += float(np.sum(terms))
        t_carry = float(terms[-1])
        peak = max(peak, float(terms.max()))
        n_terms += hi - i0
        i0 = hi
    return (STATUS_EXHAUSTED, math.fsum(chunk_sums), math.nan, n_terms, peak)


# ---------------------------------------------------------------------------
# Monte Carlo path generation
# ---------------------------------------------------------------------------

def _killing_times(keys, q, t_cap):
    if q > 0.0:
        u = uniforms(keys, CH_TIME, np.zeros(keys.shape[0], dtype=np.uint64))
        return -np.log(u) / q
    return np.full(keys.shape[0], t_cap)


def _chunk_end(start, widths, budget):
    """Largest chunk end so that (paths) x (max width in chunk) <= budget."""
    tail = widths[start:]
    cummax = np.maximum.accumulate(tail)
    k = np.arange(1, tail.shape[0] + 1, dtype=np.int64)
    feasible = int(np.count_nonzero(k * cummax <= budget))
    return start + max(1, feasible)


def _gauss_increments(keys_col, n_steps):
    """Standard normal draws, one per (path, step), via Box-Muller."""
    idx = np.arange(n_steps, dtype=np.uint64)
    u1 = uniforms(keys_col, CH_GAUSS, (np.uint64(2) * idx)[None, :])
    u2 = uniforms(keys_col, CH_GAUSS, (np.uint64(2) * idx + np.uint64(1))[None, :])
    rad = np.sqrt(-2.0 * np.log(u1))
    np.cos(TWO_PI * u2, out=u2)
    rad *= u2
    return rad


def _trapezoid(exp_x, durations):
    """Trapezoid integral of exp(path) with exp(0)=1 at the left edge."""
    total = np.sum(exp_x * durations, axis=1)
    total += durations[:, 0]
    total += np.sum(exp_x[:, :-1] * durations[:, 1:], axis=1)
    return 0.5 * total


def simulate_brownian_paths(n_paths, b, sigma, q, dt, t_cap, seed):
    keys = path_keys(seed, np.arange(n_paths, dtype=np.uint64))
    horizon = _killing_times(keys, q, t_cap)
    n_steps_all = np.ceil(horizon / dt).astype(np.int64)
    values = np.empty(n_paths)
    start = 0
    while start < n_paths:
        end = _chunk_end(start, n_steps_all, _MC_CELL_BUDGET)
        t_chunk = horizon[start:end]
        m = int(n_steps_all[start:end].max())
        grid = np.arange(m, dtype=np.float64) * dt
        dur = np.clip(t_chunk[:, None] - grid[None, :], 0.0, dt)
        z = _gauss_increments(keys[start:end, None], m)
        z *= np.sqrt(sigma * dur)
        z += b * dur
        np.cumsum(z, axis=1, out=z)
        np.exp(z, out=z)
        values[start:end] = _trapezoid(z, dur)
        start = end
    return values


def simulate_stable_paths(n_paths, b, c, alpha, q, dt, t_cap, seed):
    keys = path_keys(seed, np.arange(n_paths, dtype=np.uint64))
    horizon = _killing_times(keys, q, t_cap)
    n_steps_all = np.ceil(horizon / dt).astype(np.int64)
    values = np.empty(n_paths)

    half = 0.5 * math.pi * alpha
    abs_cos = abs(math.cos(half))
    # beta = -1 (spectrally negative): atan(beta * tan(pi alpha / 2)) / alpha,
    # positive for alpha in (1, 2) and -> 0 as alpha -> 2.
    skew_shift = math.atan(-math.tan(half)) / alpha
    front = (1.0 + math.tan(half) ** 2) ** (1.0 / (2.0 * alpha))
    pow_w = (1.0 - alpha) / alpha

    start = 0
    while start < n_paths:
        end = _chunk_end(start, n_steps_all, _MC_CELL_BUDGET)
        t_chunk = horizon[start:end]
        m = int(n_steps_all[start:end].max())
        grid = np.arange(m, dtype=np.float64) * dt
        dur = np.clip(t_chunk[:, None] - grid[None, :], 0.0, dt)
        idx = np.arange(m, dtype=np.uint64)
        u1 = uniforms(keys[start:end, None], CH_GAUSS,
                      (np.uint64(2) * idx)[None, :])
        u2 = uniforms(keys[start:end, None], CH_GAUSS,
                      (np.uint64(2) * idx + np.uint64(1))[None, :])
        angle = math.pi * (u1 - 0.5)
        w = -np.log(u2)
        shifted = alpha * (angle + skew_shift)
        draw = (
            front
            * np.sin(shifted)
            / np.cos(angle) ** (1.0 / alpha)
            * (np.cos(angle - shifted) / w) ** pow_w
        )
        inc = (c * abs_cos * dur) ** (1.0 / alpha) * draw
        inc += b * dur
        np.cumsum(inc, axis=1, out=inc)
        np.exp(inc, out=inc)
        values[start:end] = _trapezoid(inc, dur)
        start = end
    return values


def _jump_arrivals(keys, horizon, lam):
    """Per-path Poisson arrival times and exponential sizes (padded with inf).

    Draws inter-arrival columns until every path's running arrival time has
    left ``[0, horizon)``.  Column ``j`` uses counter index ``j`` on the
    arrival and size channels, matching the scalar backend's draw order.
    """
    n = keys.shape[0]
    cols_t = []
    cols_s = []
    cum = np.zeros(n)
    j = 0
    while True:
        u = uniforms(keys, CH_JUMP_A, np.full(n, j, dtype=np.uint64))
        cum = cum - np.log(u) / lam
        if not np.any(cum < horizon):
            break
        us = uniforms(keys, CH_JUMP_S, np.full(n, j, dtype=np.uint64))
        cols_t.append(np.where(cum < horizon, cum, np.inf))
        cols_s.append(np.where(cum < horizon, -np.log(us), 0.0))
        j += 1
    if not cols_t:
        return (np.empty((n, 0)), np.empty((n, 0)))
    return (np.stack(cols_t, axis=1), np.stack(cols_s, axis=1))


def warm_up():
    """No JIT here; exercise each kernel once for interface symmetry."""
    psi = np.array([6.0, 16.0, 30.0, 48.0, 70.0])
    alt_series_sum(1.0, 0.5, psi, 1e-6)
    pos_series_sum(0.5, psi, 1e-6)
    simulate_brownian_paths(2, 0.0, 4.0, 2.0, 0.25, 1.0, 1)
    simulate_stable_paths(2, 0.0, 1.0, 1.5, 2.0, 0.25, 1.0, 1)
    simulate_jumpdiff_paths(2, 1.0, 2.0, 3.0, 2.0, 2.0, 0.25, 1.0, 1)


def simulate_jumpdiff_paths(n_paths, b, sigma, lam, eta, q, dt, t_cap, seed):
    keys = path_keys(seed, np.arange(n_paths, dtype=np.uint64))
    horizon = _killing_times(keys, q, t_cap)
    arr_t, arr_e = _jump_arrivals(keys, horizon, lam)
    arr_s = arr_e / eta  # exponential jump magnitudes, mean 1/eta
    n_jumps = arr_t.shape[1]
    # interior grid points strictly inside (0, T), then T, then jump times
    n_interior_all = np.maximum(np.ceil(horizon / dt).astype(np.int64) - 1, 0)
    widths = n_interior_all + 1 + n_jumps
    values = np.empty(n_paths)
    start = 0
    while start < n_paths:
        end = _chunk_end(start, widths, _MC_CELL_BUDGET)
        t_chunk = horizon[start:end]
        mi = int(n_interior_all[start:end].max())
        grid = (np.arange(mi, dtype=np.float64) + 1.0) * dt
        grid_times = np.where(
            grid[None, :] < t_chunk[:, None], grid[None, :], np.inf
        )
        times = np.concatenate(
            (grid_times, t_chunk[:, None], arr_t[start:end]), axis=1
        )
        jumps = np.concatenate(
            (
                np.zeros_like(grid_times),
                np.zeros((end - start, 1)),
                -arr_s[start:end],
            ),
            axis=1,
        )
        order = np.argsort(times, axis=1, kind="stable")
        times = np.take_along_axis(times, order, axis=1)
        jumps = np.take_along_axis(jumps, order, axis=1)
        np.minimum(times, t_chunk[:, None], out=times)
        dur = np.diff(times, axis=1, prepend=0.0)
        z = _gauss_increments(keys[start:end, None], times.shape[1])
        z *= np.sqrt(sigma * dur)
        z += b * dur
        z += jumps
        np.cumsum(z, axis=1, out=z)       # post-jump log-price at each time
        pre = np.exp(z - jumps)           # pre-jump value at the interval end
        post = np.exp(z)
        total = np.sum(pre * dur, axis=1)
        total += dur[:, 0] * 1.0
        total += np.sum(post[:, :-1] * dur[:, 1:], axis=1)
        values[start:end] = 0.5 * total
        start = end
    return values
