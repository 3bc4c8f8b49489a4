"""Counter-based random number generation shared by both kernel backends.

Every random variate consumed by a simulated path is produced by hashing a
``(path key, channel, index)`` triple with the splitmix64 finalizer.  The
scheme is stateless: any variate can be regenerated in isolation, so path
``p`` draws the same numbers no matter how paths are distributed over worker
threads or how the surrounding code is vectorized.  This is what makes the
Monte Carlo output bit-identical across thread counts and run orders.

Layout
------
* path key   = ``mix64(seed + GOLDEN * (p + 1))`` for path index ``p``.
* counter    = ``channel * 2**32 + index`` (index must stay below 2**32).
* raw word   = ``mix64(key XOR mix64(counter + GOLDEN))``.
* uniform    = ``((word >> 11) + 0.5) * 2**-53`` -- strictly inside (0, 1).

Channels separate independent variate streams per path:

=============  ===========================================================
``CH_TIME``    the exponential killing time (index 0 only)
``CH_GAUSS``   per-interval Gaussian / stable increment draws (two uniforms
               per increment, at indices ``2*m`` and ``2*m + 1``)
``CH_JUMP_A``  exponential inter-arrival times of compound-Poisson jumps
``CH_JUMP_S``  exponential jump sizes
=============  ===========================================================

The numba and NumPy backends re-implement ``mix64`` in their own idiom but
must use exactly these constants so their uniform streams coincide bit for
bit.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX_MULT_1 = np.uint64(0xBF58476D1CE4E5B9)
MIX_MULT_2 = np.uint64(0x94D049BB133111EB)

CH_TIME = np.uint64(1)
CH_GAUSS = np.uint64(2)
CH_JUMP_A = np.uint64(3)
CH_JUMP_S = np.uint64(4)

CHANNEL_SHIFT = np.uint64(32)

U01_SHIFT = np.uint64(11)
U01_SCALE = 2.0 ** -53

TWO_PI = 6.283185307179586476925286766559


def mix64(x):
    """splitmix64 finalizer on uint64 scalars or arrays (NumPy semantics)."""
    with np.errstate(over="ignore"):
        x = np.uint64(x) if np.isscalar(x) else x.astype(np.uint64, copy=True)
        x ^= x >> np.uint64(30)
        x *= MIX_MULT_1
        x ^= x >> np.uint64(27)
        x *= MIX_MULT_2
        x ^= x >> np.uint64(31)
    return x


def path_keys(seed: int, path_indices):
    """Vector of per-path keys for uint64 ``path_indices``."""
    with np.errstate(over="ignore"):
        seed = np.uint64(seed)
        idx = np.asarray(path_indices, dtype=np.uint64)
        base = seed + GOLDEN * (idx + np.uint64(1))
    return mix64(base)


def raw_words(keys, channel, indices):
    """Raw uint64 hash words for broadcastable ``keys`` and ``indices``."""
    with np.errstate(over="ignore"):
        counter = (np.uint64(channel) << CHANNEL_SHIFT) + np.asarray(
            indices, dtype=np.uint64
        )
        inner = mix64(counter + GOLDEN)
        outer = np.asarray(keys, dtype=np.uint64) ^ inner
    return mix64(outer)


def uniforms(keys, channel, indices):
    """Uniform (0,1) variates for broadcastable ``keys`` and ``indices``."""
    w = raw_words(keys, channel, indices)
    return ((w >> U01_SHIFT).astype(np.float64) + 0.5) * U01_SCALE
