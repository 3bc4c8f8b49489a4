"""Seeded Monte Carlo oracle for the exponential functional.

Paths of the exponent are simulated on a fixed grid of width ``dt`` up to an
exponential killing time (drawn per path when ``q > 0``) or a deterministic
cap (when ``q = 0``), and the functional is accumulated with the trapezoid
rule.  All randomness is counter-based: every draw is a pure function of
``(seed, path, channel, index)``, so results are bit-identical for any
worker-thread count and across runs.  The compiled and plain-NumPy backends
implement the same draw layout and agree to floating-point noise.

Samples can be persisted in a small binary format: a 16-byte header (magic
``EXPF``, version, count) followed by little-endian IEEE doubles.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import ConditionHViolated, InvalidConfig, InvalidParameter
from .levy_model import LevyModel

__all__ = [
    "EXPF_MAGIC",
    "EXPF_VERSION",
    "McConfig",
    "McSample",
    "default_time_cap",
    "empirical_asian",
    "empirical_survival",
    "read_expf",
    "simulate",
    "write_expf",
]

EXPF_MAGIC = b"EXPF"
EXPF_VERSION = 1
_HEADER = struct.Struct("<4sIQ")


@dataclass(frozen=True, slots=True)
class McConfig:
    """Simulation controls.

    ``t_cap`` is only consulted when ``q = 0`` (no killing); ``None`` picks
    :func:`default_time_cap` for the model.
    """

    n_paths: int = 100_000
    dt: float = 1e-3
    seed: int = 42
    t_cap: float | None = None

    def __post_init__(self):
        if not (isinstance(self.n_paths, int) and self.n_paths >= 1):
            raise InvalidParameter(
                f"n_paths must be an integer >= 1, got {self.n_paths}")
        if not (isinstance(self.dt, float) and math.isfinite(self.dt)
                and self.dt > 0.0):
            raise InvalidParameter(f"dt must be finite and > 0, got {self.dt}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2 ** 64):
            raise InvalidParameter(
                f"seed must be an integer in [0, 2**64), got {self.seed}")
        if self.t_cap is not None and not (
                isinstance(self.t_cap, float) and math.isfinite(self.t_cap)
                and self.t_cap > 0.0):
            raise InvalidParameter(
                f"t_cap must be finite and > 0, got {self.t_cap}")


@dataclass(frozen=True, slots=True)
class McSample:
    """Simulated values of the functional with their provenance."""

    values: np.ndarray
    config: McConfig
    model: LevyModel
    q: float


def default_time_cap(model: LevyModel) -> float:
    """Horizon for un-killed simulation, from the positive root ``theta``.

    ``exp(u xi_t)`` has expectation ``exp(psi(u) t)``; at ``u = theta/2`` the
    exponent ``psi(theta/2)`` is strictly negative, and running until that
    expectation is ~1e-8 makes the neglected tail of the time integral
    statistically invisible next to Monte Carlo noise.
    """
    theta = model.positive_root()
    decay = model.psi(theta / 2.0)
    return 2.0 * math.log(1e4) / abs(decay)


def simulate(model: LevyModel, q: float, config: McConfig = McConfig()) -> McSample:
    """Draw ``config.n_paths`` values of the functional killed at rate ``q``."""
    if not (isinstance(q, (int, float)) and math.isfinite(q) and q >= 0.0):
        raise InvalidParameter(f"killing rate q must be finite and >= 0, got {q}")
    q = float(q)
    if q == 0.0:
        if model.mean_increment() >= 0.0:
            raise ConditionHViolated(
                "q = 0 requires a negative mean; the functional diverges")
        t_cap = config.t_cap if config.t_cap is not None else default_time_cap(model)
    else:
        t_cap = 0.0  # unused: every path draws its own killing time
    kern = kernels()
    if model.family == "brownian":
        values = kern.simulate_brownian_paths(
            config.n_paths, model.b, model.sigma, q, config.dt, t_cap, config.seed)
    elif model.family == "jumpdiff":
        values = kern.simulate_jumpdiff_paths(
            config.n_paths, model.b, model.sigma, model.lam, model.eta, q,
            config.dt, t_cap, config.seed)
    else:
        values = kern.simulate_stable_paths(
            config.n_paths, model.b, model.c, model.alpha, q, config.dt, t_cap,
            config.seed)
    return McSample(values=values, config=config, model=model, q=q)


def empirical_survival(sample: McSample, t: float) -> tuple[float, float]:
    """Estimated ``P(functional >= t)`` and its standard error."""
    if not (math.isfinite(t) and t >= 0.0):
        raise InvalidParameter(f"threshold must be finite and >= 0, got {t}")
    n = sample.values.size
    p_hat = float(np.count_nonzero(sample.values >= t)) / n
    se = math.sqrt(p_hat * (1.0 - p_hat) / n)
    return p_hat, se


def empirical_asian(sample: McSample, strike: float) -> tuple[float, float]:
    """Estimated call payoff ``E (functional - strike)+`` and standard error."""
    if not (math.isfinite(strike) and strike >= 0.0):
        raise InvalidParameter(f"strike must be finite and >= 0, got {strike}")
    payoff = np.maximum(sample.values - strike, 0.0)
    n = payoff.size
    mean = float(payoff.mean())
    if n < 2:
        return mean, 0.0
    se = float(payoff.std(ddof=1)) / math.sqrt(n)
    return mean, se


def write_expf(path, values) -> None:
    """Persist an array of doubles in the EXPF binary sample format."""
    values = np.ascontiguousarray(values, dtype="<f8")
    if values.ndim != 1:
        raise InvalidParameter("EXPF files store a flat array of doubles")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(EXPF_MAGIC, EXPF_VERSION, values.size))
        fh.write(values.tobytes())


def read_expf(path) -> np.ndarray:
    """Read an EXPF binary sample file back into a float array."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise InvalidConfig(f"{path}: truncated EXPF header")
        magic, version, count = _HEADER.unpack(header)
        if magic != EXPF_MAGIC:
            raise InvalidConfig(f"{path}: not an EXPF file (magic {magic!r})")
        if version != EXPF_VERSION:
            raise InvalidConfig(
                f"{path}: unsupported EXPF version {version} (expected {EXPF_VERSION})")
        payload = fh.read()
    if len(payload) != 8 * count:
        raise InvalidConfig(
            f"{path}: EXPF payload has {len(payload)} bytes, expected {8 * count}")
    return np.frombuffer(payload, dtype="<f8").copy()
