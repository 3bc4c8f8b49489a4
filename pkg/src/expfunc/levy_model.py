"""Spectrally negative Levy models with unbounded variation paths.

A model is described by its Laplace exponent psi on the positive half line,

    psi(u) = b*u + (sigma/2)*u**2 + jump part,      E[exp(u*X_1)] = exp(psi(u)),

for a log-price process X whose jumps, if any, are all negative.  Three
parametric families are supported:

* ``brownian``  psi(u) = b*u + (sigma/2)*u**2                       (sigma > 0)
* ``jumpdiff``  psi(u) = b*u + (sigma/2)*u**2 + lam*(eta/(eta+u)-1) (sigma > 0)
* ``stable``    psi(u) = b*u + c*u**alpha                           (1 < alpha <= 2)

All machinery downstream requires psi(u)/u -> infinity, i.e. paths of
unbounded variation; model construction enforces it.

The central derived object is the shifted exponent

    psi_gamma(u) = psi(u + gamma) - q,

where gamma is phi(q), the inverse of psi at level q, when q > 0, and the
positive root theta of psi when q = 0 (which requires a negative mean).
psi_gamma is again a conservative Laplace exponent with psi_gamma(0) = 0
and positive derivative at zero; its values at the positive integers feed
the power-series coefficients.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .errors import (
    ConditionHViolated,
    DomainError,
    InvalidConfig,
    InvalidParameter,
    NoPositiveRoot,
    UnboundedVariationViolated,
)

__all__ = [
    "LevyModel",
    "RootKind",
    "ShiftedExponent",
    "parse_model_file",
]

_FAMILIES = ("brownian", "jumpdiff", "stable")

# Relative width at which bracketing bisection stops before the Newton polish.
_ROOT_REL_TOL = 1e-13
_MAX_BISECT = 200


class RootKind(enum.Enum):
    """Which root of psi provided the shift of a ShiftedExponent."""

    THETA = "theta"        # positive root of psi, used when q = 0
    PHI_OF_Q = "phi_of_q"  # inverse of psi at level q, used when q > 0


def _require_finite(name: str, value: float) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError) as exc:
        raise InvalidParameter(f"parameter {name!r} is not a real number") from exc
    if not math.isfinite(value):
        raise InvalidParameter(f"parameter {name!r} must be finite, got {value!r}")
    return value


@dataclass(frozen=True, slots=True)
class LevyModel:
    """Immutable description of one spectrally negative Levy process.

    Use the factory classmethods (:meth:`brownian`, :meth:`jump_diffusion`,
    :meth:`stable`) or :meth:`from_params`; direct construction runs the
    same validation.
    """

    family: str
    b: float
    sigma: float = 0.0
    lam: float = 0.0
    eta: float = 0.0
    c: float = 0.0
    alpha: float = 0.0

    def __post_init__(self) -> None:
        if self.family not in _FAMILIES:
            raise InvalidParameter(
                f"unknown family {self.family!r}; expected one of {_FAMILIES}")
        object.__setattr__(self, "b", _require_finite("b", self.b))
        for name in ("sigma", "lam", "eta", "c", "alpha"):
            object.__setattr__(self, name, _require_finite(name, getattr(self, name)))
        if self.family == "brownian":
            if self.sigma < 0.0:
                raise InvalidParameter("sigma must be >= 0")
            if self.sigma == 0.0:
                raise UnboundedVariationViolated(
                    "brownian family with sigma=0 is a pure drift: "
                    "psi(u)/u stays bounded")
        elif self.family == "jumpdiff":
            if self.lam <= 0.0:
                raise InvalidParameter("lambda must be > 0")
            if self.eta <= 0.0:
                raise InvalidParameter("eta must be > 0")
            if self.sigma < 0.0:
                raise InvalidParameter("sigma must be >= 0")
            if self.sigma == 0.0:
                raise UnboundedVariationViolated(
                    "jumpdiff family needs sigma>0: drift plus finite-activity "
                    "jumps has bounded variation")
        else:  # stable
            if self.c <= 0.0:
                raise InvalidParameter("c must be > 0")
            if self.alpha > 2.0 or self.alpha <= 0.0:
                raise InvalidParameter("alpha must lie in (1, 2]")
            if self.alpha <= 1.0:
                raise UnboundedVariationViolated(
                    "stable family needs alpha>1: psi(u)/u stays bounded "
                    f"for alpha={self.alpha}")

    # -- constructors -------------------------------------------------------

    @classmethod
    def brownian(cls, b: float, sigma: float) -> "LevyModel":
        """Drift b plus Gaussian part with psi(u) = b*u + (sigma/2)*u**2."""
        return cls(family="brownian", b=b, sigma=sigma)

    @classmethod
    def jump_diffusion(cls, b: float, sigma: float, lam: float, eta: float) -> "LevyModel":
        """Gaussian part plus downward exponential jumps.

        Jumps arrive at rate lam and have magnitude Exp(eta), giving
        psi(u) = b*u + (sigma/2)*u**2 + lam*(eta/(eta+u) - 1).
        """
        return cls(family="jumpdiff", b=b, sigma=sigma, lam=lam, eta=eta)

    @classmethod
    def stable(cls, b: float, c: float, alpha: float) -> "LevyModel":
        """Drift plus spectrally negative alpha-stable part, psi(u) = b*u + c*u**alpha.

        alpha = 2 is permitted and coincides with a brownian model of
        Gaussian coefficient sigma = 2*c.
        """
        return cls(family="stable", b=b, c=c, alpha=alpha)

    @classmethod
    def from_params(cls, family: str, **params: float) -> "LevyModel":
        """Build a model from a family name and keyword parameters."""
        builders = {
            "brownian": (cls.brownian, ("b", "sigma")),
            "jumpdiff": (cls.jump_diffusion, ("b", "sigma", "lam", "eta")),
            "stable": (cls.stable, ("b", "c", "alpha")),
        }
        if family not in builders:
            raise InvalidParameter(
                f"unknown family {family!r}; expected one of {_FAMILIES}")
        builder, names = builders[family]
        missing = [n for n in names if n not in params]
        extra = [n for n in params if n not in names]
        if missing:
            raise InvalidParameter(
                f"family {family!r} needs parameter(s) {', '.join(missing)}")
        if extra:
            raise InvalidParameter(
                f"parameter(s) {', '.join(extra)} not valid for family {family!r}")
        return builder(**{n: params[n] for n in names})

    # -- Laplace exponent ---------------------------------------------------

    def psi(self, u: float) -> float:
        """Laplace exponent at u >= 0."""
        u = float(u)
        if not math.isfinite(u) or u < 0.0:
            raise DomainError(f"psi requires u >= 0, got {u!r}")
        if self.family == "brownian":
            return self.b * u + 0.5 * self.sigma * u * u
        if self.family == "jumpdiff":
            return (self.b * u + 0.5 * self.sigma * u * u
                    + self.lam * (self.eta / (self.eta + u) - 1.0))
        return self.b * u + self.c * u ** self.alpha

    def psi_array(self, u) -> np.ndarray:
        """Vectorized psi over a NumPy array of nonnegative arguments."""
        u = np.asarray(u, dtype=np.float64)
        if u.size and (not np.all(np.isfinite(u)) or float(u.min()) < 0.0):
            raise DomainError("psi requires finite u >= 0")
        if self.family == "brownian":
            return self.b * u + 0.5 * self.sigma * u * u
        if self.family == "jumpdiff":
            return (self.b * u + 0.5 * self.sigma * u * u
                    + self.lam * (self.eta / (self.eta + u) - 1.0))
        return self.b * u + self.c * np.power(u, self.alpha)

    def psi_prime(self, u: float) -> float:
        """Derivative of psi at u >= 0 (one-sided at u = 0)."""
        u = float(u)
        if not math.isfinite(u) or u < 0.0:
            raise DomainError(f"psi_prime requires u >= 0, got {u!r}")
        if self.family == "brownian":
            return self.b + self.sigma * u
        if self.family == "jumpdiff":
            den = self.eta + u
            return self.b + self.sigma * u - self.lam * self.eta / (den * den)
        if self.alpha == 2.0:
            return self.b + 2.0 * self.c * u
        # u**(alpha-1) -> 0 as u -> 0+ for alpha < 2, so the one-sided
        # derivative at zero is plain b.
        return self.b + self.c * self.alpha * u ** (self.alpha - 1.0)

    def psi_mp(self, u) -> mp.mpf:
        """psi evaluated in the active mpmath precision."""
        u = mp.mpf(u)
        if self.family == "brownian":
            return mp.mpf(self.b) * u + mp.mpf(self.sigma) / 2 * u * u
        if self.family == "jumpdiff":
            eta = mp.mpf(self.eta)
            return (mp.mpf(self.b) * u + mp.mpf(self.sigma) / 2 * u * u
                    + mp.mpf(self.lam) * (eta / (eta + u) - 1))
        return mp.mpf(self.b) * u + mp.mpf(self.c) * u ** mp.mpf(self.alpha)

    def psi_prime_mp(self, u) -> mp.mpf:
        """Derivative of psi in the active mpmath precision."""
        u = mp.mpf(u)
        if self.family == "brownian":
            return mp.mpf(self.b) + mp.mpf(self.sigma) * u
        if self.family == "jumpdiff":
            den = mp.mpf(self.eta) + u
            return (mp.mpf(self.b) + mp.mpf(self.sigma) * u
                    - mp.mpf(self.lam) * mp.mpf(self.eta) / (den * den))
        a = mp.mpf(self.alpha)
        return mp.mpf(self.b) + mp.mpf(self.c) * a * u ** (a - 1)

    def mean_increment(self) -> float:
        """Expected increment per unit time, the one-sided psi'(0+)."""
        if self.family == "jumpdiff":
            return self.b - self.lam / self.eta
        return self.b

    # -- roots --------------------------------------------------------------

    def positive_root(self) -> float:
        """The unique root theta > 0 of psi, requiring a negative mean."""
        if self.mean_increment() >= 0.0:
            raise NoPositiveRoot(
                "psi has no positive root: mean increment "
                f"{self.mean_increment()!r} is >= 0")
        # psi decreases to its minimum then increases through zero, so first
        # locate the minimizer by bisecting psi' (nondecreasing by convexity).
        hi = 1.0
        while self.psi_prime(hi) <= 0.0:
            hi *= 2.0
            if hi > 1e300:
                raise NoPositiveRoot("psi' never becomes positive")
        u_star = _bisect_nondecreasing(self.psi_prime, 0.0, hi)
        lo = u_star
        step = max(u_star, 1.0)
        hi = lo + step
        while self.psi(hi) <= 0.0:
            step *= 2.0
            hi = lo + step
            if hi > 1e300:
                raise NoPositiveRoot("psi never becomes positive")
        root = _bisect_nondecreasing(self.psi, lo, hi)
        return _newton_polish(self.psi, self.psi_prime, root, lo, hi)

    def psi_inverse(self, q: float) -> float:
        """The inverse of psi on its increasing branch, phi(q) for q >= 0.

        phi(0) is theta when the mean is negative, else 0.
        """
        q = float(q)
        if not math.isfinite(q) or q < 0.0:
            raise InvalidParameter(f"psi_inverse requires q >= 0, got {q!r}")
        if q == 0.0:
            return self.positive_root() if self.mean_increment() < 0.0 else 0.0
        lo = self.positive_root() if self.mean_increment() < 0.0 else 0.0
        step = max(lo, 1.0)
        hi = lo + step
        while self.psi(hi) <= q:
            step *= 2.0
            hi = lo + step
            if hi > 1e300:
                raise InvalidParameter("psi never reaches level q")
        root = _bisect_nondecreasing(lambda u: self.psi(u) - q, lo, hi)
        return _newton_polish(lambda u: self.psi(u) - q, self.psi_prime, root, lo, hi)

    # -- shifted exponent ---------------------------------------------------

    def shift(self, q: float) -> "ShiftedExponent":
        """Shift psi into conservative form, psi_gamma(u) = psi(u+gamma) - q.

        gamma is phi(q) for q > 0 and theta for q = 0; the latter exists
        only for a negative mean (condition H).
        """
        q = float(q)
        if not math.isfinite(q) or q < 0.0:
            raise InvalidParameter(f"shift requires q >= 0, got {q!r}")
        if q == 0.0:
            if self.mean_increment() >= 0.0:
                raise ConditionHViolated(
                    "condition H violated: q=0 and mean increment "
                    f"{self.mean_increment()!r} >= 0")
            return ShiftedExponent(base=self, q=0.0,
                                   shift=self.positive_root(),
                                   kind=RootKind.THETA)
        return ShiftedExponent(base=self, q=q, shift=self.psi_inverse(q),
                               kind=RootKind.PHI_OF_Q)

    def params_key(self) -> tuple:
        """Hashable canonical key used for caching derived quantities."""
        return (self.family, self.b, self.sigma, self.lam, self.eta,
                self.c, self.alpha)


@dataclass(frozen=True, slots=True)
class ShiftedExponent:
    """The conservative shifted exponent psi_gamma(u) = psi(u + gamma) - q."""

    base: LevyModel
    q: float
    shift: float
    kind: RootKind

    def psi_shifted(self, u: float) -> float:
        """psi_gamma(u) for u >= 0; vanishes at u = 0 by construction."""
        return self.base.psi(u + self.shift) - self.q

    def psi_shifted_mp(self, u, shift_mp=None) -> mp.mpf:
        """psi_gamma in the active mpmath precision.

        ``shift_mp`` lets callers supply a root refined beyond double
        precision; the stored double shift is used otherwise.
        """
        g = mp.mpf(self.shift) if shift_mp is None else shift_mp
        return self.base.psi_mp(mp.mpf(u) + g) - mp.mpf(self.q)

    def derivative_at_zero(self) -> float:
        """psi_gamma'(0+) = psi'(gamma), strictly positive under condition H."""
        return self.base.psi_prime(self.shift)

    def refined_shift_mp(self) -> mp.mpf:
        """The shift re-solved by Newton iteration at the active precision."""
        model, q = self.base, self.q
        x = mp.mpf(self.shift)
        target = mp.mpf(q)
        for _ in range(mp.mp.prec):  # Newton doubles digits; converges long before
            f = model.psi_mp(x) - target
            fp = model.psi_prime_mp(x)
            if fp <= 0:
                break
            step = f / fp
            x = x - step
            if abs(step) <= abs(x) * mp.mpf(2) ** (8 - mp.mp.prec):
                break
        return x

    def cache_key(self) -> tuple:
        return self.base.params_key() + (self.q,)


# ---------------------------------------------------------------------------
# root-finding helpers
# ---------------------------------------------------------------------------

def _bisect_nondecreasing(f, lo: float, hi: float) -> float:
    """Bisection for a nondecreasing f with f(lo) <= 0 < f(hi)."""
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if hi - lo <= _ROOT_REL_TOL * max(abs(lo), abs(hi), 1e-30):
            return mid
        if f(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _newton_polish(f, fprime, x: float, lo: float, hi: float) -> float:
    """One guarded Newton step to sharpen a bisection root."""
    fp = fprime(x)
    if fp > 0.0:
        x_new = x - f(x) / fp
        if lo <= x_new <= hi and math.isfinite(x_new):
            return x_new
    return x


# ---------------------------------------------------------------------------
# model file parsing
# ---------------------------------------------------------------------------

_FILE_KEYS = {
    "brownian": {"b", "sigma"},
    "jumpdiff": {"b", "sigma", "lambda", "eta"},
    "stable": {"b", "c", "alpha"},
}
_ALL_KEYS = {"family", "q", "b", "sigma", "lambda", "eta", "c", "alpha"}


def parse_model_file(path: str) -> tuple[LevyModel, float | None]:
    """Read a flat key-value model description.

    The format is one ``key = value`` pair per line; blank lines and lines
    starting with ``#`` are ignored.  ``family`` selects the parameter set
    (``brownian``, ``jumpdiff`` or ``stable``); ``q`` is optional.  Unknown
    keys, duplicates, missing parameters and parameters belonging to a
    different family are all errors.

    Returns the model and the file's q (or None if absent).
    """
    entries: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise InvalidConfig(
                        f"{path}:{lineno}: expected 'key = value', got {line!r}")
                key, _, value = line.partition("=")
                key = key.strip().lower()
                value = value.strip()
                if key not in _ALL_KEYS:
                    raise InvalidConfig(f"{path}:{lineno}: unknown key {key!r}")
                if key in entries:
                    raise InvalidConfig(f"{path}:{lineno}: duplicate key {key!r}")
                entries[key] = value
    except OSError as exc:
        raise InvalidConfig(f"cannot read model file {path}: {exc}") from exc

    if "family" not in entries:
        raise InvalidConfig(f"{path}: missing required key 'family'")
    family = entries.pop("family").lower()
    if family not in _FILE_KEYS:
        raise InvalidConfig(
            f"{path}: unknown family {family!r}; expected one of {_FAMILIES}")

    q: float | None = None
    if "q" in entries:
        q = _parse_real(path, "q", entries.pop("q"))
        if q < 0.0:
            raise InvalidConfig(f"{path}: q must be >= 0, got {q}")

    allowed = _FILE_KEYS[family]
    wrong = sorted(set(entries) - allowed)
    if wrong:
        raise InvalidConfig(
            f"{path}: key(s) {', '.join(wrong)} not valid for family {family!r}")
    missing = sorted(allowed - set(entries))
    if missing:
        raise InvalidConfig(
            f"{path}: family {family!r} needs key(s) {', '.join(missing)}")

    values = {k: _parse_real(path, k, v) for k, v in entries.items()}
    if family == "jumpdiff":
        values["lam"] = values.pop("lambda")
    model = LevyModel.from_params(family, **values)
    return model, q


def _parse_real(path: str, key: str, text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise InvalidConfig(f"{path}: value for {key!r} is not a number: {text!r}") from exc
    if not math.isfinite(value):
        raise InvalidConfig(f"{path}: value for {key!r} must be finite")
    return value


# ---------------------------------------------------------------------------
# Short operation names mirroring the external interface vocabulary.  Each is
# a thin wrapper over the richer object API above.
# ---------------------------------------------------------------------------

def build_model(family: str, **params) -> LevyModel:
    """Construct a validated model from a family name and keyword parameters."""
    return LevyModel.from_params(family, **params)


def psi(model: LevyModel, u: float) -> float:
    """Laplace exponent of the model at u >= 0."""
    return model.psi(u)


def psi_derivative(model: LevyModel, u: float) -> float:
    """Derivative of the Laplace exponent at u >= 0."""
    return model.psi_prime(u)


def mean_xi1(model: LevyModel) -> float:
    """Mean of the process at unit time, psi'(0+)."""
    return model.mean_increment()


def theta(model: LevyModel) -> float:
    """Positive root of psi; requires a negative mean."""
    return model.positive_root()


def phi(model: LevyModel, q: float) -> float:
    """Value of the increasing inverse of psi at q >= 0."""
    return model.psi_inverse(q)


def shift(model: LevyModel, q: float) -> ShiftedExponent:
    """Shifted exponent psi_gamma for the killing rate q (condition H required)."""
    return model.shift(q)
