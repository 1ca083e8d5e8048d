"""One-dimensional probability laws used for coefficients, KL variables and alpha^2.

A :class:`ScalarDensity` couples a vectorized pdf with the metadata the
engine needs to pick a node rule (``tail_class``) and, for the families the
compiled kernel understands, a ``family``/``params`` pair describing the law
as an affine image of a standard pivot.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate, special

from .errors import InvalidLawError, UnsupportedLawError

GAUSSIAN, COMPACT, HEAVY = "gaussian", "compact", "heavy"
TAIL_CLASSES = (GAUSSIAN, COMPACT, HEAVY)

QUARTIC_NORM = np.sqrt(2.0) / np.pi
# sup_x f_quartic(x) / f_cauchy(x), attained at x**2 = sqrt(2) - 1
QUARTIC_CAUCHY_ENVELOPE = 1.0 + 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class ScalarDensity:
    """A univariate density.

    ``family`` is one of ``"normal"``, ``"uniform"``, ``"quartic"`` or
    ``"custom"``; for the first three the law equals ``loc + scale * Z`` with
    ``Z`` the standard member (standard normal, uniform on ``(-1, 1)``,
    density ``sqrt(2) / (pi * (1 + z**4))``).
    """

    pdf: Callable[[np.ndarray], np.ndarray]
    support: Tuple[float, float]
    tail_class: str
    moments_hint: Optional[Tuple[float, float]] = None
    family: str = "custom"
    loc: float = 0.0
    scale: float = 1.0
    name: str = "custom"
    sampler: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.tail_class not in TAIL_CLASSES:
            raise ValueError(f"unknown tail_class {self.tail_class!r}")
        lo, hi = self.support
        if not lo <= hi:
            raise ValueError("support must satisfy lo <= hi")

    def __call__(self, u):
        return self.evaluate(u)

    def evaluate(self, u):
        u = np.asarray(u, dtype=float)
        lo, hi = self.support
        out = np.asarray(self.pdf(u), dtype=float)
        if np.isfinite(lo) or np.isfinite(hi):
            out = np.where((u < lo) | (u > hi), 0.0, out)
        return out

    @property
    def is_compact(self):
        return bool(np.isfinite(self.support[0]) and np.isfinite(self.support[1]))

    @property
    def symmetric(self):
        return self.family in ("normal", "uniform", "quartic") and self.loc == 0.0

    def describe(self):
        return {"family": self.family, "name": self.name, "loc": self.loc, "scale": self.scale,
                "support": list(self.support)}

    def sample(self, rng, size):
        if self.sampler is None:
            raise UnsupportedLawError(f"no sampler registered for law {self.name!r}")
        return self.sampler(rng, size)

    def mean_var(self):
        """Mean and variance, from the hint or by adaptive quadrature."""
        if self.moments_hint is not None:
            return self.moments_hint
        return numeric_moments(self)


def numeric_moments(law):
    """Mass, mean and variance by adaptive quadrature.

    Unbounded supports are mapped with ``u = tan(theta)`` so algebraic tails
    become integrable endpoint behaviour.
    """
    lo, hi = law.support
    if law.is_compact:
        def m(k):
            return integrate.quad(lambda u: u ** k * float(law.evaluate(u)), lo, hi, limit=200,
                                  epsabs=1e-13, epsrel=1e-12)[0]
    else:
        a = np.arctan(lo) if np.isfinite(lo) else -0.5 * np.pi
        b = np.arctan(hi) if np.isfinite(hi) else 0.5 * np.pi

        def m(k):
            def g(th):
                c = np.cos(th)
                if c == 0.0:
                    return 0.0
                u = np.tan(th)
                return u ** k * float(law.evaluate(u)) / (c * c)
            return integrate.quad(g, a, b, limit=400, epsabs=1e-13, epsrel=1e-12)[0]
    mass = m(0)
    mean = m(1) / mass
    var = m(2) / mass - mean * mean
    return mean, var


def numeric_mass(law):
    lo, hi = law.support
    if law.is_compact:
        return integrate.quad(lambda u: float(law.evaluate(u)), lo, hi, limit=200)[0]
    return integrate.quad(lambda th: float(law.evaluate(np.tan(th))) / np.cos(th) ** 2,
                          -0.5 * np.pi, 0.5 * np.pi, limit=400)[0]


def normal(mean=0.0, sd=1.0):
    if sd <= 0:
        raise ValueError("sd must be positive")

    def pdf(u):
        z = (u - mean) / sd
        return np.exp(-0.5 * z * z) / (sd * np.sqrt(2.0 * np.pi))

    def sampler(rng, size):
        # inverse-CDF draw
        return mean + sd * special.ndtri(rng.random(size))

    return ScalarDensity(pdf, (-np.inf, np.inf), GAUSSIAN, (mean, sd * sd), "normal",
                         float(mean), float(sd), "normal", sampler)


def uniform(lo, hi):
    if not hi > lo:
        raise ValueError("uniform law needs hi > lo")
    h = 1.0 / (hi - lo)

    def pdf(u):
        u = np.asarray(u, dtype=float)
        return np.where((u >= lo) & (u <= hi), h, 0.0)

    def sampler(rng, size):
        return lo + (hi - lo) * rng.random(size)

    return ScalarDensity(pdf, (float(lo), float(hi)), COMPACT, (0.5 * (lo + hi), (hi - lo) ** 2 / 12.0),
                         "uniform", 0.5 * (lo + hi), 0.5 * (hi - lo), "uniform", sampler)


def uniform_unit_variance():
    """Uniform on ``(-sqrt(3), sqrt(3))``: zero mean, unit variance, not Lipschitz."""
    r = np.sqrt(3.0)
    return uniform(-r, r)


def _cauchy_rejection(rng, size):
    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        batch = int(need / 0.55) + 64
        x = np.tan(np.pi * (rng.random(batch) - 0.5))
        # accept with prob f(x) / (M g(x)) = sqrt(2) (1 + x^2) / (M (1 + x^4))
        ratio = np.sqrt(2.0) * (1.0 + x * x) / (QUARTIC_CAUCHY_ENVELOPE * (1.0 + x ** 4))
        x = x[rng.random(batch) < ratio]
        take = min(need, x.size)
        out[filled:filled + take] = x[:take]
        filled += take
    return out


def quartic(scale=1.0):
    """Density ``sqrt(2) / (pi * s * (1 + (u/s)**4))``; mean 0, variance ``s**2``."""
    s = float(scale)

    def pdf(u):
        z = np.asarray(u, dtype=float) / s
        return QUARTIC_NORM / (s * (1.0 + z ** 4))

    def sampler(rng, size):
        return s * _cauchy_rejection(rng, size)

    return ScalarDensity(pdf, (-np.inf, np.inf), HEAVY, (0.0, s * s), "quartic", 0.0, s, "quartic", sampler)


def affine(law, a, b=0.0):
    """Law of ``a * X + b`` for ``X ~ law`` (``a > 0``), by change of variables."""
    if a <= 0:
        raise ValueError("scale factor must be positive")
    lo, hi = law.support
    hint = None
    if law.moments_hint is not None:
        m, v = law.moments_hint
        hint = (a * m + b, a * a * v)

    def pdf(u):
        return law.pdf((np.asarray(u, dtype=float) - b) / a) / a

    sampler = None
    if law.sampler is not None:
        def sampler(rng, size):
            return a * law.sampler(rng, size) + b

    return ScalarDensity(pdf, (a * lo + b, a * hi + b), law.tail_class, hint, law.family,
                         a * law.loc + b, a * law.scale, law.name, sampler)


XI_LAWS = {
    "normal": lambda: normal(0.0, 1.0),
    "quartic": lambda: quartic(1.0),
    "uniform": uniform_unit_variance,
}


def xi_law_by_name(name):
    try:
        return XI_LAWS[name]()
    except KeyError:
        raise UnsupportedLawError(f"unknown xi_law {name!r}; choose from {sorted(XI_LAWS)}") from None


def check_unit_moments(law, tol=1e-4):
    """Reject a KL variable law whose mean/variance deviate from (0, 1)."""
    mass = numeric_mass(law)
    mean, var = numeric_moments(law)
    if abs(mass - 1.0) > tol or abs(mean) > tol or abs(var - 1.0) > tol:
        raise InvalidLawError(
            f"law {law.name!r} must have mass 1, mean 0, variance 1 (got {mass:.6g}, {mean:.6g}, {var:.6g})")
    return mean, var
