"""Node rules shared by the covariance integrals and the density engine."""

from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.legendre import leggauss

SQRT_2PI = np.sqrt(2.0 * np.pi)


@lru_cache(maxsize=64)
def _leggauss(order):
    x, w = leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


@lru_cache(maxsize=64)
def _hermegauss(order):
    x, w = hermegauss(order)
    w = w / SQRT_2PI
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(order, lo=0.0, hi=1.0):
    """Gauss-Legendre nodes and weights on ``[lo, hi]``."""
    if order < 1:
        raise ValueError("order must be >= 1")
    x, w = _leggauss(int(order))
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def gauss_hermite_normal(order):
    """Nodes and probability weights for a standard normal variable.

    The weights sum to one, so ``sum(w * g(z))`` approximates ``E[g(Z)]``.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    return _hermegauss(int(order))


def tangent_legendre(order, center=0.0, scale=1.0):
    """Nodes ``a = center + scale * tan(theta)`` with the Jacobian folded into the weights.

    Suited to laws with algebraic tails: the mapped integrand
    ``f(a) * scale * sec(theta)**2`` vanishes smoothly at ``theta = +-pi/2``
    when ``f`` decays faster than ``a**-2``.
    """
    th, w = gauss_legendre(order, -0.5 * np.pi, 0.5 * np.pi)
    c = np.cos(th)
    return center + scale * np.tan(th), w * scale / (c * c)


def triangle_rule(order):
    """Tensor Gauss-Legendre rule on the triangle ``0 < y < z < 1``.

    Uses ``y = z * s`` with ``(z, s)`` on the unit square; returns flat
    ``(y, z, w)`` arrays.
    """
    x, w = gauss_legendre(order)
    z = np.repeat(x, order)
    s = np.tile(x, order)
    wz = np.repeat(w, order)
    ws = np.tile(w, order)
    return z * s, z, wz * ws * z
