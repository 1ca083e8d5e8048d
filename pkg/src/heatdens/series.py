"""Separated-variables series for the Dirichlet heat problem on (0, 1).

Terms are always summed in ascending mode order without compensation. The
KL-route evaluation builds its Fourier coefficients first and then goes
through :func:`truncated_solution`, so both routes add identical
floating-point terms in the same order.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .quadrature import gauss_legendre

PI2 = np.pi * np.pi
SERIES_CAP = 128
SQRT2_HALF = np.sqrt(2.0) / 2.0


def sinpi(z):
    """``sin(pi * z)`` that is exactly zero at integer ``z``."""
    z = np.asarray(z, dtype=float)
    out = np.sin(np.pi * np.fmod(z, 2.0))
    return np.where(z == np.round(z), 0.0, out)


@dataclass(frozen=True)
class EvalPoint:
    x: float
    t: float

    def __post_init__(self):
        if not (0.0 < self.x < 1.0):
            raise DomainError(f"x must lie in the open interval (0, 1), got {self.x}")
        if not self.t > 0.0:
            raise DomainError(f"t must be positive, got {self.t}")

    def mode_sines(self, N):
        """``sin(n pi x)`` for ``n = 1..N``."""
        return sinpi(np.arange(1, N + 1) * self.x)

    def decay(self, N, alpha2):
        """``exp(-n^2 pi^2 alpha2 t)`` with shape ``alpha2.shape + (N,)``."""
        n2 = np.arange(1, N + 1, dtype=float) ** 2
        a = np.asarray(alpha2, dtype=float)[..., None]
        return np.exp(-n2 * PI2 * a * self.t)


@dataclass(frozen=True)
class SineCoeffs:
    """``values[n-1] = int_0^1 f(y) sin(n pi y) dy`` for ``n = 1..N``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    @classmethod
    def of(cls, f, N, quad_order=None):
        return cls(np.array([sine_hat(f, n, quad_order) for n in range(1, N + 1)]))

    def check_l1_bound(self, f, quad_order=256):
        """Each ``|f_hat(n)|`` must not exceed the L1(0, 1) norm of ``f``."""
        y, w = gauss_legendre(quad_order)
        l1 = float(np.sum(w * np.abs(f(y))))
        return bool(np.all(np.abs(self.values) <= l1 * (1 + 1e-12) + 1e-15))


def sine_hat(f, n, quad_order=None):
    """Gauss-Legendre estimate of ``int_0^1 f(y) sin(n pi y) dy``."""
    need = max(32, 4 * n)
    if quad_order is None:
        quad_order = need
    elif quad_order < need:
        raise ValueError(f"quad_order must be >= max(32, 4n) = {need}")
    y, w = gauss_legendre(quad_order)
    return float(np.sum(w * f(y) * np.sin(n * np.pi * y)))


def _coeff_array(coeffs, N):
    vals = coeffs.values if isinstance(coeffs, SineCoeffs) else np.asarray(coeffs, dtype=float)
    if vals.shape[-1] < N:
        raise ValueError(f"need at least {N} coefficients, got {vals.shape[-1]}")
    return vals


def t_n_operator(coeffs, point, alpha2, N):
    """``sum_{n<=N} f_hat(n) exp(-n^2 pi^2 alpha2 t) sin(n pi x)``; vectorized over ``alpha2``."""
    vals = _coeff_array(coeffs, N)
    alpha2 = np.asarray(alpha2, dtype=float)
    if np.any(alpha2 <= 0):
        raise DomainError("alpha2 must be positive")
    s = point.mode_sines(N)
    total = np.zeros_like(alpha2)
    for n in range(1, N + 1):
        total = total + vals[n - 1] * np.exp(-n * n * PI2 * alpha2 * point.t) * s[n - 1]
    return float(total) if total.ndim == 0 else total


def truncated_solution(coeffs_a, alpha2, point):
    """``u_N = sum_n a_n exp(-n^2 pi^2 alpha2 t) sin(n pi x)``.

    ``coeffs_a`` may be ``(N,)`` or ``(samples, N)`` with ``alpha2`` scalar or
    ``(samples,)``.
    """
    a = np.asarray(coeffs_a, dtype=float)
    alpha2 = np.asarray(alpha2, dtype=float)
    if np.any(alpha2 <= 0):
        raise DomainError("alpha2 must be positive")
    N = a.shape[-1]
    s = point.mode_sines(N)
    total = np.zeros(np.broadcast_shapes(a.shape[:-1], alpha2.shape))
    for n in range(1, N + 1):
        total = total + a[..., n - 1] * np.exp(-n * n * PI2 * alpha2 * point.t) * s[n - 1]
    return float(total) if total.ndim == 0 else total


def kl_fourier_coeffs(process, xi, N):
    """Fourier coefficients of the KL-truncated initial condition.

    ``a_n = 2 mu_hat(n) + sum_m (2 phi_m_hat(n)) sqrt(nu_m) xi_m``; ``xi`` has
    shape ``(..., M-1)``.
    """
    xi = np.asarray(xi, dtype=float)
    M1 = xi.shape[-1]
    mu_hat = process.mean_sine_coeffs(N)
    phi_hat = process.eigen_sine_coeffs(M1, N)  # (M-1, N)
    sq = np.sqrt(process.nus(M1))
    a = np.zeros(xi.shape[:-1] + (N,))
    for n in range(N):
        acc = 2.0 * mu_hat[n] + np.zeros(xi.shape[:-1])
        for m in range(M1):
            acc = acc + (2.0 * phi_hat[m, n]) * sq[m] * xi[..., m]
        a[..., n] = acc
    return a


def truncated_solution_kl(process, xi, alpha2, point, N):
    """``u_{N,M} = 2 T_N(mu) + 2 sum_{m<M} T_N(phi_m) sqrt(nu_m) xi_m`` with ``M - 1 = len(xi)``."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] < 1:
        raise ValueError("need at least one KL variable")
    return truncated_solution(kl_fourier_coeffs(process, xi, N), alpha2, point)


def deterministic_solution(phi, alpha2, point, N=SERIES_CAP):
    """Partial sum of the deterministic series with ``A_n = 2 * sine_hat(phi, n)``.

    Stops once the bound ``2 ||phi||_1 exp(-n^2 pi^2 alpha2 t)`` on the next
    term drops below 1e-14, or at ``min(N, 128)`` terms.
    """
    if alpha2 <= 0:
        raise DomainError("alpha2 must be positive")
    cap = min(int(N), SERIES_CAP)
    y, w = gauss_legendre(max(64, 4 * cap))
    l1 = float(np.sum(w * np.abs(phi(y))))
    total = 0.0
    for n in range(1, cap + 1):
        if 2.0 * l1 * np.exp(-n * n * PI2 * alpha2 * point.t) < 1e-14:
            break
        a_n = 2.0 * sine_hat(phi, n)
        total = total + a_n * np.exp(-n * n * PI2 * alpha2 * point.t) * float(sinpi(n * point.x))
    return total
