"""Probabilistic inputs: diffusion laws, initial-condition processes, coefficient laws.

The initial condition is a process on [0, 1] described by its mean and its
Karhunen-Loeve data ``(nu_m, phi_m, law of xi_m)``. Its random Fourier
coefficients ``A_n = 2 int phi(y) sin(n pi y) dy`` are either independent
(sine-basis processes, ``A_n = 2 mu_hat(n) + sqrt(2 nu_n) xi_n``) or, for
general Gaussian processes, jointly Gaussian with moments obtained from the
covariance kernel.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import laws
from .errors import DegeneracyError, InvalidLawError, SingularCovarianceError, UnsupportedLawError
from .laws import ScalarDensity
from .quadrature import gauss_legendre, triangle_rule
from .series import SQRT2_HALF, sine_hat

COV_QUAD_ORDER = 128
PSD_TOL = 1e-12
KL_TAIL_TOL = 1e-12
KL_SYNTH_CAP = 4096
SUMMABILITY_PREFIX = 1000


@dataclass(frozen=True)
class DiffusionSpec:
    """Law of alpha^2 with support ``[lo, hi]``, ``lo > 0``.

    ``law`` is ``None`` for the degenerate case ``lo == hi`` (a point mass).
    """

    law: Optional[ScalarDensity]
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo > 0:
            raise InvalidLawError("diffusion support must satisfy lo > 0")
        if self.hi < self.lo:
            raise InvalidLawError("diffusion support must satisfy hi >= lo")
        if self.law is None:
            if self.hi != self.lo:
                raise InvalidLawError("a diffusion law is required unless lo == hi")
        elif tuple(self.law.support) != (self.lo, self.hi):
            raise InvalidLawError("law support must equal [lo, hi]")

    @property
    def degenerate(self):
        return self.law is None

    def nodes(self, order):
        """alpha^2 nodes and probability weights (Gauss-Legendre times the density)."""
        if self.degenerate:
            return np.array([self.lo]), np.array([1.0])
        a, w = gauss_legendre(order, self.lo, self.hi)
        return a, w * self.law.evaluate(a)

    def sample(self, rng, size):
        if self.degenerate:
            return np.full(size, self.lo)
        return self.law.sample(rng, size)

    def expect(self, g, order=256):
        a, w = self.nodes(order)
        return float(np.sum(w * g(a)))

    def describe(self):
        if self.degenerate:
            return {"name": "point", "lo": self.lo, "hi": self.hi}
        return {"name": self.law.name, "lo": self.lo, "hi": self.hi}


def uniform_diffusion(lo, hi):
    """Uniform law of ``alpha^2`` on ``[lo, hi]``; a point mass when ``lo == hi``."""
    if hi < lo:
        raise InvalidLawError(f"diffusion support needs lo <= hi, got [{lo}, {hi}]")
    if hi == lo:
        return DiffusionSpec(None, float(lo), float(hi))
    return DiffusionSpec(laws.uniform(lo, hi), float(lo), float(hi))


@dataclass(frozen=True)
class EigenPair:
    nu: float
    phi: Callable[[np.ndarray], np.ndarray]

    def norm_error(self, order=256):
        """``|int_0^1 phi^2 - 1|``."""
        y, w = gauss_legendre(order)
        return abs(float(np.sum(w * self.phi(y) ** 2)) - 1.0)


def _sine_eigenfunction(j):
    def phi(y):
        return np.sqrt(2.0) * np.sin(j * np.pi * np.asarray(y, dtype=float))
    return phi


def _zero(y):
    return np.zeros_like(np.asarray(y, dtype=float))


@dataclass(frozen=True)
class ProcessSpec:
    """Initial-condition process ``mu(x) + sum_m sqrt(nu_m) phi_m(x) xi_m``.

    Eigenpairs are generated on demand from ``nu_fn``/``phi_fn`` (1-based
    index). ``tail_bound(M)`` bounds ``sum_{m > M} nu_m``. ``kernel`` is the
    analytic covariance when one is registered.
    """

    name: str
    mean_fn: Callable
    nu_fn: Callable[[int], float]
    phi_fn: Callable[[int], Callable]
    xi_law_fn: Callable[[int], ScalarDensity]
    independence_flag: bool
    gaussian_flag: bool
    sine_basis: bool = False
    zero_mean: bool = True
    tail_bound: Optional[Callable[[int], float]] = None
    kernel: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def eigenpair(self, j):
        if j < 1:
            raise ValueError("eigenpairs are indexed from 1")
        return EigenPair(float(self.nu_fn(j)), self.phi_fn(j))

    def eigenpairs(self, M):
        return [self.eigenpair(j) for j in range(1, M + 1)]

    def nus(self, M):
        return np.array([float(self.nu_fn(j)) for j in range(1, M + 1)])

    def xi_law(self, j):
        return self.xi_law_fn(j)

    def mean_sine_coeffs(self, N):
        if self.zero_mean:
            return np.zeros(N)
        return np.array([sine_hat(self.mean_fn, n) for n in range(1, N + 1)])

    def eigen_sine_coeffs(self, M, N):
        """``out[m-1, n-1] = int_0^1 phi_m(y) sin(n pi y) dy``."""
        out = np.zeros((M, N))
        if self.sine_basis:
            for k in range(min(M, N)):
                out[k, k] = SQRT2_HALF
            return out
        for m in range(1, M + 1):
            phi = self.phi_fn(m)
            for n in range(1, N + 1):
                out[m - 1, n - 1] = sine_hat(phi, n, max(64, 4 * max(m, n)))
        return out

    def covariance(self, y, z):
        """Covariance kernel, analytic or synthesized from KL data."""
        if self.kernel is not None:
            return self.kernel(y, z)
        M = kl_truncation(self)
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        out = np.zeros(np.broadcast_shapes(y.shape, z.shape))
        for j in range(1, M + 1):
            phi = self.phi_fn(j)
            out = out + self.nu_fn(j) * phi(y) * phi(z)
        return out

    def describe(self):
        return {"name": self.name, **self.params}


def kl_truncation(process, tol=KL_TAIL_TOL, cap=KL_SYNTH_CAP):
    """Smallest ``M`` with ``sum_{m > M} nu_m < tol`` (capped)."""
    if process.tail_bound is None:
        return cap
    M = 1
    while process.tail_bound(M) >= tol and M < cap:
        M *= 2
    lo = max(1, M // 2)
    while lo < M:
        mid = (lo + M) // 2
        if process.tail_bound(mid) < tol:
            M = mid
        else:
            lo = mid + 1
    return M


def _check_summable(nu_fn, tail_bound, n_terms=None):
    if n_terms is not None:
        vals = np.array([nu_fn(j) for j in range(1, n_terms + 1)])
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise InvalidLawError("eigenvalues must be finite and nonnegative")
        return
    vals = np.array([nu_fn(j) for j in range(1, SUMMABILITY_PREFIX + 1)])
    if not np.all(np.isfinite(vals)) or np.any(vals < 0):
        raise InvalidLawError("eigenvalues must be finite and nonnegative")
    if tail_bound is not None:
        tb = tail_bound(SUMMABILITY_PREFIX)
        if not np.isfinite(tb):
            raise InvalidLawError("tail bound must be finite")
        return
    # no certificate: require eventual power-law decay faster than 1/j^1.05
    j1, j2 = 10 ** 4, 10 ** 5
    v1, v2 = nu_fn(j1), nu_fn(j2)
    if v2 <= 0:
        return
    p = -np.log10(v2 / v1) if v1 > 0 else 0.0
    if not p > 1.05:
        raise InvalidLawError(f"eigenvalue sequence is not summable (decay exponent ~{p:.3g} <= 1)")


def _bb_kernel(y, z):
    return np.minimum(y, z) - y * z


def _bm_kernel(y, z):
    return np.minimum(y, z)


def make_brownian_bridge_process():
    std = laws.normal(0.0, 1.0)
    return ProcessSpec(
        name="brownian_bridge",
        mean_fn=_zero,
        nu_fn=lambda j: 1.0 / (np.pi ** 2 * j * j),
        phi_fn=_sine_eigenfunction,
        xi_law_fn=lambda j: std,
        independence_flag=True,
        gaussian_flag=True,
        sine_basis=True,
        tail_bound=lambda M: 1.0 / (np.pi ** 2 * M),
        kernel=_bb_kernel,
    )


def make_brownian_motion_process():
    std = laws.normal(0.0, 1.0)

    def phi_fn(j):
        def phi(y):
            return np.sqrt(2.0) * np.sin((j - 0.5) * np.pi * np.asarray(y, dtype=float))
        return phi

    return ProcessSpec(
        name="brownian_motion",
        mean_fn=_zero,
        nu_fn=lambda j: 1.0 / ((j - 0.5) ** 2 * np.pi ** 2),
        phi_fn=phi_fn,
        xi_law_fn=lambda j: std,
        independence_flag=True,
        gaussian_flag=True,
        sine_basis=False,
        tail_bound=lambda M: 1.0 / (np.pi ** 2 * M),
        kernel=_bm_kernel,
    )


NU_RULES = {
    # name: (nu_j, bound on sum_{j > M} nu_j)
    "bridge": (lambda j: 1.0 / (np.pi ** 2 * j * j), lambda M: 1.0 / (np.pi ** 2 * M)),
    "inverse_cube_log": (lambda j: 1.0 / (j ** 3 * (1.0 + np.log(j))), lambda M: 0.5 / (M * M)),
}


def make_general_sine_process(nu, xi_law, tail_bound=None, name="general_sine", params=None):
    """Process ``sum_j sqrt(nu_j) sqrt(2) sin(j pi x) xi_j`` with iid ``xi_j ~ xi_law``.

    ``nu`` is a callable ``j -> nu_j`` (1-based), a registered rule name, or a
    finite sequence (the expansion stops after ``len(nu)`` terms).
    """
    params = dict(params or {})
    n_terms = None
    if isinstance(nu, str):
        try:
            nu_fn, tail_bound = NU_RULES[nu]
        except KeyError:
            raise InvalidLawError(f"unknown nu rule {nu!r}; choose from {sorted(NU_RULES)}") from None
        params.setdefault("nu", nu)
    elif callable(nu):
        nu_fn = nu
    else:
        seq = np.asarray(nu, dtype=float)
        if seq.ndim != 1 or seq.size == 0:
            raise InvalidLawError("nu sequence must be a non-empty vector")
        n_terms = seq.size

        def nu_fn(j):
            return float(seq[j - 1]) if j <= n_terms else 0.0

        def tail_bound(M):
            return float(seq[M:].sum())
        params.setdefault("nu", seq.tolist())
    _check_summable(nu_fn, tail_bound, n_terms)
    if any(nu_fn(j) <= 0 for j in range(1, (n_terms or 1) + 1)):
        raise InvalidLawError("eigenvalues must be positive")
    laws.check_unit_moments(xi_law)
    params.setdefault("xi_law", xi_law.name)
    return ProcessSpec(
        name=name,
        mean_fn=_zero,
        nu_fn=nu_fn,
        phi_fn=_sine_eigenfunction,
        xi_law_fn=lambda j: xi_law,
        independence_flag=True,
        gaussian_flag=xi_law.family == "normal",
        sine_basis=True,
        tail_bound=tail_bound,
        params=params,
    )


def fourier_coeff_mean(process, n):
    """``E[A_n] = 2 int_0^1 mu(y) sin(n pi y) dy``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if process.zero_mean:
        return 0.0
    return 2.0 * sine_hat(process.mean_fn, n)


def fourier_coeff_cov(process, n, m, order=COV_QUAD_ORDER):
    """``Cov[A_n, A_m] = 4 int int C(y, z) sin(n pi y) sin(m pi z) dy dz``.

    With an analytic kernel the square is split along the diagonal and each
    triangle gets a tensor Gauss-Legendre rule, so kernels like ``min(y, z)``
    are smooth on each panel. Otherwise the KL closed form
    ``4 sum_k nu_k phi_k_hat(n) phi_k_hat(m)`` is used.
    """
    if n < 1 or m < 1:
        raise ValueError("indices must be >= 1")
    n, m = min(n, m), max(n, m)
    if process.kernel is not None:
        y, z, w = triangle_rule(order)
        k_lo = process.kernel(y, z)
        k_hi = process.kernel(z, y)
        sy_n, sz_n = np.sin(n * np.pi * y), np.sin(n * np.pi * z)
        sy_m, sz_m = np.sin(m * np.pi * y), np.sin(m * np.pi * z)
        total = np.sum(w * (k_lo * sy_n * sz_m + k_hi * sz_n * sy_m))
        return float(4.0 * total)
    if process.sine_basis:
        return 2.0 * process.nu_fn(n) if n == m else 0.0
    M = kl_truncation(process)
    total = 0.0
    for k in range(1, M + 1):
        phi = process.phi_fn(k)
        order_k = max(64, 4 * max(k, m))
        total += process.nu_fn(k) * sine_hat(phi, n, order_k) * sine_hat(phi, m, order_k)
    return 4.0 * total


def _clip_psd(sigma):
    sigma = 0.5 * (sigma + sigma.T)
    lam, vec = np.linalg.eigh(sigma)
    if lam.min() < -PSD_TOL:
        raise DegeneracyError(f"covariance has eigenvalue {lam.min():.3g} < -{PSD_TOL}")
    if lam.min() < 0:
        sigma = (vec * np.maximum(lam, 0.0)) @ vec.T
        sigma = 0.5 * (sigma + sigma.T)
    return sigma


@dataclass(frozen=True)
class CoeffModel:
    """Joint law of ``(A_1, ..., A_N)``."""

    kind: str
    N: int
    marginals: Optional[Sequence[ScalarDensity]] = None
    mu: Optional[np.ndarray] = None
    sigma: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.kind == "independent":
            if self.marginals is None or len(self.marginals) != self.N:
                raise ValueError("independent model needs N marginals")
        elif self.kind == "joint_gaussian":
            mu = np.asarray(self.mu, dtype=float).reshape(self.N)
            sigma = np.asarray(self.sigma, dtype=float).reshape(self.N, self.N)
            if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-14 * max(1.0, np.abs(sigma).max())):
                raise ValueError("sigma must be symmetric")
            sigma = _clip_psd(sigma)
            object.__setattr__(self, "mu", mu)
            object.__setattr__(self, "sigma", sigma)
        else:
            raise ValueError(f"unknown coefficient model kind {self.kind!r}")

    @classmethod
    def independent(cls, marginals):
        return cls("independent", len(marginals), marginals=tuple(marginals))

    @classmethod
    def joint_gaussian(cls, mu, sigma):
        mu = np.asarray(mu, dtype=float)
        return cls("joint_gaussian", mu.size, mu=mu, sigma=sigma)

    def covariance(self):
        if self.kind == "joint_gaussian":
            return self.sigma
        return np.diag([m.mean_var()[1] for m in self.marginals])

    def means(self):
        if self.kind == "joint_gaussian":
            return self.mu
        return np.array([m.mean_var()[0] for m in self.marginals])

    def as_joint_gaussian(self):
        """Same law in joint-Gaussian form (only for normal marginals)."""
        if self.kind == "joint_gaussian":
            return self
        if any(m.family != "normal" for m in self.marginals):
            raise UnsupportedLawError("only normal marginals have a joint-Gaussian form")
        return CoeffModel.joint_gaussian(self.means(), self.covariance())


def build_coeff_model(process, N):
    """Law of the first ``N`` random Fourier coefficients."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if process.sine_basis and process.independence_flag:
        nus = process.nus(N)
        if np.any(nus <= 0.0):
            # a vanishing eigenvalue makes A_n a point mass
            if process.gaussian_flag:
                mu = np.array([fourier_coeff_mean(process, n) for n in range(1, N + 1)])
                return CoeffModel.joint_gaussian(mu, np.diag(2.0 * nus))
            raise DegeneracyError(f"A_{int(np.argmin(nus > 0)) + 1} is a point mass (zero eigenvalue)")
        marg = []
        for n in range(1, N + 1):
            scale = np.sqrt(2.0) * np.sqrt(nus[n - 1])
            marg.append(laws.affine(process.xi_law(n), scale, fourier_coeff_mean(process, n)))
        return CoeffModel.independent(marg)
    if process.gaussian_flag:
        mu = np.array([fourier_coeff_mean(process, n) for n in range(1, N + 1)])
        sigma = np.zeros((N, N))
        for i in range(1, N + 1):
            for j in range(i, N + 1):
                sigma[i - 1, j - 1] = sigma[j - 1, i - 1] = fourier_coeff_cov(process, i, j)
        return CoeffModel.joint_gaussian(mu, sigma)
    raise UnsupportedLawError(
        f"process {process.name!r} has neither a sine-basis KL expansion nor Gaussian law")


def gaussian_conditional_params(mu, sigma, head_dim, tail_value, cond_limit=1e12):
    """Law of the head block given the tail block equals ``tail_value``.

    Returns ``(mu_1 + S12 S22^-1 (a - mu_2), S11 - S12 S22^-1 S21)``.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    a = np.atleast_1d(np.asarray(tail_value, dtype=float))
    h = int(head_dim)
    s11, s12 = sigma[:h, :h], sigma[:h, h:]
    s21, s22 = sigma[h:, :h], sigma[h:, h:]
    cond = np.linalg.cond(s22) if s22.size else 1.0
    if not np.isfinite(cond) or cond >= cond_limit:
        raise DegeneracyError(f"conditioning block is singular (condition number {cond:.3g})",
                              condition_number=float(cond))
    cond_mean = mu[:h] + s12 @ np.linalg.solve(s22, a - mu[h:])
    cond_cov = s11 - s12 @ np.linalg.solve(s22, s21)
    cond_cov = 0.5 * (cond_cov + cond_cov.T)
    scale = max(np.abs(np.diag(s11)).max(), np.finfo(float).tiny)
    if np.linalg.eigvalsh(cond_cov).min() <= PSD_TOL * scale:
        raise DegeneracyError("degenerate conditional variance (head block is a deterministic "
                              "function of the tail block)", condition_number=float(cond))
    return cond_mean, cond_cov


def sigma_inv_11(sigma):
    """``(Sigma^-1)_11`` through the Schur complement ``1 / (S11 - s^T S22^-1 s)``."""
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    lam = np.linalg.eigvalsh(0.5 * (sigma + sigma.T))
    if lam.min() <= PSD_TOL * max(lam.max(), 0.0) or lam.max() <= 0:
        raise SingularCovarianceError(
            f"singular covariance: det(Sigma_N)=0 to working precision (eigenvalues {lam.min():.3g}.."
            f"{lam.max():.3g})", condition_number=float(np.inf if lam.min() <= 0 else lam.max() / lam.min()))
    if sigma.shape[0] == 1:
        return 1.0 / sigma[0, 0]
    s = sigma[1:, 0]
    schur = sigma[0, 0] - s @ np.linalg.solve(sigma[1:, 1:], s)
    return float(1.0 / schur)
