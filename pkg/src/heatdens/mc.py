"""Monte Carlo ground truth for the density engine.

Samples the truncated solution directly (no transformation formula), then
compares distributions through the Kolmogorov-Smirnov distance or a Gaussian
kernel density estimate.
"""

from dataclasses import dataclass, field

import numpy as np

from .density import DensityGrid
from .errors import DegenerateDistributionError, UnsupportedLawError
from .kernels import mixture_eval
from .models import build_coeff_model
from .series import EvalPoint, truncated_solution, truncated_solution_kl

STREAM_SIZE = 1 << 16
DEGENERATE_VARIANCE = 1e-8


@dataclass(frozen=True)
class SampleSet:
    values: np.ndarray
    seed: int
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return self.values.size

    def mean(self):
        return float(np.sum(self.values) / self.n)

    def variance(self):
        m = self.mean()
        return float(np.sum((self.values - m) ** 2) / (self.n - 1))

    def to_csv(self, path):
        np.savetxt(path, self.values, fmt="%.17g", header="u", comments="")


def _coefficient_sampler(model, N):
    coeffs = build_coeff_model(model.process, N)
    if coeffs.kind == "independent":
        marg = coeffs.marginals

        def draw(rng, size):
            return np.stack([m.sample(rng, size) for m in marg], axis=1)
        return draw
    lam, vec = np.linalg.eigh(coeffs.sigma)
    root = vec * np.sqrt(np.maximum(lam, 0.0))
    mu = coeffs.mu

    def draw(rng, size):
        return mu + rng.standard_normal((size, N)) @ root.T
    return draw


def sample_solution(model, point, N, n_samples, seed=0, route="fourier"):
    """Draw ``n_samples`` values of ``u_N(x, t)`` (``route="fourier"``) or ``u_{N,N}`` (``"kl"``).

    Sampling runs in fixed-size streams seeded by ``SeedSequence([seed, k])``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not isinstance(point, EvalPoint):
        point = EvalPoint(*point)
    if route == "fourier":
        draw = _coefficient_sampler(model, N)
    elif route == "kl":
        if N < 2:
            raise ValueError("the KL route needs N >= 2")
        xi_laws = [model.process.xi_law(m) for m in range(1, N)]
        if any(law.sampler is None for law in xi_laws):
            raise UnsupportedLawError("a KL variable law has no sampler")
    else:
        raise ValueError("route must be 'fourier' or 'kl'")
    out = np.empty(n_samples)
    for k in range(-(-n_samples // STREAM_SIZE)):
        lo = k * STREAM_SIZE
        size = min(STREAM_SIZE, n_samples - lo)
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), k]))
        alpha2 = model.diffusion.sample(rng, size)
        if route == "fourier":
            out[lo:lo + size] = truncated_solution(draw(rng, size), alpha2, point)
        else:
            xi = np.stack([law.sample(rng, size) for law in xi_laws], axis=1)
            out[lo:lo + size] = truncated_solution_kl(model.process, xi, alpha2, point, N)
    prov = {"model_digest": model.digest(), "x": point.x, "t": point.t, "N": int(N), "route": route}
    return SampleSet(out, int(seed), prov)


def grid_cdf(grid):
    """Trapezoid-cumulative CDF of a grid, normalized to end at 1."""
    u, f = grid.u, grid.f
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(u))])
    return cum / cum[-1]


def ecdf_distance(samples, grid):
    """Kolmogorov-Smirnov distance between the sample ECDF and the grid CDF."""
    x = np.sort(samples.values if isinstance(samples, SampleSet) else np.asarray(samples, dtype=float))
    n = x.size
    F = np.interp(x, grid.u, grid_cdf(grid), left=0.0, right=1.0)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def sample_from_grid(grid, n, seed=0):
    """Inverse-CDF draws from a tabulated density (linear CDF interpolation)."""
    rng = np.random.default_rng(seed)
    cdf = grid_cdf(grid)
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    return np.interp(rng.random(n), cdf[keep], grid.u[keep])


def silverman_bandwidth(values):
    v = np.asarray(values, dtype=float)
    sd = np.std(v, ddof=1)
    iqr = np.subtract(*np.percentile(v, [75, 25]))
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    return 0.9 * spread * v.size ** (-0.2)


def kde_density(samples, bandwidth="auto", grid_abscissae=None, threads=1):
    """Gaussian kernel density estimate on ``grid_abscissae``."""
    values = samples.values if isinstance(samples, SampleSet) else np.asarray(samples, dtype=float)
    if values.size < 1000:
        raise ValueError("kde_density needs at least 1000 samples")
    var = float(np.var(values))
    if var < DEGENERATE_VARIANCE:
        raise DegenerateDistributionError(
            f"sample variance {var:.3g} is below {DEGENERATE_VARIANCE:g}: the law is numerically a point mass")
    h = silverman_bandwidth(values) if bandwidth == "auto" else float(bandwidth)
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    if grid_abscissae is None:
        m, s = values.mean(), np.sqrt(var)
        grid_abscissae = np.linspace(m - 6 * s, m + 6 * s, 401)
    u = np.asarray(grid_abscissae, dtype=float)
    n = values.size
    f = mixture_eval(u, np.full(n, 1.0 / h), values, np.full(n, 1.0 / (n * h)), 0, threads)
    return DensityGrid(u, f, {"bandwidth": h, "n": n, "method": "kde"})
