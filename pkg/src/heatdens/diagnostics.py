"""Convergence metrics, moments and the theorem-hypothesis checker."""

import warnings
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from .density import DensityGrid, QuadConfig, auto_grid, build_plan, density_grid
from .errors import DegeneracyError
from .models import build_coeff_model, sigma_inv_11
from .series import PI2, EvalPoint, t_n_operator

DIVERGING_THRESHOLD = 0.1
CONVERGED_THRESHOLD = 1e-3
LIPSCHITZ_MESH = 1e-3
LIPSCHITZ_GROWTH = 10.0
UNDERFLOW = 1e-300


class ResampledGridWarning(UserWarning):
    """Grids with different abscissae were compared after interpolation."""


def l1_distance(g1, g2):
    """Trapezoid ``int |f1 - f2| du``.

    Grids on different abscissae are compared on ``g1.u`` after monotone
    cubic (PCHIP) interpolation of ``g2``, with a :class:`ResampledGridWarning`.
    """
    if g1.u.shape == g2.u.shape and np.array_equal(g1.u, g2.u):
        f2 = g2.f
    else:
        warnings.warn("l1_distance: abscissae differ, resampling the second grid", ResampledGridWarning,
                      stacklevel=2)
        f2 = PchipInterpolator(g2.u, g2.f, extrapolate=False)(g1.u)
        f2 = np.nan_to_num(f2, nan=0.0)
    return float(np.trapezoid(np.abs(g1.f - f2), g1.u))


def density_moments(g):
    """Trapezoid ``(mass, mean, variance)``; mean and variance are normalized by the mass."""
    mass = float(np.trapezoid(g.f, g.u))
    mean = float(np.trapezoid(g.u * g.f, g.u) / mass)
    var = float(np.trapezoid((g.u - mean) ** 2 * g.f, g.u) / mass)
    return mass, mean, var


def expected_exp(diffusion, c):
    """``E[exp(-c alpha^2)]``; closed form for uniform and point-mass laws."""
    lo, hi = diffusion.lo, diffusion.hi
    if diffusion.degenerate or c == 0.0:
        return float(np.exp(-c * lo))
    if diffusion.law is not None and diffusion.law.family == "uniform":
        return float(-np.expm1(-c * (hi - lo)) * np.exp(-c * lo) / (c * (hi - lo)))
    return diffusion.expect(lambda a: np.exp(-c * a))


def exact_bb_moments(point, N, diffusion):
    """Mean and variance of the Brownian-bridge truncation ``u_N(x, t)``.

    ``Var = sum_{n <= N} 2/(n^2 pi^2) sin^2(n pi x) E[exp(-2 n^2 pi^2 alpha^2 t)]``.
    """
    s = point.mode_sines(N)
    var = 0.0
    for n in range(1, N + 1):
        if s[n - 1] == 0.0:
            continue
        var += 2.0 / (n * n * PI2) * s[n - 1] ** 2 * expected_exp(diffusion, 2.0 * n * n * PI2 * point.t)
    return 0.0, float(var)


# ----------------------------------------------------------------------------
# hypothesis checker


def _effective_support(law):
    lo, hi = law.support
    if law.is_compact:
        pad = 0.1 * (hi - lo)
        return lo - pad, hi + pad, (hi - lo)
    sd = np.sqrt(law.mean_var()[1])
    m = law.loc
    return m - 20 * sd, m + 20 * sd, sd


def lipschitz_estimate(law, mesh=LIPSCHITZ_MESH):
    """Numeric ``sup |f'|`` by central differences; ``None`` if it does not settle.

    The derivative is estimated on a mesh of spacing ``mesh * width`` over the
    effective support, then twice more with spacing divided by 10 around the
    current maximizer. Growth by more than 10x across the two refinements
    signals a jump (no Lipschitz constant).
    """
    a, b, width = _effective_support(law)
    h = mesh * width
    x = np.arange(a, b + h, h)
    d = np.abs(law.evaluate(x + h) - law.evaluate(x - h)) / (2 * h)
    first = float(d.max())
    best = first
    centre = x[int(np.argmax(d))]
    for _ in range(2):
        span = 10 * h
        h /= 10.0
        x = np.arange(centre - span, centre + span + h, h)
        d = np.abs(law.evaluate(x + h) - law.evaluate(x - h)) / (2 * h)
        best = float(d.max())
        centre = x[int(np.argmax(d))]
    if best > LIPSCHITZ_GROWTH * first:
        return None
    return max(first, best)


def tail_sum(diffusion, t, m=2, shift=2):
    """``sum_{n >= m} E[exp(-(n^2 - shift) pi^2 alpha^2 t)]`` and a bound on the neglected tail.

    Terms are summed until one drops below 1e-300; the remainder is bounded
    by a geometric series in ``exp(-(2n+1) pi^2 lo t)``.
    """
    total = 0.0
    n = m
    while True:
        term = expected_exp(diffusion, (n * n - shift) * PI2 * t)
        total += term
        if term < UNDERFLOW or n > 10 ** 6:
            break
        n += 1
    ratio = np.exp(-(2 * n + 1) * PI2 * diffusion.lo * t)
    return total, float(term * ratio / (1.0 - ratio)) if ratio < 1 else float("inf")


def l2_exp_sum(diffusion, t):
    """``sum_{n >= 1} ||exp(-n^2 pi^2 alpha^2 t)||_{L^2}``."""
    total = 0.0
    n = 1
    while True:
        term = np.sqrt(expected_exp(diffusion, 2.0 * n * n * PI2 * t))
        total += term
        if term < UNDERFLOW ** 0.5 or n > 10 ** 6:
            break
        n += 1
    return float(total)


def tn_phi1_lower_bound(process, diffusion, point, N, q=QuadConfig()):
    """``min |T_N(phi_1)(x, t, alpha^2)|`` over the alpha^2 nodes and the support endpoints."""
    a, _ = diffusion.nodes(q.legendre_order)
    a = np.concatenate([a, [diffusion.lo, diffusion.hi]])
    phi_hat = process.eigen_sine_coeffs(1, N)[0]
    return float(np.min(np.abs(t_n_operator(phi_hat, point, a, N))))


@dataclass
class Verdict:
    holds: bool
    reasons: List[str] = field(default_factory=list)


@dataclass
class HypothesisReport:
    lipschitz_estimate: Optional[float]
    lipschitz_xi1: Optional[float]
    tail_sum_estimate: float
    tail_sum_remainder: float
    l2_exp_sum: float
    tn_phi1_lower_bound: float
    sigma_inv_11: Optional[float]
    sigma_inv_11_checked_N: Tuple[int, int]
    sigma_singular: bool
    verdicts: dict

    @property
    def lipschitz_unbounded(self):
        return self.lipschitz_estimate is None

    def to_dict(self):
        d = asdict(self)
        d["sigma_inv_11_checked_N"] = list(self.sigma_inv_11_checked_N)
        return d


def _coefficients_independent(coeffs):
    if coeffs.kind == "independent":
        return True
    off = coeffs.sigma - np.diag(np.diag(coeffs.sigma))
    return bool(np.all(np.abs(off) <= 1e-12 * np.abs(coeffs.sigma).max()))


def hypothesis_report(model, point, N, q=QuadConfig()):
    """Check the hypotheses of the three density theorems numerically. Never raises."""
    if not isinstance(point, EvalPoint):
        point = EvalPoint(*point)
    process, diffusion = model.process, model.diffusion
    coeffs = build_coeff_model(process, N)
    if coeffs.kind == "independent":
        lip_a1 = lipschitz_estimate(coeffs.marginals[0])
    else:
        from .laws import normal
        lip_a1 = lipschitz_estimate(normal(0.0, float(np.sqrt(coeffs.sigma[0, 0]))))
    lip_xi = lipschitz_estimate(process.xi_law(1))
    tsum, trem = tail_sum(diffusion, point.t)
    l2sum = l2_exp_sum(diffusion, point.t)
    cbound = tn_phi1_lower_bound(process, diffusion, point, max(N, 1), q)

    s_inv, singular, checked = None, False, (1, N)
    if process.gaussian_flag:
        vals = []
        for k in range(1, N + 1):
            ck = build_coeff_model(process, k)
            sig = ck.covariance() if ck.kind == "independent" else ck.sigma
            try:
                vals.append(float(sigma_inv_11(sig)))
            except DegeneracyError:
                singular = True
                checked = (1, k)
                break
        s_inv = max(vals) if vals and not singular else None

    tail_ok = np.isfinite(tsum) and np.isfinite(trem)
    v1 = Verdict(True)
    if not process.gaussian_flag:
        v1.reasons.append("coefficients are not jointly Gaussian")
    if singular:
        v1.reasons.append("singular covariance Sigma_N (det(Sigma_N)=0)")
    elif process.gaussian_flag and not (s_inv is not None and np.isfinite(s_inv)):
        v1.reasons.append("(Sigma_N^-1)_11 not bounded")
    if not tail_ok:
        v1.reasons.append("tail sum diverges")

    v2 = Verdict(True)
    if not _coefficients_independent(coeffs):
        v2.reasons.append("Fourier coefficients are not independent")
    if lip_a1 is None:
        v2.reasons.append("f_A1 not Lipschitz (f_xi1 not Lipschitz)")
    if not tail_ok:
        v2.reasons.append("tail sum diverges")

    v3 = Verdict(True)
    if not process.independence_flag:
        v3.reasons.append("KL variables are not independent")
    if lip_xi is None:
        v3.reasons.append("f_xi1 not Lipschitz")
    if not cbound > 0:
        v3.reasons.append("T_N(phi_1) vanishes on the support of alpha^2")
    if not np.isfinite(l2sum):
        v3.reasons.append("L2 exponential sum diverges")
    for v in (v1, v2, v3):
        v.holds = not v.reasons
    verdicts = {name: {"holds": v.holds, "reasons": v.reasons}
                for name, v in (("teor1", v1), ("teor2", v2), ("teor3", v3))}
    return HypothesisReport(lip_a1, lip_xi, float(tsum), trem, l2sum, cbound, s_inv, checked, singular,
                            verdicts)


# ----------------------------------------------------------------------------
# convergence


@dataclass
class ConvergenceReport:
    pairs: List[Tuple[int, int, float]]
    verdict: str
    context: dict

    def to_dict(self):
        return {"pairs": [list(p) for p in self.pairs], "verdict": self.verdict, "context": self.context}


def classify(distances):
    """``diverging`` iff non-decreasing with final >= 0.1; ``converging`` if decreasing or final < 1e-3."""
    d = np.asarray(distances, dtype=float)
    nondecreasing = bool(np.all(np.diff(d) >= 0))
    if nondecreasing and d[-1] >= DIVERGING_THRESHOLD:
        return "diverging"
    if d[-1] < CONVERGED_THRESHOLD or (d.size > 1 and np.all(np.diff(d) < 0)):
        return "converging"
    return "stalled"


def convergence_report(point, N_list, method, model, q=QuadConfig(), grid="auto"):
    """Successive L1 distances between densities for increasing ``N`` on shared abscissae."""
    if not isinstance(point, EvalPoint):
        point = EvalPoint(*point)
    N_list = [int(n) for n in N_list]
    if len(N_list) < 2 or any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError("N_list must be strictly increasing with at least two entries")
    if isinstance(grid, str) and grid == "auto":
        u = auto_grid(build_plan(method, point, N_list[-1], model, q), model.diffusion, q)
    elif isinstance(grid, tuple):
        u = np.linspace(float(grid[0]), float(grid[1]), int(grid[2]))
    else:
        u = np.asarray(grid, dtype=float)
    grids = [density_grid(point, n, method, model, q, grid=u) for n in N_list]
    pairs = [(a, b, l1_distance(ga, gb)) for a, b, ga, gb in zip(N_list, N_list[1:], grids, grids[1:])]
    ctx = {"x": point.x, "t": point.t, "method": method, "grid_points": int(u.size),
           "masses": [g.mass() for g in grids]}
    return ConvergenceReport(pairs, classify([p[2] for p in pairs]), ctx)
