"""Densities of the truncated random solution by random variable transformation.

Every route reduces to one form. Conditioning on ``alpha^2`` and on all
coordinates except the pivot ``P`` (``A_1`` for the Fourier routes, ``xi_1``
for the KL route), ``u = shift + P / K`` is affine in ``P``. Hence

    f(u) = E[ |K| f_P(K (u - shift)) ],

where the expectation runs over ``alpha^2`` and the remaining coordinates.
When ``f_P`` is an affine image of a standard pivot (normal, uniform,
quartic) the standardization is folded into ``K`` and ``shift`` and the sum
runs in the compiled kernel of :mod:`heatdens.kernels`.

A route is compiled into a :class:`RoutePlan`; quadrature replaces the
expectation by tensor nodes, Monte Carlo by seeded draws.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np

from . import laws
from .errors import (DegeneracyError, DomainError, HypothesisViolation, NonConvergenceError,
                     SingularCovarianceError, UnsupportedLawError, WrongModelError)
from .kernels import BACKEND, FAMILY_CODES, custom_eval, mixture_eval
from .laws import COMPACT, GAUSSIAN, HEAVY, ScalarDensity
from .models import CoeffModel, build_coeff_model
from .quadrature import gauss_hermite_normal, gauss_legendre, tangent_legendre
from .series import PI2, EvalPoint, t_n_operator

METHODS = ("fourier_indep", "fourier_joint", "bb_fast", "kl")
PIVOT_VARIANCE = {0: 1.0, 1: 1.0 / 3.0, 2: 1.0}
MC_STREAM_SIZE = 1 << 15
SINH_RATIO = 5.0


@dataclass(frozen=True)
class QuadConfig:
    """Quadrature and Monte Carlo settings.

    ``node_budget`` caps the number of (alpha^2, inner) nodes held at once;
    refinement that would exceed it stops with a non-convergence error.
    """

    hermite_order: int = 20
    legendre_order: int = 64
    heavy_tail_order: int = 96
    mc_samples: int = 100_000
    mc_seed: int = 0
    refine: bool = False
    refine_tol: float = 1e-6
    max_doublings: int = 6
    node_budget: int = 20_000_000
    prune_tol: float = 1e-18
    threads: int = 1

    def __post_init__(self):
        for name in ("hermite_order", "legendre_order", "heavy_tail_order"):
            if getattr(self, name) < 2:
                raise ValueError(f"{name} must be >= 2")
        if self.mc_seed < 0:
            raise ValueError("mc_seed must be unsigned")
        if not self.refine_tol > 0:
            raise ValueError("refine_tol must be positive")

    def doubled(self):
        return replace(self, hermite_order=2 * self.hermite_order,
                       legendre_order=2 * self.legendre_order,
                       heavy_tail_order=2 * self.heavy_tail_order)

    def digest(self):
        keys = ("hermite_order", "legendre_order", "heavy_tail_order", "mc_samples", "mc_seed",
                "refine", "refine_tol", "max_doublings", "node_budget", "prune_tol")
        return _digest({k: getattr(self, k) for k in keys})


def _digest(obj):
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class DensityGrid:
    u: np.ndarray
    f: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if u.shape != f.shape or u.ndim != 1:
            raise ValueError("u and f must be 1-D arrays of equal length")
        if u.size > 1 and np.any(np.diff(u) <= 0):
            raise ValueError("u must be strictly increasing")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "f", f)

    def mass(self):
        return float(np.trapezoid(self.f, self.u))

    def mean(self):
        return float(np.trapezoid(self.u * self.f, self.u) / self.mass())

    def variance(self):
        m = self.mean()
        return float(np.trapezoid((self.u - m) ** 2 * self.f, self.u) / self.mass())


@dataclass(frozen=True)
class Model:
    """Model bundle: initial-condition process and diffusion law."""

    process: object
    diffusion: object

    def digest(self):
        return _digest({"process": self.process.describe(), "diffusion": self.diffusion.describe()})


# ----------------------------------------------------------------------------
# node rules


def law_nodes(law, q):
    """Nodes and probability weights for a coordinate with law ``law``."""
    if law.family == "normal":
        z, w = gauss_hermite_normal(q.hermite_order)
        return law.loc + law.scale * z, w.copy()
    if law.tail_class == COMPACT and law.is_compact:
        a, w = gauss_legendre(q.legendre_order, *law.support)
        return a, w * law.evaluate(a)
    if law.tail_class in (HEAVY, GAUSSIAN):
        a, w = tangent_legendre(q.heavy_tail_order, law.loc, law.scale)
        return a, w * law.evaluate(a)
    raise UnsupportedLawError(f"no node rule for law {law.name!r}")


def _tensor(node_sets, prune_tol, budget):
    """Pruned tensor product; returns ``(points (n, D), weights (n,))``."""
    maxima = [float(np.max(w)) if w.size else 0.0 for _, w in node_sets]
    total_max = float(np.prod(maxima)) if maxima else 1.0
    pts = np.zeros((1, 0))
    wts = np.ones(1)
    for d, (v, w) in enumerate(node_sets):
        rest = float(np.prod(maxima[d + 1:])) if d + 1 < len(maxima) else 1.0
        new_w = (wts[:, None] * w[None, :]).ravel()
        keep = new_w * rest >= prune_tol * total_max
        if np.count_nonzero(keep) > budget:
            raise NonConvergenceError(f"inner node count exceeds the node budget ({budget})")
        idx = np.nonzero(keep)[0]
        pts = np.hstack([pts[idx // v.size], v[idx % v.size][:, None]])
        wts = new_w[idx]
    return pts, wts


# ----------------------------------------------------------------------------
# route plans


@dataclass
class RoutePlan:
    """Compiled route.

    ``frame(alpha2)`` returns ``(scale, base, coef)`` with shapes ``(R,)``,
    ``(R,)``, ``(R, D)``: the pivot argument is ``scale * (u - shift)`` with
    ``shift = base + coef @ y`` for inner coordinates ``y`` with laws ``dims``.
    ``family`` is a kernel family code, or ``None`` with a custom ``pdf``.
    """

    family: Optional[int]
    pdf: Optional[Callable]
    dims: List[ScalarDensity]
    frame: Callable
    pivot_moments: tuple = (0.0, 1.0)
    tag: str = ""

    def active(self, probe):
        _, _, coef = self.frame(probe)
        return np.any(coef != 0.0, axis=0)

    def restrict(self, mask):
        """Drop inner coordinates whose coefficient vanishes identically."""
        if mask.all():
            return self
        frame = self.frame
        idx = np.nonzero(mask)[0]

        def sub(alpha2):
            s, b, c = frame(alpha2)
            return s, b, c[:, idx]
        return RoutePlan(self.family, self.pdf, [self.dims[i] for i in idx], sub,
                         self.pivot_moments, self.tag)

    def evaluate(self, u, scale, shift, weight, threads=1):
        if self.family is not None:
            return mixture_eval(u, scale, shift, weight, self.family, threads)
        return custom_eval(u, scale, shift, weight, self.pdf)


def _pivot_of(law, K):
    """Fold the standardization of ``law`` into ``K``: returns family, pdf, scale, offset.

    ``f_law(K (u - s)) |K| = |K'| p(K' (u - s - offset))``.
    """
    code = FAMILY_CODES.get(law.family)
    if code is None:
        return None, law.evaluate, K, np.zeros_like(K), law.mean_var()
    return code, None, np.abs(K) / law.scale, law.loc / K, (0.0, PIVOT_VARIANCE[code])


def _fourier_indep_plan(point, N, coeffs):
    if not isinstance(coeffs, CoeffModel) or coeffs.kind != "independent":
        raise WrongModelError("density_fourier_indep needs an independent coefficient model")
    if coeffs.N < N:
        raise ValueError(f"coefficient model has {coeffs.N} < N = {N} coordinates")
    law1 = coeffs.marginals[0]
    sines = point.mode_sines(N)
    n2 = np.arange(1, N + 1, dtype=float) ** 2
    code = FAMILY_CODES.get(law1.family)

    def frame(alpha2):
        alpha2 = np.asarray(alpha2, dtype=float)
        d = np.exp(-n2 * PI2 * alpha2[:, None] * point.t) * sines
        K = 1.0 / d[:, 0]
        _, _, scale, offset, _ = _pivot_of(law1, K)
        return scale, offset, d[:, 1:]

    _, pdf, _, _, pm = _pivot_of(law1, np.ones(1))
    return RoutePlan(code, pdf, list(coeffs.marginals[1:N]), frame, pm, "fourier_indep")


def _bb_plan(point, N):
    """Brownian-bridge specialization: ``A_n ~ Normal(0, 2/(n^2 pi^2))``."""
    sines = point.mode_sines(N)
    n = np.arange(1, N + 1, dtype=float)
    sd = np.sqrt(2.0) / (n * np.pi)
    std = laws.normal(0.0, 1.0)

    def frame(alpha2):
        alpha2 = np.asarray(alpha2, dtype=float)
        d = np.exp(-n * n * PI2 * alpha2[:, None] * point.t) * sines
        scale = 1.0 / (d[:, 0] * sd[0])
        return scale, np.zeros_like(scale), d[:, 1:] * sd[1:]

    return RoutePlan(0, None, [std] * (N - 1), frame, (0.0, 1.0), "bb_fast")


def _joint_gaussian_plan(point, N, coeffs):
    if not isinstance(coeffs, CoeffModel) or coeffs.kind != "joint_gaussian":
        raise WrongModelError("density_fourier_joint_gaussian needs a joint-Gaussian coefficient model")
    mu = coeffs.mu[:N]
    sigma = coeffs.sigma[:N, :N]
    try:
        det = np.linalg.det(sigma)
        L_full = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        det, L_full = 0.0, None
    lam = np.linalg.eigvalsh(sigma)
    if L_full is None or not det > 1e-300 or lam.min() <= 1e-12 * lam.max():
        cond = float(lam.max() / lam.min()) if lam.min() > 0 else float("inf")
        raise SingularCovarianceError(
            f"singular covariance Sigma_N (det(Sigma_N)=0 to working precision, det={det:.3g}); "
            "the joint density of (A_1..A_N) does not exist", condition_number=cond)
    sines = point.mode_sines(N)
    n2 = np.arange(1, N + 1, dtype=float) ** 2
    if N > 1:
        s22 = sigma[1:, 1:]
        s12 = sigma[0, 1:]
        L = np.linalg.cholesky(s22)
        B = np.linalg.solve(s22, s12)
        v = sigma[0, 0] - s12 @ B
        BL = B @ L
    else:
        L = np.zeros((0, 0))
        v = sigma[0, 0]
        BL = np.zeros(0)
    if not v > 1e-14 * sigma[0, 0]:
        raise DegeneracyError("degenerate conditional variance of A_1 given A_2..A_N")
    sv = np.sqrt(v)

    def frame(alpha2):
        alpha2 = np.asarray(alpha2, dtype=float)
        d = np.exp(-n2 * PI2 * alpha2[:, None] * point.t) * sines
        K = 1.0 / d[:, 0]
        rest = d[:, 1:]
        base = rest @ mu[1:] + mu[0] / K
        coef = rest @ L + BL[None, :] / K[:, None]
        return K / sv, base, coef

    std = laws.normal(0.0, 1.0)
    return RoutePlan(0, None, [std] * (N - 1), frame, (0.0, 1.0), "fourier_joint")


def _kl_plan(point, N, process, probe):
    if N < 3:
        raise ValueError("the KL route needs N >= 3")
    M1 = N - 1
    mu_hat = process.mean_sine_coeffs(N)
    phi_hat = process.eigen_sine_coeffs(M1, N)
    sqnu = np.sqrt(process.nus(M1))
    xi = [process.xi_law(m) for m in range(1, M1 + 1)]
    law1 = xi[0]

    def tn(alpha2):
        alpha2 = np.asarray(alpha2, dtype=float)
        T = np.stack([t_n_operator(phi_hat[m], point, alpha2, N) for m in range(M1)], axis=1)
        return T, t_n_operator(mu_hat, point, alpha2, N)

    T_probe, _ = tn(probe)
    if np.any(~(np.abs(T_probe[:, 0]) > 0.0)):
        raise HypothesisViolation(
            "T_N(phi_1)(x,t,alpha^2) vanishes at an alpha^2 node: the support of alpha^2 is not "
            "contained in D_N")
    code = FAMILY_CODES.get(law1.family)

    def frame(alpha2):
        T, Tmu = tn(alpha2)
        c = 2.0 * sqnu[None, :] * T
        K = 1.0 / c[:, 0]
        _, _, scale, offset, _ = _pivot_of(law1, K)
        return scale, 2.0 * Tmu + offset, c[:, 1:]

    _, pdf, _, _, pm = _pivot_of(law1, np.ones(1))
    return RoutePlan(code, pdf, xi[1:], frame, pm, "kl")


# ----------------------------------------------------------------------------
# evaluation


def _alpha_nodes(diffusion, q):
    a, w = diffusion.nodes(q.legendre_order)
    keep = w > 0
    return a[keep], w[keep]


def _probe(diffusion, q):
    a, _ = _alpha_nodes(diffusion, q)
    return np.concatenate([a, [diffusion.lo, diffusion.hi]])


def plan_nodes(plan, diffusion, q):
    """Flat ``(scale, shift, weight)`` arrays for quadrature."""
    plan = plan.restrict(plan.active(_probe(diffusion, q)))
    a, wa = _alpha_nodes(diffusion, q)
    inner = [law_nodes(law, q) for law in plan.dims]
    pts, wp = _tensor(inner, q.prune_tol, q.node_budget)
    if a.size * wp.size > q.node_budget:
        raise NonConvergenceError(
            f"{a.size} x {wp.size} nodes exceed the node budget ({q.node_budget})")
    scale, base, coef = plan.frame(a)
    shift = base[:, None] + coef @ pts.T
    weight = (wa * np.abs(scale))[:, None] * wp[None, :]
    scale = np.broadcast_to(scale[:, None], shift.shape)
    scale, shift, weight = scale.ravel(), shift.ravel(), weight.ravel()
    keep = weight >= q.prune_tol * weight.max()
    return plan, np.ascontiguousarray(scale[keep]), np.ascontiguousarray(shift[keep]), \
        np.ascontiguousarray(weight[keep])


def _eval_plan(plan, u, diffusion, q):
    scalar = np.ndim(u) == 0
    uu = np.atleast_1d(np.asarray(u, dtype=float))
    plan, scale, shift, weight = plan_nodes(plan, diffusion, q)
    f = plan.evaluate(uu, scale, shift, weight, q.threads)
    return float(f[0]) if scalar else f


def _check_diffusion(diffusion):
    if not (np.isfinite(diffusion.lo) and np.isfinite(diffusion.hi)):
        raise DomainError("diffusion law must have compact support")


def density_fourier_indep(u, point, N, coeffs, diffusion, q=QuadConfig()):
    """Fourier-route density for independent coefficients at ``u`` (scalar or array)."""
    if N < 2:
        raise ValueError("N must be >= 2")
    _check_diffusion(diffusion)
    return _eval_plan(_fourier_indep_plan(point, N, coeffs), u, diffusion, q)


def density_fourier_joint_gaussian(u, point, N, coeffs, diffusion, q=QuadConfig()):
    """Fourier-route density for jointly Gaussian coefficients."""
    if N < 1:
        raise ValueError("N must be >= 1")
    _check_diffusion(diffusion)
    return _eval_plan(_joint_gaussian_plan(point, N, coeffs), u, diffusion, q)


def density_bb(u, point, N, diffusion, q=QuadConfig()):
    """Brownian-bridge fast path with the closed-form coefficient laws."""
    if N < 2:
        raise ValueError("N must be >= 2")
    _check_diffusion(diffusion)
    return _eval_plan(_bb_plan(point, N), u, diffusion, q)


def density_kl(u, point, N, process, diffusion, q=QuadConfig()):
    """KL-route density of ``u_{N,N}``: ``N`` Fourier modes and ``N - 1`` KL terms."""
    _check_diffusion(diffusion)
    return _eval_plan(_kl_plan(point, N, process, _probe(diffusion, q)), u, diffusion, q)


def build_plan(method, point, N, model, q=QuadConfig()):
    if method == "fourier_indep":
        coeffs = build_coeff_model(model.process, N)
        if coeffs.kind != "independent":
            raise WrongModelError(f"process {model.process.name!r} does not have independent coefficients")
        return _fourier_indep_plan(point, N, coeffs)
    if method == "fourier_joint":
        if not model.process.gaussian_flag:
            raise WrongModelError("fourier_joint needs a Gaussian process")
        coeffs = build_coeff_model(model.process, N)
        return _joint_gaussian_plan(point, N, coeffs.as_joint_gaussian())
    if method == "bb_fast":
        if model.process.name != "brownian_bridge":
            raise WrongModelError("bb_fast is only valid for the Brownian bridge")
        return _bb_plan(point, N)
    if method == "kl":
        return _kl_plan(point, N, model.process, _probe(model.diffusion, q))
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


# ----------------------------------------------------------------------------
# grids


def plan_moments(plan, diffusion, q=QuadConfig()):
    """Exact mean, variance and per-node conditional sd range of ``u``.

    Uses ``u = shift + P / scale`` given ``alpha^2``; the outer expectation
    uses the alpha^2 quadrature.
    """
    a, wa = diffusion.nodes(max(q.legendre_order, 128))
    keep = wa > 0
    a, wa = a[keep], wa[keep]
    scale, base, coef = plan.frame(a)
    dm = np.array([law.mean_var() for law in plan.dims]).reshape(-1, 2)
    pm, pv = plan.pivot_moments
    cmean = base + coef @ dm[:, 0] + pm / scale
    cvar = (coef ** 2) @ dm[:, 1] + pv / scale ** 2
    mean = float(np.sum(wa * cmean) / wa.sum())
    var = float(np.sum(wa * (cvar + cmean ** 2)) / wa.sum() - mean ** 2)
    var = max(var, float(np.sum(wa * cvar) / wa.sum()))
    sd = np.sqrt(cvar)
    return mean, var, float(sd.min()), float(sd.max())


def _is_heavy(plan):
    return plan.family == 2 or any(law.tail_class == HEAVY for law in plan.dims)


def auto_grid(plan, diffusion, q=QuadConfig()):
    """Default u-grid: ``mean +- 6 sd`` with 401 points (12 sd, 801 points for heavy tails).

    When the conditional sd over ``alpha^2`` spans more than a factor 5 the
    density has a sharp core inside wide shoulders; a sinh-mapped grid
    ``u = mean + a sinh(z)`` with ``a = sd_min / 10`` resolves both.
    """
    mean, var, sd_lo, sd_hi = plan_moments(plan, diffusion, q)
    sd = np.sqrt(var)
    heavy = _is_heavy(plan)
    width, count = (12.0, 801) if heavy else (6.0, 401)
    if sd_hi > SINH_RATIO * sd_lo:
        a = sd_lo / 10.0
        zmax = np.arcsinh(width * max(sd, sd_hi) / a)
        z = np.linspace(-zmax, zmax, 1201)
        return mean + a * np.sinh(z)
    return np.linspace(mean - width * sd, mean + width * sd, count)


def l1_on_grid(u, f, g):
    return float(np.trapezoid(np.abs(np.asarray(f) - np.asarray(g)), u))


def density_grid(point, N, method, model, q=QuadConfig(), grid="auto", on_nonconvergence="raise"):
    """Tabulate the selected density on a grid.

    ``grid`` is ``"auto"``, a ``(lo, hi, count)`` triple or an explicit
    increasing array. With ``q.refine`` all node orders are doubled until two
    successive grids differ by less than ``q.refine_tol`` in L1, at most
    ``q.max_doublings`` times.
    """
    if not isinstance(point, EvalPoint):
        point = EvalPoint(*point)
    if on_nonconvergence not in ("raise", "report"):
        raise ValueError("on_nonconvergence must be 'raise' or 'report'")
    plan = build_plan(method, point, N, model, q)
    if isinstance(grid, str):
        if grid != "auto":
            raise ValueError("grid must be 'auto', (lo, hi, count) or an array")
        u = auto_grid(plan, model.diffusion, q)
    elif isinstance(grid, tuple) and len(grid) == 3:
        u = np.linspace(float(grid[0]), float(grid[1]), int(grid[2]))
    else:
        u = np.asarray(grid, dtype=float)

    def meta(qq, converged, history):
        return {"x": point.x, "t": point.t, "N": int(N), "method": method,
                "quad_digest": qq.digest(), "model_digest": model.digest(),
                "quad": asdict(qq), "backend": BACKEND, "converged": converged,
                "refinement_history": list(history)}

    f = _eval_plan(plan, u, model.diffusion, q)
    if not q.refine:
        return DensityGrid(u, f, meta(q, None, []))
    history = []
    qq = q
    for _ in range(q.max_doublings):
        q_next = qq.doubled()
        try:
            f_next = _eval_plan(plan, u, model.diffusion, q_next)
        except NonConvergenceError as exc:
            last = DensityGrid(u, f, meta(qq, False, history))
            if on_nonconvergence == "report":
                last.meta["nonconvergence"] = str(exc)
                return last
            raise NonConvergenceError(f"refinement stopped: {exc}", grid=last, history=history) from exc
        diff = l1_on_grid(u, f, f_next)
        history.append(diff)
        f, qq = f_next, q_next
        if diff < q.refine_tol:
            return DensityGrid(u, f, meta(qq, True, history))
    last = DensityGrid(u, f, meta(qq, False, history))
    if on_nonconvergence == "report":
        last.meta["nonconvergence"] = f"no convergence after {q.max_doublings} doublings"
        return last
    raise NonConvergenceError(f"refinement did not reach {q.refine_tol} after {q.max_doublings} doublings",
                              grid=last, history=history)


def mc_integrate_density(u, point, N, model, q=QuadConfig(), method="fourier_indep"):
    """Monte Carlo estimate of the same transformation integral.

    Draws ``(alpha^2, inner coordinates)`` in streams of fixed size; stream
    ``k`` uses ``SeedSequence([q.mc_seed, k])`` and partial sums are added in
    stream order, so results do not depend on parallelism.
    """
    if q.mc_samples < 10_000:
        raise ValueError("mc_samples must be >= 1e4")
    if not isinstance(point, EvalPoint):
        point = EvalPoint(*point)
    plan = build_plan(method, point, N, model, q)
    plan = plan.restrict(plan.active(_probe(model.diffusion, q)))
    u = np.asarray(u, dtype=float)
    total = np.zeros(u.size)
    n_streams = -(-q.mc_samples // MC_STREAM_SIZE)
    for k in range(n_streams):
        size = min(MC_STREAM_SIZE, q.mc_samples - k * MC_STREAM_SIZE)
        rng = np.random.default_rng(np.random.SeedSequence([q.mc_seed, k]))
        a = model.diffusion.sample(rng, size)
        scale, base, coef = plan.frame(a)
        shift = base.copy()
        for d, law in enumerate(plan.dims):
            shift += coef[:, d] * law.sample(rng, size)
        weight = np.abs(scale) / q.mc_samples
        total += plan.evaluate(u, scale, shift, weight, q.threads)
    return DensityGrid(u, total, {"x": point.x, "t": point.t, "N": int(N), "method": method,
                                  "mc_samples": q.mc_samples, "mc_seed": q.mc_seed,
                                  "model_digest": model.digest(), "backend": BACKEND})
