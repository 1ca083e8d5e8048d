"""Compare the compiled and numpy mixture kernels.

Times ``mixture_eval`` on random mixtures of the sizes met in practice
(a 401-point grid against 1e3 to 1e6 terms) and on a full density grid,
and checks that both backends agree.

Usage::

    python benchmarks/bench_kernel.py [--repeat 5] [--threads 1]
"""

import argparse
import time

import numpy as np

from heatdens import kernels, laws
from heatdens.density import Model, QuadConfig, density_grid
from heatdens.models import make_general_sine_process, uniform_diffusion
from heatdens.series import EvalPoint


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_mixtures(repeat, threads):
    rng = np.random.default_rng(0)
    u = np.linspace(-3, 3, 401)
    rows = []
    for terms in (1_000, 10_000, 100_000, 1_000_000):
        scale, shift, weight = rng.uniform(0.5, 5, terms), rng.normal(size=terms), rng.random(terms) / terms
        for family in (0, 1, 2):
            args = (u, scale, shift, weight, family, threads)
            t_np = best_time(lambda: kernels.mixture_eval(*args, backend="numpy"), repeat)
            if kernels.BACKEND == "cython":
                t_c = best_time(lambda: kernels.mixture_eval(*args, backend="cython"), repeat)
                a = kernels.mixture_eval(*args, backend="cython")
                b = kernels.mixture_eval(*args, backend="numpy")
                err = float(np.max(np.abs(a - b)) / np.max(np.abs(b)))
            else:
                t_c, err = float("nan"), float("nan")
            rows.append((terms, family, t_np, t_c, err))
    return rows


def bench_density(repeat, threads):
    model = Model(make_general_sine_process("inverse_cube_log", laws.quartic()), uniform_diffusion(1.0, 2.0))
    q = QuadConfig(threads=threads)
    fn = lambda: density_grid(EvalPoint(0.7, 0.3), 3, "fourier_indep", model, q)  # noqa: E731
    return best_time(fn, repeat)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)
    print(f"active backend: {kernels.BACKEND}, threads={args.threads}")
    print(f"{'terms':>9} {'family':>6} {'numpy [s]':>10} {'cython [s]':>10} {'speedup':>8} {'rel diff':>9}")
    for terms, family, t_np, t_c, err in bench_mixtures(args.repeat, args.threads):
        print(f"{terms:>9} {family:>6} {t_np:>10.4f} {t_c:>10.4f} {t_np / t_c:>8.1f} {err:>9.1e}")
    print(f"density_grid (Example-2, N=3, (0.7,0.3), {kernels.BACKEND}): "
          f"{bench_density(args.repeat, args.threads):.3f} s")


if __name__ == "__main__":
    main()
