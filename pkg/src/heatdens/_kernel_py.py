"""Pure-numpy mixture kernel; same contract as the compiled ``mixture_eval``."""

import numpy as np

INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
QUARTIC_NORM = np.sqrt(2.0) / np.pi
Z2_CUT = 1490.0
CHUNK = 1 << 22


def _pivot(z, family):
    if family == 0:
        z2 = z * z
        return np.where(z2 < Z2_CUT, np.exp(-0.5 * np.minimum(z2, Z2_CUT)), 0.0)
    if family == 1:
        return ((z >= -1.0) & (z <= 1.0)).astype(float)
    z2 = z * z
    return 1.0 / (1.0 + z2 * z2)


def mixture_eval(u, scale, shift, weight, family, threads=1):
    u = np.ascontiguousarray(u, dtype=float)
    scale = np.ascontiguousarray(scale, dtype=float)
    shift = np.ascontiguousarray(shift, dtype=float)
    weight = np.ascontiguousarray(weight, dtype=float)
    if family not in (0, 1, 2):
        raise ValueError("unknown pivot family")
    out = np.empty(u.size)
    per = max(1, CHUNK // max(1, scale.size))
    for i0 in range(0, u.size, per):
        ub = u[i0:i0 + per, None]
        out[i0:i0 + per] = _pivot(scale * (ub - shift), family) @ weight
    const = {0: INV_SQRT_2PI, 1: 0.5, 2: QUARTIC_NORM}[family]
    return out * const


def custom_eval(u, scale, shift, weight, pdf):
    """Same sum with an arbitrary vectorized pivot density."""
    u = np.ascontiguousarray(u, dtype=float)
    out = np.empty(u.size)
    per = max(1, CHUNK // max(1, np.size(scale)))
    for i0 in range(0, u.size, per):
        ub = u[i0:i0 + per, None]
        out[i0:i0 + per] = pdf(scale * (ub - shift)) @ weight
    return out
