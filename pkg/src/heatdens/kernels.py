"""Backend selection for the mixture kernel.

The compiled extension is used when it imported cleanly; setting
``HEATDENS_PURE=1`` forces the numpy fallback. ``BACKEND`` names the choice.
"""

import os

from . import _kernel_py
from ._kernel_py import custom_eval

FAMILY_CODES = {"normal": 0, "uniform": 1, "quartic": 2}

_compiled = None
if os.environ.get("HEATDENS_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernel_c as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "numpy"


def mixture_eval(u, scale, shift, weight, family, threads=1, backend=None):
    """``f(u_i) = sum_j weight_j p(scale_j (u_i - shift_j))`` for a pivot family code."""
    use = backend or BACKEND
    if use == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        import numpy as np
        return _compiled.mixture_eval(np.ascontiguousarray(u, dtype=float),
                                      np.ascontiguousarray(scale, dtype=float),
                                      np.ascontiguousarray(shift, dtype=float),
                                      np.ascontiguousarray(weight, dtype=float),
                                      int(family), int(threads))
    return _kernel_py.mixture_eval(u, scale, shift, weight, family, threads)


__all__ = ["BACKEND", "FAMILY_CODES", "mixture_eval", "custom_eval"]
