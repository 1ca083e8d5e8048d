# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled mixture kernel ``f(u_i) = sum_j w_j p(scale_j (u_i - shift_j))``.

Pivot families: 0 standard normal, 1 uniform on (-1, 1), 2 quartic
``sqrt(2) / (pi (1 + z**4))``. The sum over ``j`` runs in index order for
every ``u_i``, so results do not depend on the thread count.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport exp

cnp.import_array()

cdef double INV_SQRT_2PI = 0.3989422804014327
cdef double QUARTIC_NORM = 0.45015815807855303
cdef double Z2_CUT = 1490.0


def mixture_eval(const double[::1] u, const double[::1] scale, const double[::1] shift,
                 const double[::1] weight,
                 int family, int threads=1):
    cdef Py_ssize_t nu = u.shape[0]
    cdef Py_ssize_t nj = scale.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc, z, z2, ui
    out = np.zeros(nu, dtype=np.float64)
    cdef double[::1] o = out
    if family < 0 or family > 2:
        raise ValueError("unknown pivot family")
    if threads < 1:
        threads = 1
    for i in prange(nu, nogil=True, num_threads=threads, schedule="static"):
        ui = u[i]
        acc = 0.0
        if family == 0:
            for j in range(nj):
                z = scale[j] * (ui - shift[j])
                z2 = z * z
                if z2 < Z2_CUT:
                    acc = acc + weight[j] * exp(-0.5 * z2)
            o[i] = acc * INV_SQRT_2PI
        elif family == 1:
            for j in range(nj):
                z = scale[j] * (ui - shift[j])
                if z >= -1.0 and z <= 1.0:
                    acc = acc + weight[j]
            o[i] = acc * 0.5
        else:
            for j in range(nj):
                z = scale[j] * (ui - shift[j])
                z2 = z * z
                acc = acc + weight[j] / (1.0 + z2 * z2)
            o[i] = acc * QUARTIC_NORM
    return out
