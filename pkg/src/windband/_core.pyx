# Compiled twin of windband._core_py; same signatures, same semantics.

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()


def mixture_pdf(double[::1] e, double[::1] mus, double[::1] sigmas,
                double[::1] weights):
    """Weighted sum of Gaussian pdfs, evaluated at every point of ``e``.

    ``mus``, ``sigmas`` and ``weights`` describe the mixture components;
    weights are used as given (callers normalize them). All inputs must be
    contiguous float64 arrays and every sigma must be positive.
    """
    cdef Py_ssize_t ne = e.shape[0]
    cdef Py_ssize_t nk = mus.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(ne, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] inv_buf = np.empty(nk, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] coef_buf = np.empty(nk, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double[::1] inv = inv_buf
    cdef double[::1] coef = coef_buf
    cdef Py_ssize_t i, k
    cdef double acc, z
    cdef double inv_sqrt_2pi = 1.0 / sqrt(2.0 * np.pi)

    with nogil:
        for k in range(nk):
            inv[k] = 1.0 / sigmas[k]
            coef[k] = weights[k] * inv[k] * inv_sqrt_2pi
        for i in range(ne):
            acc = 0.0
            for k in range(nk):
                z = (e[i] - mus[k]) * inv[k]
                acc += coef[k] * exp(-0.5 * z * z)
            ov[i] = acc
    return out
