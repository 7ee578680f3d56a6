"""Numpy implementation of the hot kernels.

Import-compatible with the compiled module ``windband._core``; the
dispatcher in :mod:`windband.kernels` picks whichever is available.
"""

import numpy as np

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def mixture_pdf(e, mus, sigmas, weights):
    """Weighted sum of Gaussian pdfs, evaluated at every point of ``e``.

    ``mus``, ``sigmas`` and ``weights`` describe the mixture components;
    weights are used as given (callers normalize them). All inputs must be
    contiguous float64 arrays and every sigma must be positive.
    """
    z = (e[:, None] - mus[None, :]) / sigmas[None, :]
    contrib = (weights / sigmas)[None, :] * np.exp(-0.5 * z * z)
    return _INV_SQRT_2PI * contrib.sum(axis=1)
