"""Pure-numpy implementations of the compiled kernels in ``_debye.pyx``."""

import numpy as np

# complex temporaries per chunk are bounded to about this many elements
_CHUNK_ELEMENTS = 1 << 21


def debye_sum(points, kvec, coef, pol):
    """E[n] = sum_j coef[j] * exp(i kvec[j] . points[n]) * pol[j]."""
    points = np.ascontiguousarray(points, dtype=float)
    n_pts = points.shape[0]
    weighted = coef[:, None] * pol
    out = np.empty((n_pts, 3), dtype=complex)
    step = max(1, _CHUNK_ELEMENTS // max(1, kvec.shape[0]))
    for start in range(0, n_pts, step):
        phase = points[start : start + step] @ kvec.T
        out[start : start + step] = np.exp(1j * phase) @ weighted
    return out


def gaussian_convolve_1d(values, kernel):
    """Zero-padded direct sum with an odd-length centred kernel."""
    # mode="same" would return the longer of the two lengths; slice the full result instead
    half = kernel.size // 2
    return np.convolve(values, kernel)[half : half + values.size]
