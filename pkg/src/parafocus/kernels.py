"""Kernel selection: compiled extension when importable, numpy otherwise.

Set ``PARAFOCUS_PURE_PYTHON=1`` to force the numpy path. The 1D convolution
defaults to ``np.convolve`` on either backend because it outruns the compiled
loop (see ``benchmarks/bench_kernels.py``); pass ``backend="cython"`` to use it.
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("PARAFOCUS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _debye as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def debye_sum(points, kvec, coef, pol, backend=None):
    impl = _select(backend)
    return impl.debye_sum(
        np.ascontiguousarray(points, dtype=np.float64),
        np.ascontiguousarray(kvec, dtype=np.float64),
        np.ascontiguousarray(coef, dtype=np.complex128),
        np.ascontiguousarray(pol, dtype=np.float64),
    )


def gaussian_convolve_1d(values, kernel, backend=None):
    impl = _kernels_py if backend is None else _select(backend)
    return np.asarray(
        impl.gaussian_convolve_1d(
            np.ascontiguousarray(values, dtype=np.float64),
            np.ascontiguousarray(kernel, dtype=np.float64),
        )
    )


def _select(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _kernels_py
    if backend == "cython":
        from . import _debye

        return _debye
    raise ValueError(f"unknown kernel backend {backend!r}")
