# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Debye-sum and direct Gaussian-convolution kernels."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos

cnp.import_array()


def debye_sum(double[:, ::1] points, double[:, ::1] kvec, double complex[::1] coef,
              double[:, ::1] pol):
    """E[n] = sum_j coef[j] * exp(i kvec[j] . points[n]) * pol[j]."""
    cdef Py_ssize_t n_pts = points.shape[0]
    cdef Py_ssize_t n_nodes = kvec.shape[0]
    cdef Py_ssize_t n, j
    cdef double x, y, z, ph, c, s, cr, ci, tr, ti
    cdef double exr, exi, eyr, eyi, ezr, ezi
    out = np.zeros((n_pts, 3), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    for n in range(n_pts):
        x = points[n, 0]
        y = points[n, 1]
        z = points[n, 2]
        exr = 0.0; exi = 0.0; eyr = 0.0; eyi = 0.0; ezr = 0.0; ezi = 0.0
        for j in range(n_nodes):
            ph = kvec[j, 0] * x + kvec[j, 1] * y + kvec[j, 2] * z
            c = cos(ph)
            s = sin(ph)
            cr = coef[j].real
            ci = coef[j].imag
            tr = cr * c - ci * s
            ti = cr * s + ci * c
            exr = exr + tr * pol[j, 0]
            exi = exi + ti * pol[j, 0]
            eyr = eyr + tr * pol[j, 1]
            eyi = eyi + ti * pol[j, 1]
            ezr = ezr + tr * pol[j, 2]
            ezi = ezi + ti * pol[j, 2]
        o[n, 0] = exr + 1j * exi
        o[n, 1] = eyr + 1j * eyi
        o[n, 2] = ezr + 1j * ezi
    return out


def gaussian_convolve_1d(double[::1] values, double[::1] kernel):
    """Zero-padded direct sum with an odd-length centred kernel."""
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t m = kernel.shape[0]
    cdef Py_ssize_t half = m // 2
    cdef Py_ssize_t i, k, k_lo, k_hi
    cdef double acc
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        # kernel taps whose source index i + half - k lies inside the array
        k_lo = i + half - n + 1
        if k_lo < 0:
            k_lo = 0
        k_hi = i + half + 1
        if k_hi > m:
            k_hi = m
        acc = 0.0
        for k in range(k_lo, k_hi):
            acc = acc + kernel[k] * values[i + half - k]
        o[i] = acc
    return out
