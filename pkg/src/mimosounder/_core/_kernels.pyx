# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: multipath ray accumulation and ADC clip/quantize.

Signatures mirror mimosounder._core.kernels_py exactly; the package picks
one backend at import time.
"""

import numpy as np

from libc.math cimport cos, floor, sin


def ray_accumulate(double[:, ::1] amps, double[:, ::1] dists,
                   double[::1] wavenumbers):
    """Sum per-ray complex gains into h[a, k] = sum_r amps[a,r] * exp(-1j * dists[a,r] * w[k]).

    Assumes uniformly spaced wavenumbers (OFDM subcarriers are); the phase
    recurrence is re-anchored every 64 steps to keep rounding drift below
    1e-13 relative.
    """
    cdef Py_ssize_t n_ant = amps.shape[0]
    cdef Py_ssize_t n_ray = amps.shape[1]
    cdef Py_ssize_t n_sub = wavenumbers.shape[0]
    out = np.zeros((n_ant, n_sub), dtype=np.complex128)
    cdef double complex[:, ::1] h = out
    cdef Py_ssize_t a, r, k
    cdef double amp, d, w0, dw, ph
    cdef double complex p, step

    if n_sub == 0 or n_ray == 0:
        return out
    w0 = wavenumbers[0]
    dw = (wavenumbers[n_sub - 1] - w0) / (n_sub - 1) if n_sub > 1 else 0.0

    for a in range(n_ant):
        for r in range(n_ray):
            amp = amps[a, r]
            if amp == 0.0:
                continue
            d = dists[a, r]
            step = cos(d * dw) - 1j * sin(d * dw)
            p = 1.0 + 0.0j
            for k in range(n_sub):
                if (k & 63) == 0:
                    ph = d * (w0 + dw * k)
                    p = cos(ph) - 1j * sin(ph)
                h[a, k] = h[a, k] + amp * p
                p = p * step
    return out


def clip_quantize(double[::1] x, double clip_range_vpp, long n_levels):
    """Hard-limit to +-clip_range_vpp/2, then quantize to n_levels uniform levels."""
    cdef Py_ssize_t n = x.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] q = out
    cdef double v = clip_range_vpp / 2.0
    cdef double delta = clip_range_vpp / n_levels
    cdef double lmax = n_levels - 1.0
    cdef double xi, idx
    cdef Py_ssize_t i

    for i in range(n):
        xi = x[i]
        if xi > v:
            xi = v
        elif xi < -v:
            xi = -v
        idx = floor((xi + v) / delta)
        if idx > lmax:
            idx = lmax
        elif idx < 0.0:
            idx = 0.0
        q[i] = -v + (idx + 0.5) * delta
    return out
