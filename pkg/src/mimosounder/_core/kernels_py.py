"""Pure-numpy fallbacks for the compiled kernels.

Same contracts as _kernels.pyx. ray_accumulate chunks over rays so peak
temporary memory stays bounded regardless of problem size.
"""

import numpy as np


def ray_accumulate(amps, dists, wavenumbers):
    amps = np.ascontiguousarray(amps, dtype=np.float64)
    dists = np.ascontiguousarray(dists, dtype=np.float64)
    w = np.ascontiguousarray(wavenumbers, dtype=np.float64)
    n_ant, n_ray = amps.shape
    h = np.zeros((n_ant, w.size), dtype=np.complex128)
    if w.size == 0 or n_ray == 0:
        return h
    chunk = max(1, int(4_000_000 // max(1, n_ant * w.size)))
    for r0 in range(0, n_ray, chunk):
        r1 = min(n_ray, r0 + chunk)
        phase = dists[:, r0:r1, None] * w[None, None, :]
        h += np.sum(amps[:, r0:r1, None] * np.exp(-1j * phase), axis=1)
    return h


def clip_quantize(x, clip_range_vpp, n_levels):
    x = np.asarray(x, dtype=np.float64)
    v = clip_range_vpp / 2.0
    delta = clip_range_vpp / n_levels
    idx = np.floor((np.clip(x, -v, v) + v) / delta)
    np.clip(idx, 0.0, n_levels - 1.0, out=idx)
    return -v + (idx + 0.5) * delta
