"""Pure-NumPy reference implementations of the hot kernels.

The compiled module ``zklab._ckernels`` exposes the same functions with the
same signatures; ``zklab.kernels`` picks one at import time.
"""
from __future__ import annotations

import numpy as np


def slice_lengths(xi, q, c, K, y, lo, hi, out):
    """Length of ``{x in [lo_i, hi_i] : p(x, y_i) in [c, c + K]}`` for each slice.

    ``p(x, y) = xi (3 x^2 + y^2) + 2 q x y`` with ``xi > 0``.  The solution
    set of the quadratic constraint is written as ``x0 + ([-r2, -r1] u [r1, r2])``
    with ``x0 = -q y / (3 xi)``, ``r1 = sqrt(D1)``, ``r2 = sqrt(D2)``, or
    ``x0 + [-r2, r2]`` when ``D1 < 0 <= D2``.

    Results are written to ``out`` in place.
    """
    y = np.asarray(y, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    a = (q * q - 3.0 * xi * xi) / (9.0 * xi * xi)
    D1 = a * y * y + c / (3.0 * xi)
    D2 = a * y * y + (c + K) / (3.0 * xi)
    x0 = -q * y / (3.0 * xi)
    r2 = np.sqrt(np.maximum(D2, 0.0))
    r1 = np.sqrt(np.maximum(D1, 0.0))
    inner = np.where(D1 > 0, r1, 0.0)

    def overlap(a0, a1):
        return np.maximum(0.0, np.minimum(a1, hi) - np.maximum(a0, lo))

    res = overlap(x0 + inner, x0 + r2) + overlap(x0 - r2, x0 - inner)
    res = np.where((D2 >= 0) & (hi > lo), res, 0.0)
    out[:] = res
    return out


def mp_pair_sum(ja, qa, Da, Av, jb, qb, Db, Bv, Nx, Ny, cell, out):
    """Accumulate ``sqrt|Da - Db| * cell * Av[a] * Bv[b]`` at ``(ja + jb, qa + qb)``.

    Integer frequency indices are signed; sums outside ``[-N/2, N/2)`` are
    dropped.  ``Av`` and ``Bv`` have shape ``(S, M)`` (one row per support
    point, one column per time sample); ``out`` has shape ``(Nx, Ny, M)``.
    """
    for a in range(len(ja)):
        j = ja[a] + jb
        qq = qa[a] + qb
        ok = (j >= -(Nx // 2)) & (j < Nx // 2) & (qq >= -(Ny // 2)) & (qq < Ny // 2)
        if not ok.any():
            continue
        w = np.sqrt(np.abs(Da[a] - Db[ok])) * cell
        contrib = w[:, None] * Av[a][None, :] * Bv[ok]
        np.add.at(out, (j[ok] % Nx, qq[ok] % Ny), contrib)
    return out


def grouped_kernel_sum(starts, z, theta, ktab, dmax, step):
    """``sum_g sum_{i, j in g} z_i conj(z_j) k(theta_i - theta_j)``.

    Groups are contiguous runs ``starts[g] : starts[g + 1]`` with ``theta``
    sorted ascending inside each group.  The kernel ``k`` is real and even,
    tabulated on ``[-dmax, dmax]`` with spacing ``step`` (odd length, centre
    at ``d = 0``), linearly interpolated and taken as zero outside the table.
    """
    total = 0.0 + 0.0j
    grid = np.arange(len(ktab)) * step - dmax
    for g in range(len(starts) - 1):
        s, e = int(starts[g]), int(starts[g + 1])
        th = theta[s:e]
        zz = z[s:e]
        for a in range(0, e - s, 1024):
            blk = slice(a, min(a + 1024, e - s))
            d = th[blk, None] - th[None, :]
            kv = np.where(np.abs(d) <= dmax, np.interp(d, grid, ktab), 0.0)
            total += np.sum(zz[blk, None] * np.conj(zz)[None, :] * kv)
    return complex(total)
