# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels; see ``_kernels_py`` for the contracts."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, floor

cnp.import_array()


cdef inline double _overlap(double a0, double a1, double lo, double hi) nogil:
    cdef double l = a0 if a0 > lo else lo
    cdef double h = a1 if a1 < hi else hi
    return h - l if h > l else 0.0


def slice_lengths(double xi, double q, double c, double K,
                  double[::1] y, double[::1] lo, double[::1] hi, double[::1] out):
    cdef Py_ssize_t i, n = y.shape[0]
    cdef double a = (q * q - 3.0 * xi * xi) / (9.0 * xi * xi)
    cdef double D1, D2, x0, r1, r2, yy
    with nogil:
        for i in range(n):
            yy = y[i]
            D2 = a * yy * yy + (c + K) / (3.0 * xi)
            if D2 < 0.0 or hi[i] <= lo[i]:
                out[i] = 0.0
                continue
            D1 = a * yy * yy + c / (3.0 * xi)
            x0 = -q * yy / (3.0 * xi)
            r2 = sqrt(D2)
            r1 = sqrt(D1) if D1 > 0.0 else 0.0
            out[i] = (_overlap(x0 + r1, x0 + r2, lo[i], hi[i])
                      + _overlap(x0 - r2, x0 - r1, lo[i], hi[i]))
    return np.asarray(out)


def mp_pair_sum(long[::1] ja, long[::1] qa, double[::1] Da, double complex[:, ::1] Av,
                long[::1] jb, long[::1] qb, double[::1] Db, double complex[:, ::1] Bv,
                long Nx, long Ny, double cell, double complex[:, :, ::1] out):
    cdef Py_ssize_t a, b, m, M = Av.shape[1]
    cdef long j, qq, hx = Nx // 2, hy = Ny // 2
    cdef double w
    cdef double complex za
    with nogil:
        for a in range(ja.shape[0]):
            for b in range(jb.shape[0]):
                j = ja[a] + jb[b]
                qq = qa[a] + qb[b]
                if j < -hx or j >= hx or qq < -hy or qq >= hy:
                    continue
                w = sqrt(fabs(Da[a] - Db[b])) * cell
                if j < 0:
                    j += Nx
                if qq < 0:
                    qq += Ny
                for m in range(M):
                    out[j, qq, m] += w * Av[a, m] * Bv[b, m]
    return np.asarray(out)


def grouped_kernel_sum(long[::1] starts, double complex[::1] z, double[::1] theta,
                       double[::1] ktab, double dmax, double step):
    cdef Py_ssize_t g, i, j, s, e, k, nt = ktab.shape[0]
    cdef double d, pos, frac, kv
    cdef double complex zi, acc, total = 0.0
    with nogil:
        for g in range(starts.shape[0] - 1):
            s = starts[g]
            e = starts[g + 1]
            for i in range(s, e):
                zi = z[i]
                total += zi * zi.conjugate() * ktab[(nt - 1) // 2]
                acc = 0.0
                for j in range(i + 1, e):
                    d = theta[j] - theta[i]
                    if d > dmax:
                        break
                    pos = (d + dmax) / step
                    k = <Py_ssize_t> floor(pos)
                    if k >= nt - 1:
                        k = nt - 2
                    frac = pos - k
                    kv = ktab[k] * (1.0 - frac) + ktab[k + 1] * frac
                    acc += z[j].conjugate() * kv
                total += 2.0 * (zi * acc).real
    return complex(total)
