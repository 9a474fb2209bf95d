# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: 1D TV denoising, isotonic projection, tridiagonal solve.

Same algorithms as ``_pykernels``; outputs agree to roundoff.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def tv1d_denoise(y, double lam):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] inp = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t width = inp.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(width)
    if width == 0:
        return out
    cdef double[::1] yv = inp
    cdef double[::1] ov = out
    cdef Py_ssize_t k = 0, k0 = 0, kplus = 0, kminus = 0
    cdef double umin = lam, umax = -lam
    cdef double vmin = yv[0] - lam, vmax = yv[0] + lam
    cdef double twolam = 2.0 * lam, minlam = -lam
    while True:
        while k == width - 1:
            if umin < 0.0:
                while True:
                    ov[k0] = vmin
                    k0 += 1
                    if k0 > kminus:
                        break
                k = k0
                kminus = k0
                vmin = yv[k0]
                umin = lam
                umax = vmin + umin - vmax
            elif umax > 0.0:
                while True:
                    ov[k0] = vmax
                    k0 += 1
                    if k0 > kplus:
                        break
                k = k0
                kplus = k0
                vmax = yv[k0]
                umax = minlam
                umin = vmax + umax - vmin
            else:
                vmin += umin / (k - k0 + 1)
                while True:
                    ov[k0] = vmin
                    k0 += 1
                    if k0 > k:
                        break
                return out
        umin += yv[k + 1] - vmin
        if umin < minlam:
            while True:
                ov[k0] = vmin
                k0 += 1
                if k0 > kminus:
                    break
            k = k0
            kplus = k0
            kminus = k0
            vmin = yv[k0]
            vmax = vmin + twolam
            umin = lam
            umax = minlam
            continue
        umax += yv[k + 1] - vmax
        if umax > lam:
            while True:
                ov[k0] = vmax
                k0 += 1
                if k0 > kplus:
                    break
            k = k0
            kplus = k0
            kminus = k0
            vmax = yv[k0]
            vmin = vmax - twolam
            umin = lam
            umax = minlam
            continue
        k += 1
        if umin >= lam:
            kminus = k
            vmin += (umin - lam) / (kminus - k0 + 1)
            umin = lam
        if umax <= minlam:
            kplus = k
            vmax += (umax + lam) / (kplus - k0 + 1)
            umax = minlam


def pav_increasing(y):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] inp = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = inp.shape[0]
    cdef double[::1] yv = inp
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sums_a = np.empty(n)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts_a = np.empty(n, dtype=np.int64)
    cdef double[::1] sums = sums_a
    cdef long long[::1] counts = counts_a
    cdef Py_ssize_t i, b, j, pos, top = -1
    cdef long long c
    cdef double mean
    for i in range(n):
        top += 1
        sums[top] = yv[i]
        counts[top] = 1
        while top > 0 and sums[top - 1] * counts[top] > sums[top] * counts[top - 1]:
            sums[top - 1] += sums[top]
            counts[top - 1] += counts[top]
            top -= 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    cdef double[::1] ov = out
    pos = 0
    for b in range(top + 1):
        c = counts[b]
        mean = sums[b] / c
        for j in range(c):
            ov[pos + j] = mean
        pos += c
    return out


def tridiag_solve(lower, diag, upper, rhs):
    cdef double[::1] a = np.ascontiguousarray(lower, dtype=np.float64)
    cdef double[::1] bd = np.ascontiguousarray(diag, dtype=np.float64)
    cdef double[::1] c = np.ascontiguousarray(upper, dtype=np.float64)
    cdef double[::1] d = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef Py_ssize_t n = bd.shape[0]
    cdef Py_ssize_t i
    cdef double denom
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    cdef double[::1] dp = out
    if n == 1:
        dp[0] = d[0] / bd[0]
        return out
    cdef double[::1] cp = np.empty(n)
    cp[0] = c[0] / bd[0]
    dp[0] = d[0] / bd[0]
    for i in range(1, n):
        denom = bd[i] - a[i - 1] * cp[i - 1]
        if i < n - 1:
            cp[i] = c[i] / denom
        dp[i] = (d[i] - a[i - 1] * dp[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        dp[i] -= cp[i] * dp[i + 1]
    return out
