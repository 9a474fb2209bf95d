"""Pure-Python reference kernels.

These mirror the compiled routines in ``_ckernels.pyx`` line for line and are
used when the extension is not built (or ``WILDREFIT_PURE_PYTHON=1``).
"""

import numpy as np


def tv1d_denoise(y, lam):
    """Exact minimizer of 0.5*sum((y - x)**2) + lam*sum(|x[i+1] - x[i]|).

    Condat's direct algorithm; ``lam`` is the weight on the unscaled
    half-squared loss.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    width = y.shape[0]
    out = np.empty(width)
    if width == 0:
        return out
    yl = y.tolist()
    ol = [0.0] * width
    k = k0 = 0
    umin = lam
    umax = -lam
    vmin = yl[0] - lam
    vmax = yl[0] + lam
    kplus = kminus = 0
    twolam = 2.0 * lam
    minlam = -lam
    while True:
        while k == width - 1:
            if umin < 0.0:
                while True:
                    ol[k0] = vmin
                    k0 += 1
                    if k0 > kminus:
                        break
                k = kminus = k0
                vmin = yl[k0]
                umin = lam
                umax = vmin + umin - vmax
            elif umax > 0.0:
                while True:
                    ol[k0] = vmax
                    k0 += 1
                    if k0 > kplus:
                        break
                k = kplus = k0
                vmax = yl[k0]
                umax = minlam
                umin = vmax + umax - vmin
            else:
                vmin += umin / (k - k0 + 1)
                while True:
                    ol[k0] = vmin
                    k0 += 1
                    if k0 > k:
                        break
                out[:] = ol
                return out
        umin += yl[k + 1] - vmin
        if umin < minlam:
            while True:
                ol[k0] = vmin
                k0 += 1
                if k0 > kminus:
                    break
            k = kplus = kminus = k0
            vmin = yl[k0]
            vmax = vmin + twolam
            umin = lam
            umax = minlam
            continue
        umax += yl[k + 1] - vmax
        if umax > lam:
            while True:
                ol[k0] = vmax
                k0 += 1
                if k0 > kplus:
                    break
            k = kplus = kminus = k0
            vmax = yl[k0]
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
    """Least-squares projection onto non-decreasing sequences."""
    yl = np.asarray(y, dtype=np.float64).tolist()
    n = len(yl)
    sums = [0.0] * n
    counts = [0] * n
    top = -1
    for v in yl:
        top += 1
        sums[top] = v
        counts[top] = 1
        while top > 0 and sums[top - 1] * counts[top] > sums[top] * counts[top - 1]:
            sums[top - 1] += sums[top]
            counts[top - 1] += counts[top]
            top -= 1
    out = np.empty(n)
    pos = 0
    for b in range(top + 1):
        c = counts[b]
        out[pos:pos + c] = sums[b] / c
        pos += c
    return out


def tridiag_solve(lower, diag, upper, rhs):
    """Thomas algorithm for a tridiagonal system.

    ``lower`` and ``upper`` have length n-1; no pivoting, so the matrix must
    be diagonally dominant (true for I + c*D^T D with c >= 0).
    """
    a = np.asarray(lower, dtype=np.float64).tolist()
    b = np.asarray(diag, dtype=np.float64).tolist()
    c = np.asarray(upper, dtype=np.float64).tolist()
    d = np.asarray(rhs, dtype=np.float64).tolist()
    n = len(b)
    if n == 1:
        return np.array([d[0] / b[0]])
    cp = [0.0] * n
    dp = [0.0] * n
    cp[0] = c[0] / b[0]
    dp[0] = d[0] / b[0]
    for i in range(1, n):
        denom = b[i] - a[i - 1] * cp[i - 1]
        if i < n - 1:
            cp[i] = c[i] / denom
        dp[i] = (d[i] - a[i - 1] * dp[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        dp[i] -= cp[i] * dp[i + 1]
    return np.array(dp)
