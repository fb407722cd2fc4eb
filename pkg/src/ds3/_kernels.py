"""Compiled inner loops for the ADMM iteration.

Each kernel processes a half-open range of rows (or columns) and writes into
a preallocated output, so the caller can split work across threads.  The
arithmetic for a given row/column never depends on the range it was
processed in.
"""

import numba
import numpy as np

_jit = numba.njit(nogil=True, cache=True, fastmath=False)


@_jit
def _simplex_threshold(buf, cnt, radius):
    """Threshold theta with sum(max(buf[:cnt] - theta, 0)) = radius.

    Michelot's fixed-point iteration: repeatedly drop entries at or below
    the current level.  The active set only shrinks, so it terminates in at
    most ``cnt`` passes and lands on the same support as the sort-based
    method.  ``buf`` is overwritten.
    """
    total = 0.0
    for k in range(cnt):
        total += buf[k]
    theta = (total - radius) / cnt
    while True:
        keep = 0
        total = 0.0
        for k in range(cnt):
            x = buf[k]
            if x > theta:
                buf[keep] = x
                keep += 1
                total += x
        if keep == cnt or keep == 0:
            # keep == 0 only happens when radius is lost to rounding
            return theta
        cnt = keep
        theta = (total - radius) / cnt


@_jit
def z_update_l2(C, Lam, inv_mu, thresholds, out, lo, hi):
    n = C.shape[1]
    for i in range(lo, hi):
        t = thresholds[i]
        ss = 0.0
        for j in range(n):
            v = C[i, j] - Lam[i, j] * inv_mu
            out[i, j] = v
            ss += v * v
        norm = np.sqrt(ss)
        if norm > t:
            scale = 1.0 - t / norm
        else:
            scale = 0.0
        for j in range(n):
            out[i, j] = out[i, j] * scale


@_jit
def z_update_linf(C, Lam, inv_mu, thresholds, out, lo, hi):
    n = C.shape[1]
    a = np.empty(n)
    buf = np.empty(n)
    for i in range(lo, hi):
        t = thresholds[i]
        l1 = 0.0
        for j in range(n):
            v = C[i, j] - Lam[i, j] * inv_mu
            out[i, j] = v
            a[j] = abs(v)
            l1 += a[j]
        if t == 0.0:
            continue
        if l1 <= t:
            for j in range(n):
                out[i, j] = 0.0
            continue
        for j in range(n):
            buf[j] = a[j]
        theta = _simplex_threshold(buf, n, t)
        # v - sign(v) * max(|v| - theta, 0)
        for j in range(n):
            shrink = a[j] - theta
            if shrink > 0:
                v = out[i, j]
                out[i, j] = v - shrink if v > 0 else v + shrink
    return


@_jit
def c_update(Z, Lam, D, inv_mu, observed, has_mask, out, lo, hi):
    m = Z.shape[0]
    col = np.empty(m)
    buf = np.empty(m)
    for j in range(lo, hi):
        cnt = 0
        for i in range(m):
            if has_mask and not observed[i, j]:
                continue
            col[cnt] = Z[i, j] + (Lam[i, j] - D[i, j]) * inv_mu
            cnt += 1
        for k in range(cnt):
            buf[k] = col[k]
        theta = _simplex_threshold(buf, cnt, 1.0)
        k = 0
        for i in range(m):
            if has_mask and not observed[i, j]:
                out[i, j] = 0.0
                continue
            x = col[k] - theta
            out[i, j] = x if x > 0 else 0.0
            k += 1


@_jit
def dual_update(Z, C, Zprev, Lam, mu, lo, hi):
    """Lam += mu (Z - C) on rows [lo, hi).

    Returns (max|Z - C|, max|Z - Zprev|, ok) where ok is False if any
    residual or multiplier entry is non-finite.
    """
    n = Z.shape[1]
    e1 = 0.0
    e2 = 0.0
    ok = True
    for i in range(lo, hi):
        for j in range(n):
            r = Z[i, j] - C[i, j]
            lam = Lam[i, j] + mu * r
            Lam[i, j] = lam
            d = abs(Z[i, j] - Zprev[i, j])
            if not (np.isfinite(lam) and np.isfinite(d)):
                ok = False
            r = abs(r)
            if r > e1:
                e1 = r
            if d > e2:
                e2 = d
    return e1, e2, ok
