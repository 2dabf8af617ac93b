"""Dense symmetric eigenvalue kernels (eigenvalues only).

householder_tridiag reduces a real symmetric matrix to tridiagonal form by
successive Householder reflections applied to the lower triangle in place;
tridiag_eigen then runs the implicit-shift QL iteration with Wilkinson
shifts. Both are JIT-compiled: the reduction is O(n^3) with plain loops and
the QL sweep is O(n^2) total, which keeps multi-hundred-trial full
decompositions affordable on one core.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_EPS = float(np.finfo(np.float64).eps)


@njit(cache=True)
def householder_tridiag(a):
    """Reduce symmetric a (modified in place, lower triangle used) to
    tridiagonal (d, e); e[i] couples d[i-1] and d[i], e[0] = 0."""
    n = a.shape[0]
    d = np.empty(n, dtype=np.float64)
    e = np.zeros(n, dtype=np.float64)
    for i in range(n - 1, 0, -1):
        l = i - 1
        h = 0.0
        scale = 0.0
        if l > 0:
            for k in range(l + 1):
                scale += abs(a[i, k])
            if scale == 0.0:
                e[i] = a[i, l]
            else:
                for k in range(l + 1):
                    a[i, k] /= scale
                    h += a[i, k] * a[i, k]
                f = a[i, l]
                g = -np.sqrt(h) if f >= 0.0 else np.sqrt(h)
                e[i] = scale * g
                h -= f * g
                a[i, l] = f - g
                f = 0.0
                for j in range(l + 1):
                    g = 0.0
                    for k in range(j + 1):
                        g += a[j, k] * a[i, k]
                    for k in range(j + 1, l + 1):
                        g += a[k, j] * a[i, k]
                    e[j] = g / h
                    f += e[j] * a[i, j]
                hh = f / (h + h)
                for j in range(l + 1):
                    f = a[i, j]
                    g = e[j] - hh * f
                    e[j] = g
                    for k in range(j + 1):
                        a[j, k] -= f * e[k] + g * a[i, k]
        else:
            e[i] = a[i, l]
        d[i] = h
    for i in range(n):
        d[i] = a[i, i]
    e[0] = 0.0
    return d, e


@njit(cache=True)
def tridiag_eigen(d, e, max_sweeps):
    """Implicit-shift QL with Wilkinson shifts on (d, e), in place.

    d holds the diagonal, e[i] couples d[i-1] and d[i] on input. Returns 0
    on success (eigenvalues in d, unsorted) or 1 + index of the eigenvalue
    that failed to converge within max_sweeps sweeps.
    """
    n = d.shape[0]
    if n == 1:
        return 0
    for i in range(1, n):
        e[i - 1] = e[i]
    e[n - 1] = 0.0
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > max_sweeps:
                return 1 + l
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            sign_r = r if g >= 0.0 else -r
            g = d[m] - d[l] + e[l] / (g + sign_r)
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    # Never overshoot: cancel the accumulated shift and
                    # restart this sweep.
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return 0


def symmetric_eigenvalues(dense: np.ndarray, max_sweeps: int = 50):
    """All eigenvalues of a dense symmetric array (ascending not guaranteed).

    Returns (status, eigenvalues); status as in tridiag_eigen.
    """
    a = np.array(dense, dtype=np.float64, order="C", copy=True)
    d, e = householder_tridiag(a)
    status = tridiag_eigen(d, e, max_sweeps)
    return status, d
