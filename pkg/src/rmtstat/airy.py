"""Self-contained Airy function Ai and its derivative.

Maclaurin series for |x| <= 4.5, exponentially decaying asymptotic
expansion beyond; both evaluated in double precision with term-size
truncation. The domain is x >= -4.5: the oscillatory branch on the far
negative axis is not needed by any caller (boundary data and tail bounds
only ever sample the decaying side) and is excluded rather than shipped
untested.
"""

from __future__ import annotations

import math

import numpy as np

_SERIES_BOUND = 4.5
_AI0 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
_AIP0 = -(3.0 ** (-1.0 / 3.0)) / math.gamma(1.0 / 3.0)
_TWO_SQRT_PI = 2.0 * math.sqrt(math.pi)


def _series(x: float) -> tuple[float, float]:
    # Ai = c1*f - c2*g with f = sum a_k x^{3k}, g = sum b_k x^{3k+1};
    # a_{k+1} = a_k/((3k+2)(3k+3)), b_{k+1} = b_k/((3k+3)(3k+4)).
    x3 = x * x * x
    fa = 1.0
    ga = x
    f = fa
    g = ga
    fp = 0.0
    gp = 1.0
    for k in range(1, 80):
        fa *= x3 / ((3 * k - 1) * (3 * k))
        ga *= x3 / ((3 * k) * (3 * k + 1))
        f += fa
        g += ga
        fp += 3 * k * fa / x if x != 0.0 else 0.0
        gp += (3 * k + 1) * ga / x if x != 0.0 else 0.0
        if abs(fa) < 1e-18 * abs(f) and abs(ga) < 1e-18 * max(abs(g), 1e-300):
            break
    ai = _AI0 * f + _AIP0 * g
    aip = _AI0 * fp + _AIP0 * gp
    return ai, aip


def _asymptotic(x: float) -> tuple[float, float]:
    # u_{k+1} = u_k (6k+1)(6k+5)/(72(k+1)); v_k = u_k (6k+1)/(1-6k).
    zeta = (2.0 / 3.0) * x ** 1.5
    u = 1.0
    su = 1.0
    sv = 1.0
    sign = 1.0
    prev = 1.0
    for k in range(25):
        u *= (6 * k + 1) * (6 * k + 5) / (72.0 * (k + 1))
        term = u / zeta ** (k + 1)
        if term >= prev:
            # divergent tail reached; stop at the smallest term
            break
        sign = -sign
        su += sign * term
        sv += sign * term * (6 * (k + 1) + 1) / (1 - 6 * (k + 1))
        prev = term
    root = x ** 0.25
    pref = math.exp(-zeta) / _TWO_SQRT_PI
    return pref / root * su, -pref * root * sv


def _ai_scalar(x: float) -> tuple[float, float]:
    if x < -_SERIES_BOUND:
        raise ValueError("airy evaluation supports x >= -4.5 only")
    if x <= _SERIES_BOUND:
        return _series(x)
    return _asymptotic(x)


def airy_ai_both(x) -> tuple[np.ndarray, np.ndarray]:
    """(Ai(x), Ai'(x)) for scalar or array x with entries >= -4.5."""
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    ai = np.empty(arr.shape)
    aip = np.empty(arr.shape)
    flat = arr.ravel()
    for i in range(flat.size):
        a, ap = _ai_scalar(float(flat[i]))
        ai.ravel()[i] = a
        aip.ravel()[i] = ap
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return float(ai.ravel()[0]), float(aip.ravel()[0])
    return ai, aip


def airy_ai(x):
    """Ai(x) for x >= -4.5."""
    return airy_ai_both(x)[0]


def airy_ai_prime(x):
    """Ai'(x) for x >= -4.5."""
    return airy_ai_both(x)[1]
