"""Heavy-tailed entry laws: samplers, exact tail functions, normalizers.

A ``TailSpec`` describes the marginal law of one matrix entry through its
tail function G(x) = Pr(|entry| > x) = h(x)/x^alpha with h slowly varying.
The module provides exact quantile-transform samplers for each family, the
exact G, and the extreme-value normalizing constant b_N solving
G(b_N) = 1/N, which calibrates the largest of N independent draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import Rng

__all__ = [
    "TailSpec",
    "FAMILIES",
    "sample_entry",
    "sample_array",
    "tail_function",
    "modulus_tail_function",
    "normalizer_bn",
    "verify_bn_limit",
    "pareto_abs_quantile",
    "cauchy_quantile",
]

FAMILIES = ("pareto", "cauchy", "stable", "pareto_logvar")

# ln(e + 1): normalizes the slowly varying factor so G(1) = 1 for the
# pareto_logvar family.
_LOGVAR_NORM = math.log(math.e + 1.0)


@dataclass(frozen=True)
class TailSpec:
    """Parametric description of a heavy-tailed entry law.

    Parameters
    ----------
    family : str
        One of "pareto", "cauchy", "stable", "pareto_logvar".
    alpha : float
        Tail exponent, 0 < alpha < 2. Must be exactly 1 for "cauchy".
    symmetric : bool
        Pareto families draw |entry| and assign a sign with probability
        1/2 each when True; cauchy and beta=0 stable laws are symmetric
        regardless.
    stable_beta : float
        Skewness in [-1, 1], used by the stable family only.
    """

    family: str
    alpha: float
    symmetric: bool = True
    stable_beta: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(
                f"unknown family {self.family!r}; expected one of {FAMILIES}"
            )
        if not 0.0 < self.alpha < 2.0:
            raise ValueError("alpha must lie in (0,2)")
        if self.family == "cauchy" and self.alpha != 1.0:
            raise ValueError("cauchy family requires alpha = 1 exactly")
        if not -1.0 <= self.stable_beta <= 1.0:
            raise ValueError("stable_beta must lie in [-1,1]")


def cauchy_quantile(u):
    """Quantile transform of the standard Cauchy law, x = tan(pi(u - 1/2))."""
    return np.tan(np.pi * (np.asarray(u, dtype=float) - 0.5))


def pareto_abs_quantile(u, alpha: float):
    """|x| solving G(|x|) = u for the pure Pareto tail G(x) = x^(-alpha)."""
    return np.asarray(u, dtype=float) ** (-1.0 / alpha)


def _logvar_tail(x, alpha: float):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        g = np.log(math.e + x) / _LOGVAR_NORM * x ** (-alpha)
    return np.minimum(1.0, g)


def _logvar_abs_quantile(u, alpha: float):
    """Invert the pareto_logvar tail by vectorized bisection.

    G is 1 on [0, x0] and strictly decreasing past x0, so for u in (0, 1)
    the root is unique.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    lo = np.full(u.shape, 1e-12)
    hi = np.full(u.shape, 2.0)
    # Doubling bracket: G(hi) must fall below u everywhere.
    for _ in range(200):
        bad = _logvar_tail(hi, alpha) > u
        if not bad.any():
            break
        hi[bad] *= 2.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        high_side = _logvar_tail(mid, alpha) > u
        lo = np.where(high_side, mid, lo)
        hi = np.where(high_side, hi, mid)
        if np.all(hi - lo <= 1e-14 * hi):
            break
    return 0.5 * (lo + hi)


def _stable_cms(u, w, alpha: float, beta: float):
    """Chambers-Mallows-Stuck construction for a standard stable variate.

    u is uniform on (-pi/2, pi/2), w is standard exponential. alpha = 1 has
    a removable singularity and uses its own branch.
    """
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if alpha == 1.0:
        a = np.pi / 2.0 + beta * u
        x = (a * np.tan(u) - beta * np.log((np.pi / 2.0) * w * np.cos(u) / a)) * (
            2.0 / np.pi
        )
        return x
    t = beta * math.tan(math.pi * alpha / 2.0)
    b = math.atan(t) / alpha
    s = (1.0 + t * t) ** (1.0 / (2.0 * alpha))
    x = (
        s
        * np.sin(alpha * (u + b))
        / np.cos(u) ** (1.0 / alpha)
        * (np.cos(u - alpha * (u + b)) / w) ** ((1.0 - alpha) / alpha)
    )
    return x


def sample_array(spec: TailSpec, rng: Rng, size=None) -> np.ndarray:
    """Vectorized draw of entries following spec.

    The |entry| tail matches tail_function(spec, .) exactly; see
    sample_entry for the scalar form.
    """
    n = 1 if size is None else size
    if spec.family == "cauchy":
        x = cauchy_quantile(rng.uniform(n))
    elif spec.family == "pareto":
        # 1 - uniform([0,1)) lies in (0,1]: keeps the inverse CDF finite.
        absx = pareto_abs_quantile(1.0 - rng.uniform(n), spec.alpha)
        x = _apply_sign(absx, spec, rng)
    elif spec.family == "pareto_logvar":
        absx = _logvar_abs_quantile(1.0 - rng.uniform(n), spec.alpha)
        x = _apply_sign(absx, spec, rng)
    elif spec.family == "stable":
        u = np.pi * (rng.uniform(n) - 0.5)
        w = -np.log(np.maximum(1.0 - rng.uniform(n), 1e-300))
        x = _stable_cms(u, w, spec.alpha, spec.stable_beta)
    else:  # pragma: no cover - spec validated at construction
        raise ValueError(spec.family)
    if size is None:
        return float(x[0]) if np.ndim(x) else float(x)
    return np.asarray(x, dtype=float)


def _apply_sign(absx, spec: TailSpec, rng: Rng):
    if not spec.symmetric:
        return absx
    signs = np.where(rng.uniform(np.shape(absx)) < 0.5, -1.0, 1.0)
    return absx * signs


def sample_entry(spec: TailSpec, rng: Rng) -> float:
    """One variate whose |.| has tail function tail_function(spec, .)."""
    return sample_array(spec, rng, size=None)


def tail_function(spec: TailSpec, x):
    """Exact G(x) = Pr(|entry| > x); monotone nonincreasing, -> 0 at infinity.

    Accepts a scalar or array x > 0.
    """
    xs = np.asarray(x, dtype=float)
    if np.any(xs <= 0):
        raise ValueError("tail function is defined for x > 0")
    if spec.family == "pareto":
        g = np.minimum(1.0, xs ** (-spec.alpha))
    elif spec.family == "cauchy":
        g = 1.0 - (2.0 / np.pi) * np.arctan(xs)
    elif spec.family == "pareto_logvar":
        g = _logvar_tail(xs, spec.alpha)
    elif spec.family == "stable":
        if spec.alpha == 1.0 and spec.stable_beta == 0.0:
            g = 1.0 - (2.0 / np.pi) * np.arctan(xs)
        else:
            raise ValueError(
                "exact tail evaluation for the stable family is only "
                "available at alpha=1, beta=0 (standard Cauchy)"
            )
    else:  # pragma: no cover
        raise ValueError(spec.family)
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(g)
    return g


def modulus_tail_function(spec: TailSpec, x):
    """Tail of |(X + iY)/sqrt(2)| with X, Y iid following spec.

    Used to calibrate b_N for Hermitian ensembles. Regular variation gives
    Pr(|entry| > x) ~ 2 G(sqrt(2) x); the product term removes the
    double-counted joint exceedance, leaving an error of lower order.
    """
    g = tail_function(spec, np.sqrt(2.0) * np.asarray(x, dtype=float))
    out = 2.0 * g - g * g
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out


def normalizer_bn(spec: TailSpec, N: int, tail=None) -> float:
    """Normalizing constant b_N with G(b_N) = 1/N.

    Bisection on the exact tail function, doubling the upper bracket until
    it encloses the root and terminating at relative width 1e-12. For the
    pure Pareto family this equals N^(1/alpha) up to the termination width.

    ``tail`` optionally overrides the tail function (same signature as
    ``tail_function(spec, x)`` partially applied), used for the Hermitian
    modulus calibration.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    g = (lambda t: tail_function(spec, t)) if tail is None else tail
    target = 1.0 / float(N)
    lo = 1.0
    # Shrink the lower bracket if G(1) already sits below the target
    # (e.g. cauchy with very small N).
    while g(lo) < target:
        lo *= 0.5
        if lo < 1e-12:
            return lo
    hi = 2.0 * lo
    while g(hi) > target:
        hi *= 2.0
        if hi > 1e300:  # pragma: no cover - tails reach 0, cannot trigger
            raise ValueError("tail function failed to fall below 1/N")
    if not g(lo) >= target >= g(hi):  # pragma: no cover - monotonicity guard
        raise AssertionError("tail function not decreasing across bracket")
    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if g(mid) >= target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def verify_bn_limit(spec: TailSpec, N: int, xs) -> list[tuple[float, float, float]]:
    """Diagnostic triples (x, N*G(b_N*x), x^(-alpha)).

    The middle entry converges to the right entry as N grows; no assertion
    is made here, callers pick their own tolerances.
    """
    if N < 10:
        raise ValueError("N must be >= 10")
    b = normalizer_bn(spec, N)
    out = []
    for x in xs:
        x = float(x)
        out.append((x, N * tail_function(spec, b * x), x ** (-spec.alpha)))
    return out
