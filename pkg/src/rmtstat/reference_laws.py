"""Reference distributions for the light-tailed contrast regime.

Closed-form semicircle CDF, Marchenko-Pastur CDF via cached quadrature,
and the Tracy-Widom CDFs F1/F2 obtained from the Hastings-McLeod solution
of Painleve II (q'' = x q + 2 q^3, q ~ Ai at +infinity), integrated
backward with fixed-step RK4 and turned into CDFs by composite Simpson
with analytic Airy tails. Also houses the affine edge maps that carry raw
extreme eigenvalues onto the scales these laws are stated at.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .airy import airy_ai_both

_Q_OVERFLOW = 1e8
_MAX_HALVINGS = 3


@dataclass(frozen=True)
class EsdParams:
    """Entry variance and aspect ratio m/n >= 1 of a Gram-matrix ensemble."""

    sigma2: float
    gamma: float

    def __post_init__(self) -> None:
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if not self.gamma >= 1:
            raise ValueError("gamma must be at least 1")

    @property
    def support(self) -> tuple[float, float]:
        s = math.sqrt(1.0 / self.gamma)
        return self.sigma2 * (1.0 - s) ** 2, self.sigma2 * (1.0 + s) ** 2


def goe_rescale(n: int) -> tuple[float, float]:
    """Soft-edge affine constants (center 2 sqrt(n), scale n^(-1/6))."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return 2.0 * math.sqrt(n), float(n) ** (-1.0 / 6.0)


def johnstone_rescale(m: int, n: int) -> tuple[float, float]:
    """Wishart-edge constants mu = (sqrt(n)+sqrt(m))^2 and
    sigma = (sqrt(n)+sqrt(m)) * (n^(-1/2)+m^(-1/2))^(1/3)."""
    if not (m >= n >= 1):
        raise ValueError("require m >= n >= 1")
    rm, rn = math.sqrt(m), math.sqrt(n)
    mu = (rn + rm) ** 2
    sigma = (rn + rm) * (1.0 / rn + 1.0 / rm) ** (1.0 / 3.0)
    return mu, sigma


def semicircle_density(t, sigma2: float):
    """Density sqrt(2 sigma^2 - t^2) / (pi sigma^2) on |t| <= sqrt(2) sigma."""
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    t = np.asarray(t, dtype=np.float64)
    r2 = 2.0 * sigma2
    inside = np.clip(r2 - t * t, 0.0, None)
    return np.where(t * t <= r2, np.sqrt(inside) / (math.pi * sigma2), 0.0)


def semicircle_cdf(x, sigma2: float):
    """Closed-form CDF of the semicircle law with entry variance sigma2."""
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    x = np.asarray(x, dtype=np.float64)
    r = math.sqrt(2.0 * sigma2)
    u = np.clip(x / r, -1.0, 1.0)
    val = 0.5 + np.arcsin(u) / math.pi + u * np.sqrt(1.0 - u * u) / math.pi
    out = np.where(x <= -r, 0.0, np.where(x >= r, 1.0, val))
    return float(out) if out.ndim == 0 else out


def marchenko_pastur_density(t, p: EsdParams):
    """Density gamma * sqrt((b-t)(t-a)) / (2 pi t sigma^2) on [a, b]."""
    t = np.asarray(t, dtype=np.float64)
    a, b = p.support
    inside = np.clip((b - t) * (t - a), 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = p.gamma * np.sqrt(inside) / (2.0 * math.pi * t * p.sigma2)
    return np.where((t > a) & (t < b), dens, 0.0)


_MP_PANELS = 4096
_MP_PANEL_TOL = 1e-13
_MP_MAX_DEPTH = 40


def _mp_theta_mass(theta: np.ndarray, gamma: float) -> np.ndarray:
    """MP mass density in the angle variable t = a + (b-a) sin^2(theta).

    The substitution absorbs both square-root edges of the density; what
    remains is (4 sqrt(g)/pi) sin^2 cos^2 / (a' + sin^2) with
    a' = a/(b-a) = (sqrt(g)-1)^2 / (4 sqrt(g)). sigma2 cancels and the
    total mass over [0, pi/2] is exactly 1.
    """
    rg = math.sqrt(gamma)
    aprime = (rg - 1.0) ** 2 / (4.0 * rg)
    c2 = np.cos(theta) ** 2
    if aprime == 0.0:
        # gamma = 1: sin^2/(0 + sin^2) = 1 by continuity at theta = 0
        ratio = np.ones_like(c2)
    else:
        s2 = np.sin(theta) ** 2
        ratio = s2 / (aprime + s2)
    return (4.0 * rg / math.pi) * c2 * ratio


def _mp_panel_masses(gamma: float) -> np.ndarray:
    """Per-panel masses on the uniform theta grid, adaptive Simpson.

    gamma slightly above 1 puts a dip of width ~ sqrt(a') next to
    theta = 0 that no fixed rule resolves; panels whose Richardson
    estimate exceeds the tolerance are bisected, children accumulating
    into their root panel. Whatever is still unresolved at the depth
    cap carries provably < 1e-9 mass (the dip holds ~ 2 sqrt(a') of it).
    """
    edges = np.linspace(0.0, 0.5 * math.pi, _MP_PANELS + 1)
    lo, hi = edges[:-1], edges[1:]
    root = np.arange(_MP_PANELS)
    masses = np.zeros(_MP_PANELS)
    for depth in range(_MP_MAX_DEPTH + 1):
        mid = 0.5 * (lo + hi)
        w = hi - lo
        flo = _mp_theta_mass(lo, gamma)
        fq1 = _mp_theta_mass(0.5 * (lo + mid), gamma)
        fmid = _mp_theta_mass(mid, gamma)
        fq3 = _mp_theta_mass(0.5 * (mid + hi), gamma)
        fhi = _mp_theta_mass(hi, gamma)
        s1 = w * (flo + 4.0 * fmid + fhi) / 6.0
        s2 = w * (flo + 4.0 * fq1 + 2.0 * fmid + 4.0 * fq3 + fhi) / 12.0
        done = np.abs(s2 - s1) <= 15.0 * _MP_PANEL_TOL
        if depth == _MP_MAX_DEPTH:
            done = np.ones_like(done)
        np.add.at(masses, root[done], s2[done] + (s2[done] - s1[done]) / 15.0)
        if done.all():
            break
        keep = ~done
        lo, hi, mid, root = lo[keep], hi[keep], mid[keep], root[keep]
        lo = np.concatenate([lo, mid])
        hi = np.concatenate([mid, hi])
        root = np.concatenate([root, root])
    return masses


@lru_cache(maxsize=16)
def _mp_grid(sigma2: float, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    p = EsdParams(sigma2, gamma)
    a, b = p.support
    theta = np.linspace(0.0, 0.5 * math.pi, _MP_PANELS + 1)
    t = a + (b - a) * np.sin(theta) ** 2
    cdf = np.zeros(_MP_PANELS + 1)
    np.cumsum(_mp_panel_masses(gamma), out=cdf[1:])
    mass = cdf[-1]
    if abs(mass - 1.0) > 1e-8:
        raise ArithmeticError(f"density mass {mass} deviates from 1")
    cdf = np.minimum.accumulate(np.clip(cdf[::-1], 0.0, 1.0))[::-1]
    cdf = np.maximum.accumulate(cdf)
    return t, cdf


def marchenko_pastur_cdf(x, p: EsdParams):
    """CDF of the Marchenko-Pastur law, cached quadrature grid + interp."""
    tgrid, cdfgrid = _mp_grid(p.sigma2, p.gamma)
    x = np.asarray(x, dtype=np.float64)
    out = np.interp(x, tgrid, cdfgrid, left=0.0, right=1.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class TWTable:
    """Painleve II solution q and Tracy-Widom CDFs on a uniform grid.

    grid ascends with step h; q is the Hastings-McLeod solution; f1/f2
    are filled by tw_cdf and stay None until then. meta echoes solver
    settings (step actually used, boundary point, retry count).
    """

    grid: np.ndarray
    q: np.ndarray
    h: float
    f1: Optional[np.ndarray] = None
    f2: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def cdf_values(self, beta: int) -> np.ndarray:
        vals = self.f1 if beta == 1 else self.f2 if beta == 2 else None
        if vals is None:
            raise ValueError(f"F{beta} not computed (run tw_cdf) or beta invalid")
        return vals

    def evaluate(self, s, beta: int):
        """Interpolated CDF value(s); 0 below the grid, 1 above."""
        vals = self.cdf_values(beta)
        s = np.asarray(s, dtype=np.float64)
        out = np.interp(s, self.grid, vals, left=0.0, right=1.0)
        return float(out) if out.ndim == 0 else out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# tracy-widom table: hastings-mcleod q and F1/F2\n")
        buf.write(
            f"# rk4 backward from s_max={self.grid[-1]:.6g}, "
            f"h={self.h:.6g}, retries={self.meta.get('retries', 0)}\n"
        )
        buf.write("# columns: s,q,F1,F2\n")
        f1 = self.cdf_values(1)
        f2 = self.cdf_values(2)
        for i in range(self.grid.size):
            buf.write(
                f"{self.grid[i]:.10g},{self.q[i]:.12g},"
                f"{f1[i]:.12g},{f2[i]:.12g}\n"
            )
        return buf.getvalue()


def _left_asymptote(x: float) -> float:
    # separatrix expansion q = sqrt(-x/2) (1 + x^-3/8 - (73/128) x^-6 + ...),
    # obtained by substituting the ansatz into q'' = xq + 2q^3; relative
    # truncation below 1e-7 for x <= -8
    x3 = x ** -3
    return math.sqrt(-x / 2.0) * (1.0 + 0.125 * x3 - (73.0 / 128.0) * x3 * x3)


def _numerov_polish(grid: np.ndarray, q: np.ndarray, h: float) -> np.ndarray:
    """Newton iteration on the Numerov discretization of q'' = xq + 2q^3.

    Backward marching alone loses digits toward the left edge: the
    marched trajectory drifts off the separatrix and the drift grows like
    exp((2/3) sqrt(2) |x|^{3/2}). Re-solving the same grid as a boundary
    value problem (right end pinned to the marching start value, left end
    to the separatrix expansion) is stable and restores O(h^4) accuracy
    everywhere. The marched q serves as the Newton starting point.
    """
    from scipy.linalg import solve_banded

    x = grid
    qq = q.copy()
    qq[0] = _left_asymptote(float(x[0]))
    c = h * h / 12.0
    for _ in range(40):
        f = x * qq + 2.0 * qq ** 3
        fp = x + 6.0 * qq * qq
        res = (qq[2:] - 2.0 * qq[1:-1] + qq[:-2]) - c * (
            f[2:] + 10.0 * f[1:-1] + f[:-2]
        )
        band = np.zeros((3, x.size - 2))
        band[0, 1:] = 1.0 - c * fp[2:-1]
        band[1, :] = -2.0 - 10.0 * c * fp[1:-1]
        band[2, :-1] = 1.0 - c * fp[1:-2]
        delta = solve_banded((1, 1), band, -res)
        qq[1:-1] += delta
        if np.max(np.abs(delta)) < 1e-13 * max(1.0, float(np.max(np.abs(qq)))):
            break
    else:
        raise ArithmeticError("Newton refinement of the Painleve solution stalled")
    return qq


def _rk4_backward(s_min: float, s_max: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    npts = int(round((s_max - s_min) / h)) + 1
    grid = s_max - h * np.arange(npts)
    q = np.empty(npts)
    qv, pv = airy_ai_both(float(s_max))
    q[0] = qv
    step = -h

    def rhs(x: float, y0: float, y1: float) -> tuple[float, float]:
        return y1, x * y0 + 2.0 * y0 ** 3

    x = float(s_max)
    for i in range(1, npts):
        k1 = rhs(x, qv, pv)
        k2 = rhs(x + 0.5 * step, qv + 0.5 * step * k1[0], pv + 0.5 * step * k1[1])
        k3 = rhs(x + 0.5 * step, qv + 0.5 * step * k2[0], pv + 0.5 * step * k2[1])
        k4 = rhs(x + step, qv + step * k3[0], pv + step * k3[1])
        qv += step * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]) / 6.0
        pv += step * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]) / 6.0
        x += step
        if not (math.isfinite(qv) and abs(qv) < _Q_OVERFLOW):
            raise OverflowError(f"q blew up at x={x:.4f}")
        q[i] = qv
    return grid[::-1].copy(), q[::-1].copy()


def painleve2_solve(s_min: float = -8.0, s_max: float = 8.0, h: float = 0.005) -> TWTable:
    """Hastings-McLeod q on [s_min, s_max] by backward RK4 from s_max.

    Starts from (q, q') = (Ai, Ai') at s_max, where the solution is
    pinned to machine precision; the unstable growing mode decays in the
    backward direction. Blow-up before s_min triggers up to three
    retries at half the step.
    """
    if s_max < 6:
        raise ValueError("s_max must be at least 6")
    if s_min > -8:
        raise ValueError("s_min must be at most -8")
    if h > 0.01 or h <= 0:
        raise ValueError("step must satisfy 0 < h <= 0.01")
    step = h
    for retry in range(_MAX_HALVINGS + 1):
        try:
            grid, q = _rk4_backward(s_min, s_max, step)
        except OverflowError:
            step *= 0.5
            continue
        if np.any(q <= 0.0):
            # left the separatrix (the true solution is strictly positive):
            # same sensitivity failure as blow-up, same remedy
            step *= 0.5
            continue
        q = _numerov_polish(grid, q, step)
        meta = {"s_max": s_max, "s_min": s_min, "h_requested": h,
                "h_used": step, "retries": retry}
        return TWTable(grid=grid, q=q, h=step, meta=meta)
    raise ArithmeticError(
        f"Painleve II solution blew up even at step {step * 2}"
    )


def _suffix_simpson(f: np.ndarray, h: float) -> np.ndarray:
    """S[i] = integral of f from grid[i] to grid[-1], O(h^4) at every i."""
    n = f.size - 1
    s = np.zeros(f.size)
    if n == 0:
        return s
    if n == 1:
        s[0] = 0.5 * h * (f[0] + f[1])
        return s
    for i in range(n - 2, -1, -2):
        s[i] = s[i + 2] + h * (f[i] + 4.0 * f[i + 1] + f[i + 2]) / 3.0
    # odd suffixes: first interval by a three-point rule, rest by pairs
    for i in range(n - 1, -1, -2):
        if i + 2 <= n:
            first = h * (5.0 * f[i] + 8.0 * f[i + 1] - f[i + 2]) / 12.0
        else:
            first = h * (-f[i - 1] + 8.0 * f[i] + 5.0 * f[i + 1]) / 12.0
        s[i] = s[i + 1] + first
    return s


def _airy_tails(s: float) -> tuple[float, float, float]:
    """(int Ai^2, int x Ai^2, int Ai) over [s, infinity), closed forms
    for the first two, Simpson on the decaying asymptotic for the third."""
    ai, aip = airy_ai_both(s)
    t_sq = aip * aip - s * ai * ai
    t_xsq = (s * aip * aip - s * s * ai * ai - ai * aip) / 3.0
    xs = np.linspace(s, s + 14.0, 281)
    vals, _ = airy_ai_both(xs)
    hh = xs[1] - xs[0]
    t_ai = float(hh / 3.0 * (vals[0] + vals[-1]
                             + 4.0 * vals[1:-1:2].sum() + 2.0 * vals[2:-1:2].sum()))
    return t_sq, t_xsq, t_ai


def tw_cdf(table: TWTable, beta: int) -> TWTable:
    """Fill in the Tracy-Widom CDF for beta in {1, 2} on table's grid.

    F2(s) = exp(-int_s^inf (x-s) q^2 dx) and
    F1(s) = exp(-(1/2) int_s^inf q + (x-s) q^2 dx), with the on-grid parts
    by composite Simpson and the piece beyond the grid added analytically
    from the Airy decay of q (below 1e-10 in mass at the default s_max).
    """
    if beta not in (1, 2):
        raise ValueError("beta must be 1 or 2")
    grid, q, h = table.grid, table.q, table.h
    s_max = float(grid[-1])
    q2 = q * q
    a_suf = _suffix_simpson(q2, h)
    b_suf = _suffix_simpson(grid * q2, h)
    t_sq, t_xsq, t_ai = _airy_tails(s_max)
    # J(s) = int (x-s) q^2 = [B(s) - s A(s)] on grid + analytic tail
    j = (b_suf + t_xsq) - grid * (a_suf + t_sq)
    if beta == 2:
        f = np.exp(-j)
    else:
        c_suf = _suffix_simpson(q, h)
        f = np.exp(-0.5 * ((c_suf + t_ai) + j))
    bad = np.diff(f) < -1e-12
    if np.any(bad):
        raise ArithmeticError("CDF decreased beyond rounding slack")
    f = np.maximum.accumulate(np.clip(f, 0.0, 1.0))
    if beta == 2:
        return TWTable(grid=grid, q=q, h=h, f1=table.f1, f2=f, meta=table.meta)
    return TWTable(grid=grid, q=q, h=h, f1=f, f2=table.f2, meta=table.meta)


def tw_table(s_min: float = -8.0, s_max: float = 8.0, h: float = 0.005) -> TWTable:
    """Convenience: solve Painleve II and fill both F1 and F2."""
    return tw_cdf(tw_cdf(painleve2_solve(s_min, s_max, h), 2), 1)
