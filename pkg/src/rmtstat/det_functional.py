"""Monte Carlo verification of the determinant-functional limit.

For Gram matrices of heavy-tailed rectangular ensembles, the expectation
of det(1 + z A^t A / scale)^(-1/2) converges to exp(-2 sqrt(z) / pi) on
Re z > 0. This module estimates the left side by simulation (eigenvalue
product form), evaluates the right side both in closed form and through
the Poisson-process integral it comes from, and checks the Gaussian
integral identity det(B)^(-1/2) = pi^(-N/2) int exp(-x B x^t) dx that
links the two.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .ensembles import EnsembleSpec, SymMatrix, build, gram
from .rng import Rng
from .spectra import SpectrumResult, eigh_full
from .tails import TailSpec

_MIN_TRIALS = 100
_CLIP_REL = 1e-10
_QUAD_TOL = 1e-8
_MAX_CHECK_DIM = 4


@dataclass(frozen=True)
class ComplexZ:
    """Point of the right half-plane; square roots use the principal
    branch, so sqrt(1) = 1."""

    re: float
    im: float = 0.0

    def __post_init__(self) -> None:
        if not self.re > 0.0:
            raise ValueError("Re z must be positive")

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


def _as_z(z) -> complex:
    if isinstance(z, ComplexZ):
        return z.value
    zz = complex(z)
    if not zz.real > 0.0:
        raise ValueError("Re z must be positive")
    return zz


def limit_target(z) -> complex:
    """exp(-2 sqrt(z) / pi) with the principal square root."""
    return cmath.exp(-2.0 * cmath.sqrt(_as_z(z)) / math.pi)


def det_stat(spectrum: SpectrumResult, z, scale: float) -> complex:
    """prod_i (1 + z lambda_i / scale)^(-1/2) over the Gram spectrum.

    Eigenvalues must be nonnegative; roundoff negatives above
    -1e-10 * max(1, lambda_max) are clipped to zero, anything lower is an
    error. With lambda >= 0 and Re z > 0 every factor stays in the right
    half-plane, so per-factor principal square roots never cross the cut
    and the product has modulus at most 1 for real positive z.
    """
    zz = _as_z(z)
    if not scale > 0.0:
        raise ValueError("scale must be positive")
    lam = np.array(spectrum.raw_eigenvalues, dtype=np.float64)
    if lam.size:
        floor = -_CLIP_REL * max(1.0, float(lam.max()))
        if np.any(lam < floor):
            raise ValueError(
                f"negative eigenvalue {lam.min()} below the clip threshold {floor}"
            )
        lam = np.clip(lam, 0.0, None)
    factors = 1.0 + zz * lam / scale
    return complex(np.exp(-0.5 * np.sum(np.log(factors))))


@dataclass(frozen=True, eq=False)
class McEstimate:
    """Sample mean of the determinant statistic with its target."""

    mean: complex
    stderr: float
    trials: int
    target: complex
    z: ComplexZ

    @property
    def abs_error(self) -> float:
        return abs(self.mean - self.target)

    def to_json(self) -> str:
        return json.dumps(
            {
                "z_re": self.z.re,
                "z_im": self.z.im,
                "mean_re": self.mean.real,
                "mean_im": self.mean.imag,
                "stderr": self.stderr,
                "trials": self.trials,
                "target_re": self.target.real,
                "target_im": self.target.imag,
                "abs_error": self.abs_error,
            },
            indent=2,
        )


def _gram_scale(spec: EnsembleSpec) -> float:
    # dense: (m n)^2; sparse: (n d)^2 with d nonzero rows per column
    if spec.d is None:
        return float(spec.m * spec.n) ** 2
    return float(spec.n * spec.d) ** 2


def growth_condition_ok(m: int, n: int) -> bool:
    """Heuristic finite-n stand-in for 'ln m grows slower than any power
    of n': flags configurations with ln m > n^0.2."""
    return math.log(m) <= float(n) ** 0.2


def mc_expectation(spec: EnsembleSpec, z, trials: int) -> McEstimate:
    """Average det_stat over independent draws of the ensemble.

    Restricted to sample-covariance kinds with cauchy entries, the only
    law the limit target is stated for. Trial t draws from substream
    (spec.seed, t), so estimates replay bit for bit and are independent
    of scheduling; every trial value lies in the closed unit disk.
    """
    if spec.kind not in ("sample_cov", "sparse_sample_cov"):
        raise ValueError("mc_expectation requires a sample-covariance kind")
    if not isinstance(spec.entry, TailSpec) or spec.entry.family != "cauchy":
        raise ValueError("the limit target holds for cauchy entries only")
    if not (isinstance(trials, (int, np.integer)) and trials >= _MIN_TRIALS):
        raise ValueError(f"need at least {_MIN_TRIALS} trials")
    zz = ComplexZ(_as_z(z).real, _as_z(z).imag)
    scale = _gram_scale(spec)
    values = np.empty(trials, dtype=np.complex128)
    for t in range(trials):
        a = build(spec, Rng(spec.seed, t))
        g = gram(a)
        spectrum = eigh_full(g, ensemble=spec, trial_index=t)
        v = det_stat(spectrum, zz, scale)
        if abs(v) > 1.0 + 1e-12:
            raise ArithmeticError(f"trial value {v} left the unit disk")
        values[t] = v
    mean = complex(np.sum(values) / trials)
    centered = values - mean
    var = float(np.sum(centered.real ** 2 + centered.imag ** 2)) / max(trials - 1, 1)
    return McEstimate(
        mean=mean,
        stderr=math.sqrt(var / trials),
        trials=int(trials),
        target=limit_target(zz),
        z=zz,
    )


def poisson_side_quadrature(z) -> complex:
    """int_0^inf ((1+zx)^(-1/2) - 1) / (pi x^(3/2)) dx, which must equal
    -2 sqrt(z) / pi.

    The substitution x = u^2 removes the origin singularity: the
    integrand becomes (2/pi) ((1+z u^2)^(-1/2) - 1) / u^2, finite at 0.
    """
    zz = _as_z(z)

    def integrand(u: float) -> complex:
        if u == 0.0:
            return -zz / 2.0
        return ((1.0 + zz * u * u) ** -0.5 - 1.0) / (u * u)

    re, re_err = quad(
        lambda u: integrand(u).real, 0.0, np.inf,
        epsabs=1e-12, epsrel=1e-12, limit=200,
    )
    im, im_err = quad(
        lambda u: integrand(u).imag, 0.0, np.inf,
        epsabs=1e-12, epsrel=1e-12, limit=200,
    )
    if re_err + im_err > _QUAD_TOL:
        raise ArithmeticError(
            f"quadrature error estimate {re_err + im_err} above {_QUAD_TOL}"
        )
    return (2.0 / math.pi) * complex(re, im)


def product_expectation_poisson(z) -> complex:
    """Poisson-process side E prod (1 + z x_i)^(-1/2) for the intensity
    (pi x^(3/2))^(-1): equals exp(-2 sqrt(z) / pi)."""
    return cmath.exp(poisson_side_quadrature(z))


def gaussian_integral_check(b, n_quad: int = 80) -> tuple[float, float]:
    """(det(B)^(-1/2), pi^(-N/2) int exp(-x B x^t) dx) for dim <= 4.

    The integral uses tensor-product Gauss-Hermite quadrature. B may be
    a SymMatrix or a symmetric square array and must be positive
    definite: the quadratic form only sees the symmetric part of B, so
    the det(B) side of the identity needs B itself symmetric.
    """
    dense = b.to_dense() if isinstance(b, SymMatrix) else np.asarray(b, dtype=np.float64)
    if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
        raise ValueError("B must be square")
    if not np.array_equal(dense, dense.T):
        raise ValueError("B must be symmetric")
    dim = dense.shape[0]
    if dim > _MAX_CHECK_DIM:
        raise ValueError(f"verification harness supports dim <= {_MAX_CHECK_DIM}")
    if not (isinstance(n_quad, (int, np.integer)) and n_quad >= 2):
        raise ValueError("n_quad must be an integer >= 2")
    if np.any(np.linalg.eigvalsh(dense) <= 0.0):
        raise ValueError("B must be positive definite")
    lhs = float(np.linalg.det(dense)) ** -0.5

    nodes, weights = np.polynomial.hermite.hermgauss(n_quad)
    grids = np.meshgrid(*([nodes] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wgrids = np.meshgrid(*([weights] * dim), indexing="ij")
    wts = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    # Gauss-Hermite absorbs exp(-|x|^2); the residual quadratic form is
    # x (B - I) x^t
    residual = np.einsum("ij,jk,ik->i", pts, dense - np.eye(dim), pts)
    rhs = float(np.sum(wts * np.exp(-residual))) / math.pi ** (dim / 2.0)
    return lhs, rhs
