"""Symmetric and Hermitian eigenvalue computation.

Two paths: eigh_full decomposes moderate matrices completely (Householder
reduction to tridiagonal form, then implicit-shift QL with Wilkinson
shifts), while top_k runs Lanczos with full reorthogonalization for the
few largest eigenvalues of large matrices. Hermitian input is handled by
the real symmetric embedding [[X, -Y], [Y, X]], whose spectrum is that of
X + iY with every eigenvalue doubled.

rescale converts raw spectra to the normalized scales the limit statements
are phrased in: division by the tail normalizer b_n or by sqrt(n), the
soft-edge affine map for Gaussian orthogonal matrices, the Wishart edge
map, and division by the squared entry count for Gram matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from ._eigen import householder_tridiag, tridiag_eigen
from .ensembles import EnsembleSpec, SymMatrix, count_independent_entries, GAUSSIAN
from .rng import Rng
from .tails import modulus_tail_function, normalizer_bn

RESCALE_MODES = ("bn", "sqrt_n", "goe_edge", "johnstone", "m2d2")

_MAX_DENSE_DIM = 4096
_MAX_SWEEPS = 50
_LANCZOS_STREAM = (1 << 61) + 0x1A2C
_MAX_RESTARTS = 3


class EigenConvergenceError(RuntimeError):
    """QL iteration or Lanczos failed to converge within its sweep budget."""


class EigenResidualError(RuntimeError):
    """Computed spectrum violates the trace or Frobenius conservation bound."""


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Eigenvalues of one matrix draw, sorted descending.

    eigenvalues are stored after any rescaling; the raw values are
    recovered as eigenvalues * normalization + center. normalization is
    the cumulative positive divisor applied and center the affine shift
    (zero for pure divisor modes).
    """

    eigenvalues: np.ndarray
    normalization: float = 1.0
    ensemble: Optional[EnsembleSpec] = None
    trial_index: int = 0
    center: float = 0.0

    def __post_init__(self) -> None:
        eig = np.asarray(self.eigenvalues, dtype=np.float64)
        object.__setattr__(self, "eigenvalues", eig)
        if eig.ndim != 1 or eig.size < 1:
            raise ValueError("eigenvalues must be a nonempty 1-d array")
        if np.any(np.diff(eig) > 0):
            raise ValueError("eigenvalues must be sorted descending")
        if not self.normalization > 0:
            raise ValueError("normalization must be positive")

    @property
    def raw_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues * self.normalization + self.center

    def csv_rows(self) -> Iterator[tuple[int, int, float, float]]:
        """Yield (trial, rank, eigenvalue, normalized_value) rows."""
        raw = self.raw_eigenvalues
        for rank, value in enumerate(self.eigenvalues, start=1):
            yield self.trial_index, rank, float(raw[rank - 1]), float(value)


def _embed_hermitian(dense: np.ndarray) -> np.ndarray:
    x = np.ascontiguousarray(dense.real)
    y = np.ascontiguousarray(dense.imag)
    return np.block([[x, -y], [y, x]])


def _as_real_symmetric(matrix) -> tuple[np.ndarray, bool]:
    """Dense real symmetric array for either input kind.

    Returns (array, doubled) where doubled marks a Hermitian embedding in
    which every eigenvalue of the source matrix appears twice.
    """
    if isinstance(matrix, SymMatrix):
        dense = matrix.to_dense()
    else:
        dense = np.asarray(matrix)
        if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
            raise ValueError("matrix must be square")
    if np.iscomplexobj(dense):
        return _embed_hermitian(dense), True
    return np.array(dense, dtype=np.float64, copy=True), False


def _check_residuals(a_scaled: np.ndarray, eig_scaled: np.ndarray) -> None:
    # Conservation in prescaled units: the QL output must reproduce the
    # trace and squared Frobenius norm of what it actually decomposed.
    tr = float(np.trace(a_scaled))
    frob = float(np.sum(a_scaled * a_scaled))
    sum1 = float(np.sum(eig_scaled))
    sum2 = float(np.sum(eig_scaled * eig_scaled))
    if abs(sum1 - tr) > 1e-8 * (1.0 + abs(tr)):
        raise EigenResidualError(
            f"trace residual {abs(sum1 - tr):.3e} exceeds bound "
            f"{1e-8 * (1.0 + abs(tr)):.3e}"
        )
    if abs(sum2 - frob) > 1e-6 * (1.0 + frob):
        raise EigenResidualError(
            f"Frobenius residual {abs(sum2 - frob):.3e} exceeds bound "
            f"{1e-6 * (1.0 + frob):.3e}"
        )


def eigh_full(
    matrix,
    ensemble: Optional[EnsembleSpec] = None,
    trial_index: int = 0,
) -> SpectrumResult:
    """All eigenvalues, descending, of a SymMatrix or dense array.

    The matrix is divided by its largest absolute entry before
    tridiagonalization so that entries spanning many orders of magnitude
    cannot overflow intermediate quantities; eigenvalues are scaled back
    afterwards. Trace and Frobenius conservation are checked on the
    prescaled system on every call.
    """
    a, doubled = _as_real_symmetric(matrix)
    dim = a.shape[0]
    if dim < 1:
        raise ValueError("matrix dimension must be at least 1")
    if dim > _MAX_DENSE_DIM:
        raise ValueError(
            f"dense path accepts dimension <= {_MAX_DENSE_DIM}; use top_k"
        )
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        eig = np.zeros(dim if not doubled else dim // 2)
        return SpectrumResult(eig, 1.0, ensemble, trial_index)
    a_scaled = a / scale
    work = a_scaled.copy()
    d, e = householder_tridiag(work)
    status = tridiag_eigen(d, e, _MAX_SWEEPS)
    if status != 0:
        raise EigenConvergenceError(
            f"QL iteration for eigenvalue index {status - 1} did not "
            f"converge within {_MAX_SWEEPS} sweeps (dimension {dim})"
        )
    _check_residuals(a_scaled, d)
    eig = np.sort(d)[::-1] * scale
    if doubled:
        eig = eig[::2]
    return SpectrumResult(np.ascontiguousarray(eig), 1.0, ensemble, trial_index)


def _tridiag_values(alphas: np.ndarray, betas: np.ndarray) -> np.ndarray:
    d = alphas.copy()
    e = np.zeros_like(d)
    e[1:] = betas
    status = tridiag_eigen(d, e, _MAX_SWEEPS)
    if status != 0:
        raise EigenConvergenceError(
            "QL iteration on the Lanczos tridiagonal matrix did not converge"
        )
    return np.sort(d)[::-1]


def _lanczos_extremes(dense: np.ndarray, k: int, krylov: int, start_seed: int) -> np.ndarray:
    """Largest Ritz values from Lanczos with full reorthogonalization.

    Works in the matrix's own arithmetic (real or complex); the recursion
    coefficients are real either way, so the tridiagonal eigenproblem
    always lands in the real QL core.
    """
    n = dense.shape[0]
    m = min(n, krylov)
    complex_path = np.iscomplexobj(dense)
    last_error = "Lanczos did not produce a Krylov space of dimension >= k"
    for attempt in range(_MAX_RESTARTS + 1):
        rng = Rng(start_seed, _LANCZOS_STREAM + attempt)
        if complex_path:
            v = rng.normal(n) + 1j * rng.normal(n)
        else:
            v = rng.normal(n)
        v = v / np.linalg.norm(v)
        basis = np.empty((m, n), dtype=dense.dtype)
        alphas = np.empty(m)
        betas = np.empty(max(m - 1, 1))
        steps = 0
        ref = 0.0
        for j in range(m):
            basis[j] = v
            w = dense @ v
            alphas[j] = float(np.real(np.vdot(v, w)))
            w = w - alphas[j] * v
            if j > 0:
                w -= betas[j - 1] * basis[j - 1]
            # two reorthogonalization passes keep the basis orthonormal to
            # roundoff, which is what suppresses ghost copies of converged
            # eigenvalues
            for _ in range(2):
                w -= basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
            steps = j + 1
            ref = max(ref, abs(alphas[j]))
            if steps == m:
                break
            beta = float(np.linalg.norm(w))
            if beta <= 1e-12 * max(ref, 1e-300):
                break
            betas[j] = beta
            ref = max(ref, beta)
            v = w / beta
        if steps >= k:
            return _tridiag_values(alphas[:steps], betas[: steps - 1])[:k]
        # invariant subspace smaller than k: try a fresh start vector
        last_error = (
            f"Lanczos breakdown after {steps} steps with k={k}; "
            f"restart {attempt + 1} of {_MAX_RESTARTS}"
        )
    raise EigenConvergenceError(last_error)


def top_k(matrix, k: int, start_seed: int = 0) -> np.ndarray:
    """k largest eigenvalues, descending.

    Lanczos with full reorthogonalization on a Krylov space of dimension
    min(dim, max(4k, 60)); the start vector is drawn deterministically
    from start_seed so whole pipelines replay bit for bit. Breakdown
    (vanishing residual before k steps) triggers up to three restarts
    with fresh start vectors. Hermitian input iterates in complex
    arithmetic directly: the doubled-dimension embedding would turn every
    eigenvalue into a multiplicity-2 pair, which single-vector Lanczos
    cannot resolve reliably. Eigenvalues of multiplicity greater than one
    are reported once per Krylov run; the ensembles in scope have almost
    surely simple spectra.
    """
    if isinstance(matrix, SymMatrix):
        dense = matrix.to_dense()
    else:
        dense = np.asarray(matrix)
        if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
            raise ValueError("matrix must be square")
    dim = dense.shape[0]
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError("k must be a positive integer")
    if 4 * k > dim:
        raise ValueError(f"k must satisfy 1 <= k <= dim/4 (dim={dim}, k={k})")
    return _lanczos_extremes(dense, k, min(dim, max(4 * k, 60)), start_seed)


def bn_divisor(spec: EnsembleSpec) -> float:
    """Entry-tail normalizer b_n for the ensemble's independent entry
    count; the scale at which the largest eigenvalues have Poisson
    statistics."""
    entry = spec.entry
    if entry == GAUSSIAN or not hasattr(entry, "alpha"):
        raise ValueError("bn rescaling requires a heavy-tailed entry law")
    n_entries = count_independent_entries(spec)
    if spec.is_hermitian:
        # complex entries: the normalizer is driven by the modulus law
        return normalizer_bn(
            entry, n_entries, tail=lambda t: modulus_tail_function(entry, t)
        )
    return normalizer_bn(entry, n_entries)


def rescale(spec: EnsembleSpec, raw: SpectrumResult, mode: str) -> SpectrumResult:
    """Map a raw spectrum onto the scale its limit law is stated at.

    bn divides by the entry-tail normalizer for the ensemble's count of
    independent entries; sqrt_n divides by sqrt(n); goe_edge applies
    x -> (x - 2 sqrt(n)) * n^(1/6); johnstone applies the Wishart edge
    map x -> (x - mu) / sigma; m2d2 divides by the squared stored-entry
    count of the rectangular factor ((m n)^2 dense, (n d)^2 masked).
    """
    if mode not in RESCALE_MODES:
        raise ValueError(f"unknown rescale mode {mode!r}")
    symmetric_modes = ("bn", "sqrt_n", "goe_edge")
    if spec.is_symmetric and mode not in symmetric_modes:
        raise ValueError(f"mode {mode!r} requires a rectangular-kind ensemble")
    if not spec.is_symmetric and mode in symmetric_modes:
        raise ValueError(f"mode {mode!r} requires a symmetric-kind ensemble")
    center = 0.0
    if mode == "bn":
        divisor = bn_divisor(spec)
    elif mode == "sqrt_n":
        divisor = math.sqrt(spec.n)
    elif mode == "goe_edge":
        from .reference_laws import goe_rescale

        center, divisor = goe_rescale(spec.n)
    elif mode == "johnstone":
        from .reference_laws import johnstone_rescale

        center, divisor = johnstone_rescale(spec.m, spec.n)
    else:
        d_eff = spec.n if spec.d is None else spec.d
        rows = spec.m if spec.d is None else spec.n
        divisor = float(rows * d_eff) ** 2
    eig = (raw.eigenvalues - center) / divisor
    return SpectrumResult(
        eigenvalues=np.ascontiguousarray(eig),
        normalization=raw.normalization * divisor,
        ensemble=spec,
        trial_index=raw.trial_index,
        center=center,
    )
