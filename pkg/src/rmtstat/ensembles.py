"""Random matrix ensemble constructors.

One builder call produces one sampled matrix. Symmetric matrices are kept
in packed lower-triangle storage (the independent entries), so symmetry is
exact by construction; rectangular matrices are dense or column-masked
sparse. Builders are pure functions of (spec, rng) and safe to run in
parallel with per-trial Rng substreams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .rng import Rng, STRUCTURE_STREAM
from .tails import TailSpec, sample_array

__all__ = [
    "GAUSSIAN",
    "KINDS",
    "SYMMETRIC_KINDS",
    "RECT_KINDS",
    "EnsembleSpec",
    "SymMatrix",
    "RectMatrix",
    "build_wigner",
    "build_band",
    "build_rect",
    "build",
    "gram",
    "count_independent_entries",
    "export_text",
]

GAUSSIAN = "gaussian"

SYMMETRIC_KINDS = (
    "wigner_real",
    "wigner_hermitian",
    "band_aperiodic",
    "band_periodic",
    "goe",
    "gue",
)
RECT_KINDS = ("sample_cov", "sparse_sample_cov", "gaussian_rect")
KINDS = SYMMETRIC_KINDS + RECT_KINDS

_GAUSSIAN_ONLY = ("goe", "gue", "gaussian_rect")


@dataclass(frozen=True)
class EnsembleSpec:
    """Full recipe for one random matrix draw.

    Parameters
    ----------
    kind : str
        One of KINDS.
    n : int
        Matrix dimension (column count for rectangular kinds).
    m : int, optional
        Row count, rectangular kinds only; m >= n.
    d : int, optional
        Bandwidth (band kinds, 0 <= d <= n-1) or column degree
        (sparse_sample_cov, 1 <= d <= m).
    entry : TailSpec or "gaussian"
        Marginal law of the independent entries.
    seed : int
        64-bit experiment seed; trial t draws from Rng(seed, t).
    """

    kind: str
    n: int
    m: int | None = None
    d: int | None = None
    entry: TailSpec | str = GAUSSIAN
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not (isinstance(self.entry, TailSpec) or self.entry == GAUSSIAN):
            raise ValueError("entry must be a TailSpec or the 'gaussian' marker")
        if self.kind in _GAUSSIAN_ONLY and self.entry != GAUSSIAN:
            raise ValueError(f"kind {self.kind} uses gaussian entries only")
        if self.kind in ("band_aperiodic", "band_periodic"):
            if self.d is None or not 0 <= self.d <= self.n - 1:
                raise ValueError("band kinds require 0 <= d <= n-1")
        if self.kind in RECT_KINDS:
            if self.m is None or self.m < self.n:
                raise ValueError("rectangular kinds require m >= n")
        if self.kind == "sparse_sample_cov":
            if self.d is None or self.d < 1:
                raise ValueError("sparse kind requires a column degree d >= 1")
            if self.d > self.m:
                raise ValueError("column degree d must not exceed row count m")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def is_symmetric(self) -> bool:
        return self.kind in SYMMETRIC_KINDS

    @property
    def is_hermitian(self) -> bool:
        return self.kind in ("wigner_hermitian", "gue")


def _packed_size(n: int) -> int:
    return n * (n + 1) // 2


def _diag_packed_indices(n: int) -> np.ndarray:
    i = np.arange(n)
    return i * (i + 3) // 2


class SymMatrix:
    """Real symmetric or Hermitian matrix in packed lower-triangle storage.

    Only the independent entries (i >= j) are stored, so a_{jk} = conj(a_{kj})
    holds exactly and the diagonal is exactly real. ``independent_entry_count``
    records how many stored slots were actually drawn from the entry law
    (in-band slots for band kinds; all slots otherwise).
    """

    __slots__ = ("dim", "packed", "hermitian", "independent_entry_count")

    def __init__(self, dim, packed, hermitian=False, independent_entry_count=None):
        packed = np.asarray(packed)
        if packed.shape != (_packed_size(dim),):
            raise ValueError("packed storage must have length dim*(dim+1)/2")
        if hermitian:
            packed = packed.astype(np.complex128, copy=False)
            diag = _diag_packed_indices(dim)
            if np.any(packed[diag].imag != 0.0):
                raise ValueError("Hermitian diagonal must be real")
        else:
            packed = packed.astype(np.float64, copy=False)
        self.dim = int(dim)
        self.packed = packed
        self.hermitian = bool(hermitian)
        self.independent_entry_count = (
            len(packed) if independent_entry_count is None else int(independent_entry_count)
        )

    def to_dense(self) -> np.ndarray:
        """Dense n x n array; symmetry is exact because both triangles come
        from the same stored values."""
        n = self.dim
        dtype = np.complex128 if self.hermitian else np.float64
        dense = np.zeros((n, n), dtype=dtype)
        i, j = np.tril_indices(n)
        dense[i, j] = self.packed
        if self.hermitian:
            dense[j, i] = np.conj(self.packed)
        else:
            dense[j, i] = self.packed
        return dense

    def diagonal(self) -> np.ndarray:
        d = self.packed[_diag_packed_indices(self.dim)]
        return d.real if self.hermitian else d

    def max_abs_entry(self) -> float:
        return float(np.max(np.abs(self.packed))) if len(self.packed) else 0.0

    def trace(self) -> float:
        return float(np.sum(self.diagonal()))

    def frobenius_sq(self) -> float:
        """Sum of |a_jk|^2 over the full square matrix."""
        a2 = np.abs(self.packed) ** 2
        diag = np.abs(self.diagonal()) ** 2
        return float(2.0 * np.sum(a2) - np.sum(diag))

    def row_abs_view(self) -> np.ndarray:
        """Dense array of |a_jk| (full square), for row diagnostics."""
        n = self.dim
        dense = np.zeros((n, n), dtype=np.float64)
        i, j = np.tril_indices(n)
        a = np.abs(self.packed)
        dense[i, j] = a
        dense[j, i] = a
        return dense


class RectMatrix:
    """Rectangular m x n real matrix, dense or column-masked sparse.

    Sparse storage keeps, for each column, the row indices of its d nonzero
    positions and the corresponding values; exactly d*n entries are stored.
    """

    __slots__ = ("m", "n", "values", "mask_rows")

    def __init__(self, m, n, values, mask_rows=None):
        self.m = int(m)
        self.n = int(n)
        values = np.asarray(values, dtype=np.float64)
        if mask_rows is None:
            if values.shape != (self.m, self.n):
                raise ValueError("dense values must have shape (m, n)")
        else:
            mask_rows = np.asarray(mask_rows, dtype=np.int64)
            if mask_rows.shape != values.shape or mask_rows.ndim != 2:
                raise ValueError("mask and values must share shape (d, n)")
            if mask_rows.shape[1] != self.n:
                raise ValueError("mask must cover every column")
        self.values = values
        self.mask_rows = mask_rows

    @property
    def is_sparse(self) -> bool:
        return self.mask_rows is not None

    @property
    def stored_entry_count(self) -> int:
        return int(self.values.size)

    def to_dense(self) -> np.ndarray:
        if not self.is_sparse:
            return self.values
        dense = np.zeros((self.m, self.n), dtype=np.float64)
        dense[self.mask_rows, np.arange(self.n)[None, :]] = self.values
        return dense

    def frobenius_sq(self) -> float:
        return float(np.sum(self.values**2))


def count_independent_entries(spec: EnsembleSpec) -> int:
    """Exact count N_n of independent entries of a symmetric draw."""
    if not spec.is_symmetric:
        raise ValueError("independent entry count is defined for symmetric kinds")
    n = spec.n
    if spec.kind in ("wigner_real", "wigner_hermitian", "goe", "gue"):
        return n * (n + 1) // 2
    d = spec.d
    if spec.kind == "band_periodic":
        # n(d+1) while the circular band fits; once 2d+1 >= n the band
        # wraps onto itself and every slot is in-band.
        return min(n * (d + 1), n * (n + 1) // 2)
    return n * (d + 1) - d * (d + 1) // 2


def _draw_real(spec: EnsembleSpec, rng: Rng, count: int) -> np.ndarray:
    if spec.entry == GAUSSIAN:
        return rng.normal(count)
    return sample_array(spec.entry, rng, count)


def build_wigner(spec: EnsembleSpec, rng: Rng) -> SymMatrix:
    """Full symmetric/Hermitian draw: every packed slot iid from the entry law.

    The diagonal is drawn from the same stream as the off-diagonal slots and
    is independent of them. goe uses N(0, 1 + delta_ij); gue uses
    Re, Im ~ N(0, 1/2) off the diagonal and real N(0, 1) on it.
    """
    if spec.kind not in ("wigner_real", "wigner_hermitian", "goe", "gue"):
        raise ValueError(f"build_wigner does not accept kind {spec.kind}")
    n = spec.n
    size = _packed_size(n)
    diag = _diag_packed_indices(n)
    if spec.kind == "goe":
        packed = rng.normal(size)
        packed[diag] *= math.sqrt(2.0)
        return SymMatrix(n, packed)
    if spec.kind == "gue" or (spec.kind == "wigner_hermitian" and spec.entry == GAUSSIAN):
        re = rng.normal(size)
        im = rng.normal(size)
        packed = (re + 1j * im) / math.sqrt(2.0)
        packed[diag] = re[diag]
        return SymMatrix(n, packed, hermitian=True)
    if spec.kind == "wigner_hermitian":
        re = sample_array(spec.entry, rng, size)
        im = sample_array(spec.entry, rng, size)
        packed = (re + 1j * im) / math.sqrt(2.0)
        packed[diag] = re[diag]
        return SymMatrix(n, packed, hermitian=True)
    return SymMatrix(n, _draw_real(spec, rng, size))


def _band_mask(n: int, d: int, periodic: bool) -> np.ndarray:
    i, j = np.tril_indices(n)
    dist = i - j
    if periodic:
        dist = np.minimum(dist, n - dist)
    return dist <= d


def build_band(spec: EnsembleSpec, rng: Rng) -> SymMatrix:
    """Band draw: a_ij = 0 outside the band, iid entries inside.

    Aperiodic bands use |i-j| <= d; periodic bands use the circular distance
    min(|i-j|, n-|i-j|) <= d, which populates the corners.
    """
    if spec.kind not in ("band_aperiodic", "band_periodic"):
        raise ValueError(f"build_band does not accept kind {spec.kind}")
    n = spec.n
    mask = _band_mask(n, spec.d, periodic=spec.kind == "band_periodic")
    count = int(mask.sum())
    expected = count_independent_entries(spec)
    if count != expected:  # pragma: no cover - structural consistency guard
        raise AssertionError(f"band mask holds {count} slots, expected {expected}")
    packed = np.zeros(_packed_size(n), dtype=np.float64)
    packed[mask] = _draw_real(spec, rng, count)
    return SymMatrix(n, packed, independent_entry_count=count)


@lru_cache(maxsize=32)
def _sparse_mask(seed: int, m: int, n: int, d: int) -> np.ndarray:
    """Frozen 0-1 mask: d distinct rows per column, fixed per (seed, shape).

    Drawn from a reserved substream of the experiment seed so that it never
    varies across trials and never collides with trial streams.
    """
    rng = Rng(seed, STRUCTURE_STREAM)
    rows = np.empty((d, n), dtype=np.int64)
    for col in range(n):
        rows[:, col] = np.sort(rng.choice_without_replacement(m, d))
    rows.setflags(write=False)
    return rows


def build_rect(spec: EnsembleSpec, rng: Rng) -> RectMatrix:
    """Rectangular draw: dense iid fill, or values placed on the frozen mask."""
    if spec.kind not in RECT_KINDS:
        raise ValueError(f"build_rect does not accept kind {spec.kind}")
    m, n = spec.m, spec.n
    if spec.kind == "sparse_sample_cov":
        rows = _sparse_mask(spec.seed, m, n, spec.d)
        values = _draw_real(spec, rng, spec.d * n).reshape(spec.d, n)
        return RectMatrix(m, n, values, mask_rows=rows)
    values = _draw_real(spec, rng, m * n).reshape(m, n)
    return RectMatrix(m, n, values)


def build(spec: EnsembleSpec, rng: Rng):
    """Dispatch to the matching builder for spec.kind."""
    if spec.kind in ("wigner_real", "wigner_hermitian", "goe", "gue"):
        return build_wigner(spec, rng)
    if spec.kind in ("band_aperiodic", "band_periodic"):
        return build_band(spec, rng)
    return build_rect(spec, rng)


def gram(A: RectMatrix) -> SymMatrix:
    """A^t A as an exactly symmetric packed matrix (PSD up to roundoff).

    Only the lower triangle of the product is stored, so the result cannot
    carry the tiny asymmetry a floating-point full product would.
    """
    dense = A.to_dense()
    full = dense.T @ dense
    i, j = np.tril_indices(A.n)
    return SymMatrix(A.n, full[i, j])


def export_text(matrix, path) -> None:
    """Write stored entries as text, one per line, 17 significant digits.

    Rows are "i j value" (1-based indices) for real matrices and
    "i j re im" for Hermitian ones; only independent/stored entries are
    emitted, in storage order.
    """
    with open(path, "w", encoding="ascii") as fh:
        if isinstance(matrix, SymMatrix):
            i, j = np.tril_indices(matrix.dim)
            if matrix.hermitian:
                for a, b, v in zip(i, j, matrix.packed):
                    fh.write(f"{a + 1} {b + 1} {v.real:.17g} {v.imag:.17g}\n")
            else:
                for a, b, v in zip(i, j, matrix.packed):
                    fh.write(f"{a + 1} {b + 1} {v:.17g}\n")
        elif isinstance(matrix, RectMatrix):
            if matrix.is_sparse:
                cols = np.broadcast_to(np.arange(matrix.n), matrix.values.shape)
                for a, b, v in zip(
                    matrix.mask_rows.ravel(), cols.ravel(), matrix.values.ravel()
                ):
                    fh.write(f"{a + 1} {b + 1} {v:.17g}\n")
            else:
                for a in range(matrix.m):
                    for b in range(matrix.n):
                        fh.write(f"{a + 1} {b + 1} {matrix.values[a, b]:.17g}\n")
        else:
            raise TypeError("export_text expects a SymMatrix or RectMatrix")
