"""Point-process statistics of rescaled extreme eigenvalues.

Per-trial spectra become occupation counts over a partition of the
positive half-line; the counts are tested against the limiting
inhomogeneous Poisson law (intensity alpha/x^(1+alpha)) by per-interval
chi-square, pairwise count correlations, and a KS/DKW check of the
largest eigenvalue against its limiting marginal. Also houses the
order-statistics coupling and row-dominance diagnostics used to probe
why the limit holds: extremes of the spectrum track extremes of the
entries.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import chi2 as chi2_dist
from scipy.stats import poisson as poisson_dist

from .ensembles import SymMatrix
from .spectra import SpectrumResult

_MIN_TRIALS = 50
_MIN_KS_SAMPLES = 20
_MIN_EXPECTED = 5.0


def intensity_measure(alpha: float, interval: tuple[float, float]) -> float:
    """Mean count mu = x^(-alpha) - y^(-alpha) of the limiting process
    on (x, y); y may be +inf."""
    if not 0.0 < alpha:
        raise ValueError("alpha must be positive")
    x, y = interval
    if not (0.0 < x < y):
        raise ValueError("interval must satisfy 0 < x < y")
    tail = 0.0 if math.isinf(y) else float(y) ** -alpha
    return float(x) ** -alpha - tail


def frechet_cdf_kth(x: float, k: int, alpha: float) -> float:
    """P(k-th largest <= x) = exp(-x^(-alpha)) sum_{l<k} x^(-l alpha)/l!."""
    if not x > 0.0:
        raise ValueError("x must be positive")
    if not (isinstance(k, (int, np.integer)) and k >= 1):
        raise ValueError("k must be a positive integer")
    if not alpha > 0.0:
        raise ValueError("alpha must be positive")
    t = float(x) ** -alpha
    term = 1.0
    total = 1.0
    for l in range(1, k):
        term *= t / l
        total += term
    return min(1.0, math.exp(-t) * total)


@dataclass(frozen=True)
class IntervalPartition:
    """Disjoint ordered intervals (x_j, y_j) on the positive half-line;
    the last right endpoint may be +inf."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        ivs = tuple((float(x), float(y)) for x, y in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        if not ivs:
            raise ValueError("partition needs at least one interval")
        prev_y = 0.0
        for x, y in ivs:
            if not x > 0.0:
                raise ValueError("left endpoints must be strictly positive")
            if not y > x:
                raise ValueError("intervals must satisfy x < y")
            if x < prev_y:
                raise ValueError("intervals must be disjoint and ordered")
            prev_y = y

    @property
    def k(self) -> int:
        return len(self.intervals)

    def count_vector(self, values: np.ndarray) -> np.ndarray:
        """Occupation counts of one trial's normalized eigenvalues."""
        v = np.asarray(values, dtype=np.float64)
        out = np.empty(self.k, dtype=np.int64)
        for j, (x, y) in enumerate(self.intervals):
            inside = v > x if math.isinf(y) else (v > x) & (v <= y)
            out[j] = int(np.count_nonzero(inside))
        return out

    def labels(self) -> tuple[str, ...]:
        def fmt(v: float) -> str:
            return "inf" if math.isinf(v) else f"{v:g}"

        return tuple(f"({fmt(x)},{fmt(y)})" for x, y in self.intervals)


@dataclass(frozen=True, eq=False)
class CountsSample:
    """Occupation counts per trial (M rows, one column per interval),
    plus the per-trial largest normalized eigenvalue when available."""

    counts: np.ndarray
    lambda1: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        c = np.asarray(self.counts)
        if c.ndim != 2:
            raise ValueError("counts must be a 2-d array (trials x intervals)")
        if not np.issubdtype(c.dtype, np.integer):
            raise ValueError("counts must be integers")
        if np.any(c < 0):
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "counts", c.astype(np.int64))
        if self.lambda1 is not None:
            lam = np.asarray(self.lambda1, dtype=np.float64)
            if lam.shape != (c.shape[0],):
                raise ValueError("lambda1 must hold one value per trial")
            object.__setattr__(self, "lambda1", lam)

    @property
    def trials(self) -> int:
        return int(self.counts.shape[0])

    @classmethod
    def from_spectra(
        cls, spectra: Sequence[SpectrumResult], partition: IntervalPartition
    ) -> "CountsSample":
        """Merge per-trial spectra, order-insensitively, by trial index."""
        ordered = sorted(spectra, key=lambda s: s.trial_index)
        counts = np.stack(
            [partition.count_vector(s.eigenvalues) for s in ordered]
        )
        lam = np.array([float(s.eigenvalues[0]) for s in ordered])
        return cls(counts=counts, lambda1=lam)


def ks_statistic(samples, cdf: Callable[[float], float]) -> tuple[float, float]:
    """Sup-norm distance D between the empirical CDF and the model, and
    the Dvoretzky-Kiefer-Wolfowitz bound 2 exp(-2 M D^2)."""
    arr = np.sort(np.asarray(samples, dtype=np.float64))
    m = arr.size
    if m < _MIN_KS_SAMPLES:
        raise ValueError(f"need at least {_MIN_KS_SAMPLES} samples")
    f = np.array([float(cdf(float(x))) for x in arr])
    steps = np.arange(1, m + 1) / m
    d = max(float(np.max(steps - f)), float(np.max(f - (steps - 1.0 / m))), 0.0)
    return d, 2.0 * math.exp(-2.0 * m * d * d)


@dataclass(frozen=True, eq=False)
class GofReport:
    """Pure data: every verdict is recomputable from the stored fields."""

    trials: int
    tail_index: float
    significance: float
    intervals: tuple[tuple[float, float], ...]
    mu: tuple[float, ...]
    empirical_mean: tuple[float, ...]
    empirical_var: tuple[float, ...]
    chi_square: tuple[dict, ...]
    marginal_pass: tuple[bool, ...]
    pairwise: tuple[dict, ...]
    corr_threshold: float
    independence_pass: bool
    ks_lambda1: Optional[dict]
    ks_pass: Optional[bool]
    histograms: tuple[tuple[tuple[int, float, float], ...], ...]

    @property
    def passed(self) -> bool:
        ok = all(self.marginal_pass) and self.independence_pass
        if self.ks_pass is not None:
            ok = ok and self.ks_pass
        return ok

    def to_json(self) -> str:
        def clean(v):
            if isinstance(v, float) and math.isinf(v):
                return "inf"
            return v

        payload = {
            "trials": self.trials,
            "tail_index": self.tail_index,
            "significance": self.significance,
            "intervals": [[clean(x), clean(y)] for x, y in self.intervals],
            "mu": list(self.mu),
            "empirical_mean": list(self.empirical_mean),
            "empirical_var": list(self.empirical_var),
            "chi_square": [dict(c) for c in self.chi_square],
            "marginal_pass": list(self.marginal_pass),
            "pairwise": [dict(p) for p in self.pairwise],
            "corr_threshold": self.corr_threshold,
            "independence_pass": self.independence_pass,
            "ks_lambda1": self.ks_lambda1,
            "ks_pass": self.ks_pass,
            "passed": self.passed,
        }
        return json.dumps(payload, indent=2)

    def histogram_csv(self) -> str:
        buf = io.StringIO()
        buf.write("interval,count_value,frequency,poisson_pmf\n")
        labels = IntervalPartition(self.intervals).labels()
        for label, rows in zip(labels, self.histograms):
            for value, freq, pmf in rows:
                # interval labels contain commas, so the field is quoted
                buf.write(f'"{label}",{value},{freq:.10g},{pmf:.10g}\n')
        return buf.getvalue()


def _merged_cells(observed: np.ndarray, mu: float, trials: int):
    """Histogram cells {0, 1, 2, >=3} with expected counts under
    Poisson(mu), adjacent-merged until every expected count is at least
    5 (tail first, then head)."""
    obs = [
        int(np.count_nonzero(observed == 0)),
        int(np.count_nonzero(observed == 1)),
        int(np.count_nonzero(observed == 2)),
        int(np.count_nonzero(observed >= 3)),
    ]
    exp = [
        trials * float(poisson_dist.pmf(0, mu)),
        trials * float(poisson_dist.pmf(1, mu)),
        trials * float(poisson_dist.pmf(2, mu)),
        trials * float(poisson_dist.sf(2, mu)),
    ]
    labels = ["0", "1", "2", ">=3"]
    while len(obs) > 1 and exp[-1] < _MIN_EXPECTED:
        obs[-2] += obs[-1]
        exp[-2] += exp[-1]
        obs.pop()
        exp.pop()
        labels.pop()
        labels[-1] = ">=" + labels[-1].lstrip(">=")
    while len(obs) > 1 and exp[0] < _MIN_EXPECTED:
        obs[1] += obs[0]
        exp[1] += exp[0]
        obs.pop(0)
        exp.pop(0)
        labels.pop(0)
        if not labels[0].startswith(">="):
            labels[0] = "<=" + labels[0].lstrip("<=")
    if len(obs) < 2 or min(exp) < _MIN_EXPECTED:
        raise ValueError(
            "expected cell counts below 5 even after merging; add trials"
        )
    return labels, obs, exp


def joint_count_test(
    samples: CountsSample,
    partition: IntervalPartition,
    alpha: float,
    significance: float = 0.01,
) -> GofReport:
    """Test occupation counts against independent Poisson(mu_j) marginals.

    Per interval: chi-square over the merged cells at the Bonferroni
    level significance/k. Independence: pairwise Pearson correlations
    must stay below 4/sqrt(M). When the sample carries per-trial largest
    eigenvalues, their empirical CDF is compared with the limiting
    marginal and judged by the DKW bound at the same significance.
    """
    m = samples.trials
    if m < _MIN_TRIALS:
        raise ValueError(f"need at least {_MIN_TRIALS} trials")
    if samples.counts.shape[1] != partition.k:
        raise ValueError("counts width does not match the partition")
    mu = [intensity_measure(alpha, iv) for iv in partition.intervals]

    chi_rows = []
    marginal = []
    histograms = []
    bonferroni = significance / partition.k
    for j in range(partition.k):
        col = samples.counts[:, j]
        labels, obs, exp = _merged_cells(col, mu[j], m)
        stat = float(sum((o - e) ** 2 / e for o, e in zip(obs, exp)))
        dof = len(obs) - 1
        pvalue = float(chi2_dist.sf(stat, dof))
        chi_rows.append(
            {
                "stat": stat,
                "dof": dof,
                "pvalue": pvalue,
                "cells": [
                    {"label": lab, "observed": o, "expected": e}
                    for lab, o, e in zip(labels, obs, exp)
                ],
            }
        )
        marginal.append(bool(pvalue >= bonferroni))
        top = max(3, int(col.max()))
        histograms.append(
            tuple(
                (
                    v,
                    float(np.count_nonzero(col == v)) / m,
                    float(poisson_dist.pmf(v, mu[j])),
                )
                for v in range(top + 1)
            )
        )

    corr_threshold = 4.0 / math.sqrt(m)
    pairwise = []
    independence = True
    centered = samples.counts - samples.counts.mean(axis=0)
    scale = np.sqrt((centered ** 2).sum(axis=0))
    for i in range(partition.k):
        for j in range(i + 1, partition.k):
            denom = scale[i] * scale[j]
            r = float((centered[:, i] * centered[:, j]).sum() / denom) if denom > 0 else 0.0
            pairwise.append({"pair": [i, j], "r": r})
            independence = independence and abs(r) < corr_threshold

    ks_info = None
    ks_pass = None
    if samples.lambda1 is not None:
        def marginal_cdf(x: float) -> float:
            return frechet_cdf_kth(x, 1, alpha) if x > 0.0 else 0.0

        d, bound = ks_statistic(samples.lambda1, marginal_cdf)
        ks_info = {"d": d, "dkw_bound": bound}
        ks_pass = bool(bound >= significance)

    return GofReport(
        trials=m,
        tail_index=float(alpha),
        significance=float(significance),
        intervals=partition.intervals,
        mu=tuple(mu),
        empirical_mean=tuple(float(v) for v in samples.counts.mean(axis=0)),
        empirical_var=tuple(float(v) for v in samples.counts.var(axis=0, ddof=1)),
        chi_square=tuple(chi_rows),
        marginal_pass=tuple(marginal),
        pairwise=tuple(pairwise),
        corr_threshold=corr_threshold,
        independence_pass=independence,
        ks_lambda1=ks_info,
        ks_pass=ks_pass,
        histograms=tuple(histograms),
    )


def order_stat_coupling(
    matrix: SymMatrix, spectrum: SpectrumResult, b_n: float, k: int
) -> list[tuple[float, float, float]]:
    """Pair the top-k normalized eigenvalues with the top-k entry
    magnitudes |a_ij| over i <= j; rows are (lambda_i/b_n, s_i/b_n,
    relative gap), eigenvalue-descending. Pure diagnostic."""
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= 10):
        raise ValueError("k must satisfy 1 <= k <= 10")
    if not b_n > 0:
        raise ValueError("b_n must be positive")
    lam = spectrum.raw_eigenvalues[:k] / b_n
    if lam.size < k:
        raise ValueError("spectrum holds fewer than k eigenvalues")
    mags = np.abs(matrix.packed)
    if mags.size < k:
        raise ValueError("matrix holds fewer than k independent entries")
    top = np.sort(np.partition(mags, mags.size - k)[mags.size - k:])[::-1] / b_n
    rows = []
    for lv, sv in zip(lam, top):
        if lv != 0.0:
            gap = abs(lv - sv) / abs(lv)
        else:
            gap = 0.0 if sv == 0.0 else math.inf
        rows.append((float(lv), float(sv), float(gap)))
    return rows


def row_dominance_diagnostic(
    matrix: SymMatrix, b_n: float, delta: float, alpha: float
) -> tuple[int, int]:
    """Count rows breaking the two structural bounds behind the limit.

    First: rows carrying two or more entries above b_n^(3/4 + delta) in
    absolute value (at most one large entry per row should survive).
    Second: rows whose largest entry exceeds b_n^(3/4 + alpha/8) while
    the rest of the row still sums above that same threshold. Both
    frequencies must trend to zero as n grows.
    """
    if not 0.0 < delta < 0.25:
        raise ValueError("delta must lie in (0, 1/4)")
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (0, 2)")
    if not b_n > 0:
        raise ValueError("b_n must be positive")
    rows = matrix.row_abs_view()
    thr_pair = b_n ** (0.75 + delta)
    first = int(np.count_nonzero((rows > thr_pair).sum(axis=1) >= 2))
    thr_net = b_n ** (0.75 + alpha / 8.0)
    row_max = rows.max(axis=1)
    residual = rows.sum(axis=1) - row_max
    second = int(np.count_nonzero((row_max > thr_net) & (residual > thr_net)))
    return first, second


def hill_estimator(values, k: int) -> float:
    """Tail-index diagnostic 1 / mean(log X_(i) - log X_(k+1)), i <= k.

    Plain Hill estimator over the k largest sample values. Diagnostic
    only: no verdict anywhere depends on it, and it carries no
    finite-sample guarantee.
    """
    if not (isinstance(k, (int, np.integer)) and k >= 1):
        raise ValueError("k must be a positive integer")
    x = np.sort(np.asarray(values, dtype=np.float64))[::-1]
    if k + 1 > x.size:
        raise ValueError("k must satisfy k + 1 <= len(values)")
    if not x[k] > 0.0:
        raise ValueError("the k+1 largest values must all be positive")
    spacing = float(np.mean(np.log(x[:k]) - np.log(x[k])))
    if spacing <= 0.0:
        raise ValueError("degenerate sample: the top k+1 values coincide")
    return 1.0 / spacing
