"""Acceptance runs: every verification target at its stated scale.

One test per criterion, each asserting the stated tolerance and printing
a single "criterion N: PASS/FAIL" line. The n = 2000 ensembles dominate
the runtime; the whole module takes a few minutes on one core.
"""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from rmtstat.config import ExperimentConfig
from rmtstat.det_functional import (
    ComplexZ,
    gaussian_integral_check,
    mc_expectation,
    poisson_side_quadrature,
)
from rmtstat.ensembles import EnsembleSpec, count_independent_entries
from rmtstat.experiments import (
    _contrast_trial,
    _coupling_trial,
    _extreme_trial,
    _rowdiag_trial,
    run_esd_check,
)
from rmtstat.pointproc import CountsSample, IntervalPartition, joint_count_test, ks_statistic
from rmtstat.reference_laws import tw_table
from rmtstat.spectra import bn_divisor
from rmtstat.tails import TailSpec

CAUCHY = TailSpec("cauchy", 1.0)
PARETO1 = TailSpec("pareto", 1.0)
THREE_CELLS = IntervalPartition(((1.0, 2.0), (2.0, 4.0), (4.0, math.inf)))


def check(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    assert ok, line


def frechet1(x: float) -> float:
    return math.exp(-1.0 / x) if x > 0.0 else 0.0


def fredholm_f2(s: float, npts: int = 60, span: float = 16.0) -> float:
    """Independent F2 oracle: Fredholm determinant of the Airy kernel on
    [s, s+span] by Gauss-Legendre Nystrom with scipy's Airy function."""
    from scipy.special import airy as scipy_airy

    x, w = np.polynomial.legendre.leggauss(npts)
    t = 0.5 * span * (x + 1.0) + s
    wt = 0.5 * span * w
    ai, aip, _, _ = scipy_airy(t)
    diff = t[:, None] - t[None, :]
    num = ai[:, None] * aip[None, :] - aip[:, None] * ai[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ker = np.where(diff != 0.0, num / diff, 0.0)
    np.fill_diagonal(ker, aip * aip - t * ai * ai)
    root = np.sqrt(wt)
    sign, logdet = np.linalg.slogdet(np.eye(npts) - root[:, None] * ker * root[None, :])
    return float(sign * math.exp(logdet))


@pytest.fixture(scope="module")
def wigner_runs():
    """400 trials of the n = 2000 Cauchy Wigner ensemble on the b_n scale,
    shared by criteria 1 and 2."""
    spec = EnsembleSpec(kind="wigner_real", n=2000, entry=CAUCHY, seed=101)
    return [_extreme_trial((spec, t, 1.0)) for t in range(400)]


def test_criterion_01_frechet_marginal(wigner_runs):
    lam1 = np.array([s.eigenvalues[0] for s in wigner_runs])
    p_hat = float(np.mean(lam1 <= 1.0))
    gap = abs(p_hat - math.exp(-1.0))
    d, _ = ks_statistic(lam1, frechet1)
    check(
        1,
        gap <= 0.08 and d <= 0.12,
        f"|P(lambda1<=1) - 1/e| = {gap:.4f} (<= 0.08), KS D = {d:.4f} (<= 0.12)",
    )


def test_criterion_02_poisson_counts(wigner_runs):
    sample = CountsSample.from_spectra(wigner_runs, THREE_CELLS)
    report = joint_count_test(sample, THREE_CELLS, alpha=1.0, significance=0.01)
    mu_ok = np.allclose(report.mu, (0.5, 0.25, 0.25))
    worst_r = max(abs(p["r"]) for p in report.pairwise)
    pvals = ", ".join(f"{row['pvalue']:.3f}" for row in report.chi_square)
    check(
        2,
        mu_ok and all(report.marginal_pass) and report.independence_pass,
        f"mu = (0.5, 0.25, 0.25), chi2 p = [{pvals}] at 0.01, "
        f"max |r| = {worst_r:.4f} < {report.corr_threshold:.4f}",
    )


def test_criterion_03_band_case():
    spec = EnsembleSpec(kind="band_periodic", n=2000, d=200, entry=PARETO1, seed=103)
    assert count_independent_entries(spec) == 2000 * 201
    runs = [_extreme_trial((spec, t, 1.0)) for t in range(400)]
    lam1 = np.array([s.eigenvalues[0] for s in runs])
    d, _ = ks_statistic(lam1, frechet1)
    check(3, d <= 0.15, f"periodic band n=2000 d=200: KS D = {d:.4f} (<= 0.15)")


def test_criterion_04_order_stat_coupling():
    spec = EnsembleSpec(kind="wigner_real", n=2000, entry=CAUCHY, seed=104)
    gaps = [_coupling_trial((spec, t, 1))[1][0][2] for t in range(100)]
    med = float(np.median(gaps))
    check(4, med < 0.05, f"median relative gap = {med:.5f} (< 0.05)")


def test_criterion_05_row_dominance():
    fractions = []
    for nv in (250, 500, 1000, 2000):
        spec = EnsembleSpec(kind="wigner_real", n=nv, entry=CAUCHY, seed=105)
        hits = sum(1 for t in range(200) if _rowdiag_trial((spec, t, 0.05))[2] > 0)
        fractions.append(hits / 200.0)
    inversions = 0
    within_noise = True
    for a, b in zip(fractions, fractions[1:]):
        if b > a:
            inversions += 1
            sigma = math.sqrt((a * (1 - a) + b * (1 - b)) / 200.0)
            if b - a > 2.0 * sigma:
                within_noise = False
    check(
        5,
        inversions <= 1 and within_noise,
        "fraction with a two-large-entry row by n: "
        + ", ".join(f"{f:.3f}" for f in fractions)
        + f" ({inversions} inversions)",
    )


def test_criterion_06_det_functional():
    dense = EnsembleSpec(kind="sample_cov", m=100, n=100, entry=CAUCHY, seed=106)
    parts = []
    ok = True
    for z in (ComplexZ(1.0), ComplexZ(4.0), ComplexZ(2.0, 2.0)):
        est = mc_expectation(dense, z, 2000)
        ok = ok and est.abs_error < 3.0 * est.stderr and est.stderr < 0.01
        parts.append(
            f"z={z.re:g}{z.im:+g}i err {est.abs_error:.4f} < {3 * est.stderr:.4f}"
        )
    sparse = EnsembleSpec(
        kind="sparse_sample_cov", m=200, n=100, d=50, entry=CAUCHY, seed=106
    )
    est = mc_expectation(sparse, ComplexZ(1.0), 2000)
    ok = ok and est.abs_error < 3.0 * est.stderr and est.stderr < 0.01
    parts.append(f"sparse z=1 err {est.abs_error:.4f} < {3 * est.stderr:.4f}")
    check(6, ok, "; ".join(parts))


def test_criterion_07_quadrature_identities():
    worst_q = 0.0
    for z in (ComplexZ(1.0), ComplexZ(4.0), ComplexZ(2.0, 2.0)):
        target = -2.0 * np.sqrt(complex(z.value)) / math.pi
        worst_q = max(worst_q, abs(poisson_side_quadrature(z) - target))
    mats = (
        [[2.0]],
        [[2.0, 0.5], [0.5, 1.0]],
        [[3.0, 0.4, 0.2], [0.4, 2.0, 0.1], [0.2, 0.1, 1.0]],
    )
    worst_g = 0.0
    for mat in mats:
        lhs, rhs = gaussian_integral_check(np.array(mat))
        worst_g = max(worst_g, abs(lhs - rhs))
    check(
        7,
        worst_q < 1e-7 and worst_g < 1e-8,
        f"tail-sum residual {worst_q:.2e} < 1e-7, "
        f"integral identity gap {worst_g:.2e} < 1e-8 for N = 1, 2, 3",
    )


def test_criterion_08_edge_law_contrast():
    table = tw_table()
    f1 = lambda s: table.evaluate(float(s), 1)

    goe = EnsembleSpec(kind="goe", n=400, seed=108)
    goe_vals = np.array(
        [_contrast_trial((goe, t, "goe_edge")).eigenvalues[0] for t in range(500)]
    )
    d_goe, _ = ks_statistic(goe_vals, f1)

    rect = EnsembleSpec(kind="gaussian_rect", m=200, n=200, seed=108)
    rect_vals = np.array(
        [_contrast_trial((rect, t, "johnstone")).eigenvalues[0] for t in range(500)]
    )
    d_rect, _ = ks_statistic(rect_vals, f1)

    cauchy = EnsembleSpec(kind="wigner_real", n=400, entry=CAUCHY, seed=108)
    cauchy_runs = [_contrast_trial((cauchy, t, "goe_edge")) for t in range(500)]
    d_cauchy, _ = ks_statistic(
        np.array([s.eigenvalues[0] for s in cauchy_runs]), f1
    )
    # the same draws on the heavy-tail scale satisfy the criterion-1 law
    lam1 = np.array([s.raw_eigenvalues[0] for s in cauchy_runs]) / bn_divisor(cauchy)
    p_gap = abs(float(np.mean(lam1 <= 1.0)) - math.exp(-1.0))
    d_frechet, _ = ks_statistic(lam1, frechet1)

    check(
        8,
        d_goe <= 0.12
        and d_rect <= 0.15
        and d_cauchy > 0.3
        and p_gap <= 0.08
        and d_frechet <= 0.12,
        f"GOE KS = {d_goe:.4f} (<= 0.12), rect KS = {d_rect:.4f} (<= 0.15), "
        f"cauchy edge KS = {d_cauchy:.4f} (> 0.3), "
        f"cauchy tail law: gap {p_gap:.4f}, KS {d_frechet:.4f}",
    )


def test_criterion_09_painleve_solver():
    table = tw_table()
    fine = tw_table(h=0.0025)
    halving = float(np.max(np.abs(fine.f2[::2] - table.f2)))

    oracle_gap = abs(table.evaluate(-1.0, 2) - fredholm_f2(-1.0))

    q, grid, h = table.q, table.grid, table.h
    second = (-q[:-4] + 16 * q[1:-3] - 30 * q[2:-2] + 16 * q[3:-1] - q[4:]) / (
        12.0 * h * h
    )
    rhs = grid[2:-2] * q[2:-2] + 2.0 * q[2:-2] ** 3
    residual = float(np.max(np.abs(second - rhs)))

    check(
        9,
        halving < 1e-6 and oracle_gap < 1e-4 and residual < 1e-6,
        f"grid halving moves F2 by {halving:.2e} (< 1e-6), "
        f"F2(-1) vs Fredholm oracle {oracle_gap:.2e} (< 1e-4), "
        f"ODE residual {residual:.2e} (< 1e-6)",
    )


def test_criterion_10_esd_checks():
    wigner = ExperimentConfig(
        experiment="esd-check",
        ensemble=EnsembleSpec(kind="wigner_real", n=2000, entry="gaussian", seed=110),
        trials=1,
        seed=110,
        workers=1,
        output_dir="unused",
    )
    d_semi = json.loads(run_esd_check(wigner).files["esd.json"])["ks_d"]

    rect = ExperimentConfig(
        experiment="esd-check",
        ensemble=EnsembleSpec(
            kind="gaussian_rect", m=2000, n=1000, entry="gaussian", seed=110
        ),
        trials=1,
        seed=110,
        workers=1,
        output_dir="unused",
    )
    d_mp = json.loads(run_esd_check(rect).files["esd.json"])["ks_d"]

    check(
        10,
        d_semi <= 0.05 and d_mp <= 0.05,
        f"semicircle KS = {d_semi:.4f} (<= 0.05), "
        f"marchenko-pastur (gamma=2) KS = {d_mp:.4f} (<= 0.05)",
    )


def test_criterion_11_determinism(tmp_path):
    cfg = tmp_path / "accept.cfg"
    cfg.write_text(
        "[experiment]\n"
        "name = poisson-test\n"
        "trials = 60\n"
        "seed = 111\n"
        "partition = (1,2) (2,4) (4,inf)\n"
        f"output_dir = {tmp_path / 'unused'}\n"
        "\n"
        "[ensemble]\n"
        "kind = wigner_real\n"
        "n = 400\n"
        "entry = cauchy\n",
        encoding="utf-8",
    )
    outs = []
    codes = []
    for workers in (1, 3):
        out = tmp_path / f"w{workers}"
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "rmtstat",
                "run",
                str(cfg),
                "--workers",
                str(workers),
                "--out",
                str(out),
            ],
            capture_output=True,
            text=True,
        )
        codes.append(proc.returncode)
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    assert names == sorted(p.name for p in outs[1].iterdir())
    diffs = [
        name
        for name in names
        if name != "manifest.json"
        and (outs[0] / name).read_bytes() != (outs[1] / name).read_bytes()
    ]
    check(
        11,
        codes[0] == codes[1] and not diffs,
        f"workers 1 vs 3: exit codes {codes}, differing files: {diffs or 'none'}",
    )
