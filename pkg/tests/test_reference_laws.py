"""Reference-law checks: Airy evaluation, edge rescale constants, bulk
spectral CDFs, and the Painleve II route to the Tracy-Widom tables.

Cross-checks use independent machinery: mpmath for Airy values, scipy
quadrature for CDF mass, a Gauss-Legendre Nystrom determinant of the Airy
kernel for F2, and frozen published moments for both edge laws.
"""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from rmtstat.airy import airy_ai, airy_ai_both, airy_ai_prime
from rmtstat.reference_laws import (
    EsdParams,
    TWTable,
    goe_rescale,
    johnstone_rescale,
    marchenko_pastur_cdf,
    marchenko_pastur_density,
    painleve2_solve,
    semicircle_cdf,
    semicircle_density,
    tw_cdf,
    tw_table,
)


@pytest.fixture(scope="module")
def table():
    return tw_table()


def fredholm_f2(s: float, npts: int = 60, span: float = 16.0) -> float:
    """F2(s) as the Fredholm determinant of the Airy kernel on [s, s+span],
    discretized by Gauss-Legendre Nystrom with scipy's Airy function."""
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


class TestAiry:
    def test_value_at_zero(self):
        # Ai(0) = 3^(-2/3) / Gamma(2/3), Ai'(0) = -3^(-1/3) / Gamma(1/3)
        want = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
        np.testing.assert_allclose(airy_ai(0.0), want, rtol=0, atol=1e-14)

    def test_derivative_at_zero(self):
        want = -(3.0 ** (-1.0 / 3.0)) / math.gamma(1.0 / 3.0)
        np.testing.assert_allclose(airy_ai_prime(0.0), want, rtol=0, atol=1e-14)

    @pytest.mark.parametrize(
        "x", [-4.5, -3.2, -1.0, 0.5, 2.0, 4.4, 4.5, 4.7, 6.0, 10.0, 20.0]
    )
    def test_against_mpmath(self, x):
        ai, aip = airy_ai_both(x)
        np.testing.assert_allclose(ai, float(mpmath.airyai(x)), rtol=0, atol=1e-9)
        np.testing.assert_allclose(aip, float(mpmath.airyai(x, 1)), rtol=0, atol=1e-9)

    def test_large_argument_relative(self):
        # asymptotic branch should be near machine precision well inside it
        for x in (8.0, 15.0, 40.0):
            np.testing.assert_allclose(
                airy_ai(x), float(mpmath.airyai(x)), rtol=1e-13
            )

    def test_domain_error(self):
        with pytest.raises(ValueError, match="x >= -4.5"):
            airy_ai(-4.51)

    def test_vectorized_matches_scalar(self):
        xs = np.array([-2.0, 0.0, 1.5, 7.0])
        ai, aip = airy_ai_both(xs)
        for i, x in enumerate(xs):
            np.testing.assert_array_equal(ai[i], airy_ai(float(x)))
            np.testing.assert_array_equal(aip[i], airy_ai_prime(float(x)))

    def test_prime_is_derivative(self):
        h = 1e-5
        for x in (-1.0, 0.7, 3.0, 5.5):
            fd = (airy_ai(x + h) - airy_ai(x - h)) / (2.0 * h)
            np.testing.assert_allclose(airy_ai_prime(x), fd, rtol=0, atol=1e-8)

    @given(st.floats(min_value=0.0, max_value=60.0))
    @settings(max_examples=40, deadline=None)
    def test_positive_and_decaying(self, x):
        assert airy_ai(x) > 0.0
        assert airy_ai_prime(x) < 0.0


class TestEdgeRescales:
    def test_goe_examples(self):
        assert goe_rescale(1) == (2.0, 1.0)
        np.testing.assert_allclose(goe_rescale(64), (16.0, 0.5), rtol=1e-15)
        np.testing.assert_allclose(goe_rescale(10 ** 6), (2000.0, 0.1), rtol=1e-12)

    def test_goe_rejects_nonpositive(self):
        with pytest.raises(ValueError, match="at least 1"):
            goe_rescale(0)

    def test_johnstone_examples(self):
        np.testing.assert_allclose(johnstone_rescale(4, 4), (16.0, 4.0), rtol=1e-15)
        mu, sigma = johnstone_rescale(1, 1)
        np.testing.assert_allclose(mu, 4.0, rtol=1e-15)
        np.testing.assert_allclose(sigma, 2.0 ** (4.0 / 3.0), rtol=1e-15)
        mu, sigma = johnstone_rescale(9, 4)
        np.testing.assert_allclose(mu, 25.0, rtol=1e-15)
        np.testing.assert_allclose(sigma, 5.0 * (5.0 / 6.0) ** (1.0 / 3.0), rtol=1e-15)

    def test_johnstone_rejects_wide(self):
        with pytest.raises(ValueError, match="m >= n >= 1"):
            johnstone_rescale(3, 4)


class TestSemicircle:
    def test_density_center_and_support(self):
        np.testing.assert_allclose(
            semicircle_density(0.0, 1.0), math.sqrt(2.0) / math.pi, rtol=1e-15
        )
        r = math.sqrt(2.0)
        assert semicircle_density(r + 1e-12, 1.0) == 0.0
        assert semicircle_density(-r - 1e-12, 1.0) == 0.0

    def test_density_integrates_to_one(self):
        r = math.sqrt(2.0)
        mass, _ = quad(lambda t: float(semicircle_density(t, 1.0)), -r, r)
        np.testing.assert_allclose(mass, 1.0, rtol=0, atol=1e-10)

    def test_cdf_limits(self):
        r = math.sqrt(2.0 * 3.0)
        assert semicircle_cdf(-r, 3.0) == 0.0
        assert semicircle_cdf(r, 3.0) == 1.0
        np.testing.assert_allclose(semicircle_cdf(0.0, 3.0), 0.5, rtol=1e-15)

    def test_cdf_matches_quadrature(self):
        r = math.sqrt(2.0)
        for x in (-1.2, -0.3, 0.0, 0.7, 1.3):
            want, _ = quad(lambda t: float(semicircle_density(t, 1.0)), -r, x)
            np.testing.assert_allclose(
                semicircle_cdf(x, 1.0), want, rtol=0, atol=1e-10
            )

    def test_rejects_bad_variance(self):
        with pytest.raises(ValueError, match="sigma2"):
            semicircle_cdf(0.0, 0.0)
        with pytest.raises(ValueError, match="sigma2"):
            semicircle_density(0.0, -1.0)

    @given(
        st.floats(min_value=-2.0, max_value=2.0),
        st.floats(min_value=-2.0, max_value=2.0),
    )
    @settings(max_examples=40, deadline=None)
    def test_cdf_monotone(self, x, y):
        lo, hi = min(x, y), max(x, y)
        assert semicircle_cdf(lo, 1.0) <= semicircle_cdf(hi, 1.0)


class TestMarchenkoPastur:
    def test_params_validation(self):
        with pytest.raises(ValueError, match="sigma2"):
            EsdParams(0.0, 2.0)
        with pytest.raises(ValueError, match="gamma"):
            EsdParams(1.0, 0.5)

    def test_support_square_case(self):
        assert EsdParams(1.0, 1.0).support == (0.0, 4.0)
        a, b = EsdParams(2.0, 4.0).support
        np.testing.assert_allclose(a, 2.0 * 0.25, rtol=1e-15)
        np.testing.assert_allclose(b, 2.0 * 2.25, rtol=1e-15)

    def test_density_zero_outside(self):
        p = EsdParams(1.0, 2.0)
        a, b = p.support
        assert marchenko_pastur_density(a - 1e-9, p) == 0.0
        assert marchenko_pastur_density(b + 1e-9, p) == 0.0

    def test_density_mass_one(self):
        for sigma2, gamma in ((1.0, 1.0), (2.0, 3.0), (0.5, 1.5)):
            p = EsdParams(sigma2, gamma)
            a, b = p.support
            mass, _ = quad(
                lambda t: float(marchenko_pastur_density(t, p)), a, b, limit=200
            )
            np.testing.assert_allclose(mass, 1.0, rtol=0, atol=1e-8)

    def test_cdf_endpoints(self):
        p = EsdParams(1.0, 2.0)
        a, b = p.support
        assert abs(marchenko_pastur_cdf(a, p)) <= 1e-8
        assert abs(marchenko_pastur_cdf(b, p) - 1.0) <= 1e-8

    def test_cdf_square_midpoint_closed_form(self):
        # gamma=1, sigma2=1: t = 4 sin^2(u) turns the CDF at t=2 into
        # (4/pi) int_0^{pi/4} cos^2 = 1/2 + 1/pi
        p = EsdParams(1.0, 1.0)
        np.testing.assert_allclose(
            marchenko_pastur_cdf(2.0, p), 0.5 + 1.0 / math.pi, rtol=0, atol=2e-6
        )

    def test_cdf_matches_quadrature(self):
        p = EsdParams(2.0, 3.0)
        a, b = p.support
        for x in (a + 0.1 * (b - a), a + 0.5 * (b - a), a + 0.9 * (b - a)):
            want, _ = quad(
                lambda t: float(marchenko_pastur_density(t, p)), a, x, limit=200
            )
            np.testing.assert_allclose(
                marchenko_pastur_cdf(x, p), want, rtol=0, atol=2e-6
            )

    @given(
        st.floats(min_value=0.1, max_value=5.0),
        st.floats(min_value=1.0, max_value=8.0),
    )
    @settings(max_examples=25, deadline=None)
    def test_cdf_bounded_and_monotone(self, sigma2, gamma):
        p = EsdParams(sigma2, gamma)
        a, b = p.support
        xs = np.linspace(a - 0.5, b + 0.5, 41)
        vals = marchenko_pastur_cdf(xs, p)
        assert np.all(vals >= 0.0) and np.all(vals <= 1.0)
        assert np.all(np.diff(vals) >= -1e-15)

    def test_cdf_gamma_just_above_one(self):
        # a = sigma2 (1 - 1/sqrt(gamma))^2 is tiny but positive, so the
        # 1/t factor puts a dip of width ~ sqrt(a) next to the lower edge
        # that a fixed quadrature grid misses entirely
        for gamma in (1.00390625, 1.0 + 1e-6, 1.0 + 1e-12):
            p = EsdParams(1.0, gamma)
            a, b = p.support
            assert abs(marchenko_pastur_cdf(b, p) - 1.0) <= 1e-8
            xs = np.linspace(a, b, 41)
            vals = marchenko_pastur_cdf(xs, p)
            assert np.all(np.diff(vals) >= -1e-15)
        p = EsdParams(1.0, 1.00390625)
        a, b = p.support
        x = a + 0.3 * (b - a)
        want, _ = quad(
            lambda t: float(marchenko_pastur_density(t, p)), a, x, limit=400
        )
        np.testing.assert_allclose(
            marchenko_pastur_cdf(x, p), want, rtol=0, atol=2e-6
        )


class TestPainleve:
    def test_parameter_validation(self):
        with pytest.raises(ValueError, match="at least 6"):
            painleve2_solve(s_max=5.0)
        with pytest.raises(ValueError, match="at most -8"):
            painleve2_solve(s_min=-7.0)
        with pytest.raises(ValueError, match="0 < h <= 0.01"):
            painleve2_solve(h=0.02)
        with pytest.raises(ValueError, match="0 < h <= 0.01"):
            painleve2_solve(h=-0.001)

    def test_right_boundary_pinned_to_airy(self, table):
        assert table.q[-1] == airy_ai(8.0)

    def test_positive_and_decreasing(self, table):
        assert np.all(table.q > 0.0)
        assert np.all(np.diff(table.q) < 0.0)

    def test_matches_airy_on_the_right(self, table):
        idx = np.searchsorted(table.grid, 4.0)
        ai, _ = airy_ai_both(table.grid[idx:])
        np.testing.assert_allclose(table.q[idx:], ai, rtol=1e-6)

    def test_left_separatrix_value(self, table):
        # q(-8) ~ sqrt(4) (1 + (-8)^-3 / 8 + O(x^-6)), the dropped term
        # contributes about 2e-6 relative
        want = math.sqrt(4.0) * (1.0 + 0.125 * (-8.0) ** -3)
        np.testing.assert_allclose(table.q[0], want, rtol=1e-5)

    def test_growth_ratio_mid_left(self, table):
        idx = np.searchsorted(table.grid, -6.0)
        assert abs(table.grid[idx] + 6.0) < 1e-9
        np.testing.assert_allclose(table.q[idx] / math.sqrt(3.0), 1.0, rtol=0.05)

    def test_ode_residual(self, table):
        # five-point second difference avoids the h^2/12 q'''' floor of the
        # three-point stencil, which alone would exceed the bound
        q, x, h = table.q, table.grid, table.h
        second = (
            -q[:-4] + 16.0 * q[1:-3] - 30.0 * q[2:-2] + 16.0 * q[3:-1] - q[4:]
        ) / (12.0 * h * h)
        rhs = x[2:-2] * q[2:-2] + 2.0 * q[2:-2] ** 3
        assert float(np.max(np.abs(second - rhs))) < 1e-6

    def test_meta_records_solver_settings(self, table):
        assert table.meta["retries"] == 0
        assert table.meta["h_used"] == 0.005
        assert table.h == 0.005
        assert table.grid.size == 3201


class TestTracyWidomCdf:
    def test_requires_valid_beta(self, table):
        with pytest.raises(ValueError, match="beta must be 1 or 2"):
            tw_cdf(table, 3)
        bare = painleve2_solve()
        with pytest.raises(ValueError, match="not computed"):
            bare.cdf_values(2)

    def test_saturates_right(self, table):
        assert table.evaluate(6.0, 2) >= 1.0 - 1e-6
        assert table.evaluate(6.0, 1) >= 1.0 - 1e-4
        assert table.evaluate(100.0, 2) == 1.0

    def test_vanishes_left(self, table):
        assert table.f2[0] < 1e-15
        assert table.f1[0] < 1e-6
        assert table.evaluate(-100.0, 1) == 0.0

    def test_monotone(self, table):
        assert np.all(np.diff(table.f1) >= 0.0)
        assert np.all(np.diff(table.f2) >= 0.0)

    def test_f2_against_fredholm_determinant(self, table):
        for s in (-3.0, -1.0, 0.0, 1.0):
            np.testing.assert_allclose(
                table.evaluate(s, 2), fredholm_f2(s), rtol=0, atol=1e-4
            )

    def test_grid_halving_stable(self, table):
        # halve downward: at h=0.01 the backward march departs the
        # separatrix and the retry valve refines to 0.005 on its own
        fine = tw_table(h=0.0025)
        np.testing.assert_allclose(fine.grid[::2], table.grid, rtol=0, atol=1e-12)
        assert float(np.max(np.abs(fine.f2[::2] - table.f2))) < 1e-6
        assert float(np.max(np.abs(fine.f1[::2] - table.f1))) < 1e-6

    def test_moments_match_published_values(self, table):
        # frozen reference moments of the limiting edge laws
        targets = {1: (-1.206533574582, 1.607781034581),
                   2: (-1.771086807411, 0.813194792833)}
        s, h = table.grid, table.h

        def simpson(y):
            return h / 3.0 * (
                y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()
            )

        for beta, (mean_t, var_t) in targets.items():
            f = table.cdf_values(beta)
            mean = s[-1] - simpson(f)
            ex2 = s[-1] ** 2 - 2.0 * simpson(s * f)
            np.testing.assert_allclose(mean, mean_t, rtol=0, atol=1e-4)
            np.testing.assert_allclose(ex2 - mean * mean, var_t, rtol=0, atol=1e-4)

    def test_order_swap_crosses_once(self, table):
        # the beta=1 law has the heavier left tail, so its CDF overtakes
        # the beta=2 one far to the left; to the right of that single
        # crossing the usual F1 <= F2 ordering holds
        diff = table.f1 - table.f2
        signs = np.sign(diff[np.abs(diff) > 1e-12])
        flips = np.nonzero(np.diff(signs) != 0)[0]
        assert flips.size == 1
        assert signs[0] > 0 and signs[-1] < 0
        mid = np.searchsorted(table.grid, -2.0)
        assert np.all(table.f1[mid:] <= table.f2[mid:] + 1e-12)

    def test_interpolation_between_nodes(self, table):
        s = -1.2345
        i = np.searchsorted(table.grid, s) - 1
        w = (s - table.grid[i]) / table.h
        want = (1.0 - w) * table.f2[i] + w * table.f2[i + 1]
        np.testing.assert_allclose(table.evaluate(s, 2), want, rtol=1e-12)


class TestTWTableFormat:
    def test_csv_layout(self, table):
        text = table.to_csv()
        lines = text.strip().split("\n")
        header = [ln for ln in lines if ln.startswith("#")]
        rows = [ln for ln in lines if not ln.startswith("#")]
        assert len(header) == 3
        assert "s,q,F1,F2" in header[2]
        assert len(rows) == table.grid.size
        first = rows[0].split(",")
        assert len(first) == 4
        np.testing.assert_allclose(float(first[0]), table.grid[0], rtol=1e-9)
        np.testing.assert_allclose(float(first[1]), table.q[0], rtol=1e-9)
        last = rows[-1].split(",")
        np.testing.assert_allclose(float(last[3]), table.f2[-1], rtol=1e-9)

    def test_csv_requires_filled_cdfs(self):
        bare = painleve2_solve()
        with pytest.raises(ValueError, match="not computed"):
            bare.to_csv()
