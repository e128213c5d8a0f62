"""Nonlinear heat solver tests against closed-form oracles.

Oracles used here:
  * classical reduction sigma_min = sigma_max = s: the equation is the linear
    heat equation, the worst-case distribution is the centered normal with
    variance s^2 t (normal_cdf below, via math.erf);
  * quadratic initial data a*x^2: the second derivative is constant, so the
    march adds G(2a) per unit time exactly;
  * band (smin, smax) with ramp data: the similarity solution glues two
    half-normal profiles, giving
        F(y) = 2 smax / (smin + smax) * Phi(y / (smax sqrt(t))),  y <= 0
        F(y) = 1 - 2 smin / (smin + smax) * Phi(-y / (smin sqrt(t))), y >= 0
    (solution_of checks: both pieces solve the linear equation with their own
    sigma, values and slopes match at 0, and the curvature keeps one sign per
    side so the nonlinear generator picks a single sigma on each side).
"""

import math

import numpy as np
import pytest

from gstoch.errors import ConfigurationError, InputError
from gstoch.gheat import (GHeatSolution, SpatialGrid, VolBounds, g_normal_cdf_table,
                          g_normal_density, g_normal_upper_cdf, g_of, solve_g_heat,
                          stable_dt)


def normal_cdf(x):
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def band_cdf(y, smin, smax, t=1.0):
    """Closed-form worst-case distribution for the volatility band."""
    rt = math.sqrt(t)
    if y <= 0:
        return 2.0 * smax / (smin + smax) * normal_cdf(y / (smax * rt))
    return 1.0 - 2.0 * smin / (smin + smax) * normal_cdf(-y / (smin * rt))


class TestGenerator:
    def test_values(self):
        b = VolBounds(0.8, 1.3)
        assert g_of(1.0, b) == pytest.approx(0.845)
        assert g_of(-1.0, b) == pytest.approx(-0.32)
        assert g_of(0.0, b) == 0.0

    def test_elementwise(self):
        b = VolBounds(1.0, 2.0)
        np.testing.assert_allclose(g_of(np.array([2.0, -2.0]), b), [4.0, -1.0])

    def test_monotone(self):
        b = VolBounds(0.5, 1.5)
        a = np.linspace(-3, 3, 41)
        assert np.all(np.diff(g_of(a, b)) >= 0.0)

    def test_classical_reduction_is_linear(self):
        b = VolBounds(1.3, 1.3)
        for a in (-2.0, -0.5, 0.7, 3.0):
            assert g_of(a, b) == pytest.approx(0.5 * 1.69 * a)


class TestBounds:
    def test_rejects_bad_band(self):
        with pytest.raises(ConfigurationError):
            VolBounds(0.0, 1.0)
        with pytest.raises(ConfigurationError):
            VolBounds(1.2, 1.0)
        with pytest.raises(ConfigurationError):
            VolBounds(-1.0, 1.0)

    def test_variances(self):
        b = VolBounds(0.8, 1.3)
        assert b.var_min == pytest.approx(0.64)
        assert b.var_max == pytest.approx(1.69)


class TestSolver:
    def test_stability_bound_enforced(self):
        space = SpatialGrid.symmetric(2.0, 0.1)
        b = VolBounds(1.0, 1.0)
        limit = stable_dt(space, b)
        assert limit == pytest.approx(0.005)
        with pytest.raises(ConfigurationError):
            solve_g_heat(lambda x: 0.0, b, 1.0, space, dt=2 * limit)

    def test_quadratic_data_convex(self):
        # u0 = x^2 has u_xx = 2 everywhere, so u(t, x) = x^2 + var_max * t
        # in the interior until boundary effects arrive.
        b = VolBounds(0.8, 1.3)
        space = SpatialGrid.symmetric(6.0, 0.05)
        sol = solve_g_heat(lambda x: x * x, b, 1.0, space)
        assert sol.value_at(0.0) == pytest.approx(1.69, abs=1e-3)
        assert sol.value_at(1.0) == pytest.approx(1.0 + 1.69, abs=1e-3)

    def test_quadratic_data_concave(self):
        # u0 = -x^2 propagates with the lower variance: u(t,0) = -var_min * t.
        b = VolBounds(0.8, 1.3)
        space = SpatialGrid.symmetric(6.0, 0.05)
        sol = solve_g_heat(lambda x: -x * x, b, 1.0, space)
        assert sol.value_at(0.0) == pytest.approx(-0.64, abs=1e-3)

    def test_classical_gaussian_spread(self):
        # Linear case: ramp data at 0 evolves to Phi(x / (s sqrt(t))).
        s = 1.0
        b = VolBounds(s, s)
        space = SpatialGrid.symmetric(8.0, 0.02)
        sol = solve_g_heat(lambda x: float(np.clip((x + 0.04) / 0.08, 0, 1)), b, 1.0, space)
        for x in (-1.5, -0.5, 0.0, 0.5, 1.5):
            assert sol.value_at(x) == pytest.approx(normal_cdf(x / s), abs=2e-3)

    def test_zero_t_end(self):
        b = VolBounds(1.0, 1.0)
        space = SpatialGrid.symmetric(1.0, 0.1)
        sol = solve_g_heat(lambda x: x, b, 0.0, space)
        assert sol.value_at(0.3) == pytest.approx(0.3)

    def test_keep_history(self):
        b = VolBounds(1.0, 1.0)
        space = SpatialGrid.symmetric(1.0, 0.2)
        sol = solve_g_heat(lambda x: x * x, b, 0.01, space, keep_history=True)
        assert isinstance(sol, GHeatSolution)
        assert len(sol.times) == sol.field.shape[0]
        assert sol.times[0] == 0.0
        assert sol.times[-1] == pytest.approx(0.01)

    def test_nonfinite_data_rejected(self):
        b = VolBounds(1.0, 1.0)
        space = SpatialGrid.symmetric(1.0, 0.1)
        with pytest.raises(InputError):
            solve_g_heat(lambda x: np.inf if x > 0 else 0.0, b, 0.1, space)


class TestSpatialGrid:
    def test_symmetric_contains_zero(self):
        space = SpatialGrid.symmetric(2.05, 0.1)
        pts = space.points
        assert pts[0] == pytest.approx(-pts[-1])
        assert np.min(np.abs(pts)) == pytest.approx(0.0, abs=1e-12)
        assert pts[-1] >= 2.05

    def test_rejects_domain_without_zero(self):
        with pytest.raises(ConfigurationError):
            SpatialGrid(0.5, 2.0, 10)
        with pytest.raises(ConfigurationError):
            SpatialGrid(-1.0, 1.0, 2)


class TestDistribution:
    def test_classical_cdf_matches_normal(self):
        b = VolBounds(1.0, 1.0)
        y = np.linspace(-3, 3, 25)
        vals = g_normal_cdf_table(y, b, 1.0, dx=0.02)
        expected = [normal_cdf(v) for v in y]
        np.testing.assert_allclose(vals, expected, atol=2e-3)

    def test_band_cdf_matches_similarity_solution(self):
        # the symmetric ramp smoothing meets an asymmetric profile at the
        # kink, so the error there is first order in eps = 2*dx (observed
        # -3.4e-3 at dx = 0.02, halving with dx); away from 0 it is smaller
        b = VolBounds(0.8, 1.3)
        y = np.linspace(-3, 3, 13)
        vals = g_normal_cdf_table(y, b, 1.0, dx=0.02)
        expected = [band_cdf(v, 0.8, 1.3) for v in y]
        np.testing.assert_allclose(vals, expected, atol=5e-3)

    def test_pointwise_matches_table(self):
        b = VolBounds(0.8, 1.2)
        for y in (-1.0, 0.0, 0.7):
            one = g_normal_upper_cdf(y, b, 1.0, dx=0.05)
            tab = g_normal_cdf_table(np.array([y]), b, 1.0, dx=0.05)[0]
            assert one == pytest.approx(tab, abs=2e-3)

    def test_cdf_monotone_and_bounded(self):
        b = VolBounds(0.8, 1.3)
        y = np.linspace(-4, 4, 81)
        vals = g_normal_cdf_table(y, b, 1.0, dx=0.05)
        assert np.all(vals >= 0.0) and np.all(vals <= 1.0)
        assert np.all(np.diff(vals) >= -1e-9)

    def test_mass_at_zero(self):
        # Ramp data is worth smax/(smin+smax) at the kink under the band;
        # tolerance covers the first-order smoothing bias there (see above).
        b = VolBounds(0.8, 1.3)
        val = g_normal_upper_cdf(0.0, b, 1.0, dx=0.02)
        assert val == pytest.approx(1.3 / 2.1, abs=5e-3)

    def test_lower_below_upper(self):
        b = VolBounds(0.8, 1.3)
        y = np.linspace(-2, 2, 9)
        up = g_normal_cdf_table(y, b, 1.0, dx=0.05)
        lo = g_normal_cdf_table(y, b, 1.0, dx=0.05, lower=True)
        assert np.all(lo <= up + 1e-9)

    def test_lower_equals_upper_classically(self):
        b = VolBounds(1.0, 1.0)
        y = np.linspace(-2, 2, 9)
        up = g_normal_cdf_table(y, b, 1.0, dx=0.05)
        lo = g_normal_cdf_table(y, b, 1.0, dx=0.05, lower=True)
        np.testing.assert_allclose(up, lo, atol=1e-9)


class TestDensity:
    def test_classical_density_is_normal(self):
        b = VolBounds(1.0, 1.0)
        y = np.arange(-4.0, 4.0 + 1e-9, 0.05)
        dens = g_normal_density(y, b, 1.0, dx=0.02)
        expected = np.exp(-(y**2) / 2) / math.sqrt(2 * math.pi)
        np.testing.assert_allclose(dens, expected, atol=2e-3)

    def test_classical_density_symmetric(self):
        b = VolBounds(1.0, 1.0)
        y = np.arange(-3.0, 3.0 + 1e-9, 0.1)
        dens = g_normal_density(y, b, 1.0, dx=0.05)
        np.testing.assert_allclose(dens, dens[::-1], atol=1e-4)

    def test_band_density_two_half_profiles(self):
        # d/dy of the similarity solution: the smax profile left of 0, the
        # smin profile right of 0, continuous at 0.
        smin, smax = 0.8, 1.3
        b = VolBounds(smin, smax)
        y = np.arange(-3.0, 3.0 + 1e-9, 0.05)
        dens = g_normal_density(y, b, 1.0, dx=0.02)
        scale = 2.0 / (smin + smax) / math.sqrt(2 * math.pi)
        expected = np.where(
            y <= 0,
            scale * np.exp(-(y**2) / (2 * smax**2)),
            scale * np.exp(-(y**2) / (2 * smin**2)),
        )
        np.testing.assert_allclose(dens, expected, atol=3e-3)

    def test_density_nonnegative_and_integrates_to_one(self):
        b = VolBounds(0.8, 1.3)
        y = np.arange(-6.0, 6.0 + 1e-9, 0.05)
        dens = g_normal_density(y, b, 1.0, dx=0.05)
        assert np.all(dens >= 0.0)
        mass = np.trapezoid(dens, y)
        assert mass == pytest.approx(1.0, abs=5e-3)

    def test_nonuniform_grid_rejected(self):
        b = VolBounds(1.0, 1.0)
        with pytest.raises(InputError):
            g_normal_density(np.array([0.0, 0.1, 0.3]), b)
        with pytest.raises(InputError):
            g_normal_density(np.array([0.0]), b)
