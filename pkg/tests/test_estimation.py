"""Tests for position estimation and the smoothed distribution models."""

import numpy as np
import numpy.testing as npt
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from bernloc.estimation import (
    BernsteinCdfEstimator,
    DegenerateDensityError,
    RangeLocalizer,
    density_stats,
    empirical_cdf,
    estimate_position,
    estimate_position_xy,
    fit_density,
    smoothing_degree,
)
from bernloc.sensing import ChannelParams, sample_measurement


class TestEstimatePosition:
    def test_noiseless_three_station_fix(self):
        positions = np.array([[0.0, 0.0], [6.0, 0.0], [0.0, 8.0]])
        ranges = np.array([5.0, 5.0, 5.0])
        # geometric oracle: the residual vanishes exactly at (3, 4)
        assert np.allclose(np.hypot(*(positions - [3.0, 4.0]).T), ranges)
        est = estimate_position_xy(positions, ranges, 1.0, init=[1.0, 1.0])
        assert est.solver_converged
        assert not est.degraded
        npt.assert_allclose(est.p_hat, [3.0, 4.0], atol=1e-3)
        assert est.residual_rms < 1e-4

    def test_single_measurement_lands_on_circle(self):
        positions = np.array([[0.0, 0.0]])
        ranges = np.array([4.0])
        est = estimate_position_xy(positions, ranges, 0.5, init=[2.0, 7.0])
        assert est.degraded
        assert np.hypot(*est.p_hat) == pytest.approx(4.0, abs=1e-3)

    def test_collinear_stations_flagged_degraded(self):
        positions = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
        ranges = np.hypot(*(positions - [1.0, 2.0]).T)
        est = estimate_position_xy(positions, ranges, 0.0, init=[1.0, 1.5])
        assert est.degraded

    def test_monte_carlo_accuracy(self):
        target = np.array([3.0, -2.0])
        angles = np.linspace(0, 2 * np.pi, 100, endpoint=False)
        positions = target + 10.0 * np.column_stack([np.cos(angles), np.sin(angles)])
        hits = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            ranges = 10.0 + 0.1 * rng.standard_normal(100)
            est = estimate_position_xy(positions, ranges, 0.0, init=[0.0, 0.0])
            if np.linalg.norm(est.p_hat - target) < 0.5:
                hits += 1
        assert hits >= 95

    def test_objective_never_worse_than_warm_start(self):
        rng = np.random.default_rng(5)
        positions = rng.uniform(-5, 5, size=(12, 2))
        ranges = np.hypot(*(positions - [1.0, 1.0]).T) + 0.05 * rng.standard_normal(12)
        init = np.array([4.0, -4.0])

        def objective(p):
            return float(np.sum((np.hypot(*(positions - p).T) - ranges) ** 2))

        est = estimate_position_xy(positions, ranges, 0.0, init=init)
        assert objective(est.p_hat) <= objective(init)

    def test_measurement_record_interface(self):
        params = ChannelParams(noise_sigma0=0.0)
        rng = np.random.default_rng(0)
        target = [3.0, 4.0]
        ms = [
            sample_measurement(pos, target, k * 0.5, params, rng)
            for k, pos in enumerate([[0.0, 0.0], [6.0, 0.0], [0.0, 8.0]])
        ]
        est = estimate_position(ms, init=[1.0, 1.0])
        npt.assert_allclose(est.p_hat, target, atol=1e-3)
        assert est.t == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            estimate_position([], init=[0.0, 0.0])


class TestEmpiricalCdf:
    def test_single_sample_step(self):
        F = empirical_cdf([2.0], 0.0, 10.0)
        assert F(1.9) == 0.0
        assert F(2.0) == 1.0
        assert F(5.0) == 1.0

    def test_order_statistics(self):
        F = empirical_cdf([1.0, 2.0, 3.0, 4.0], 0.0, 10.0)
        assert F(2.5) == 0.5
        assert F(0.5) == 0.0
        assert F(4.0) == 1.0

    def test_upper_end_is_one(self):
        rng = np.random.default_rng(1)
        F = empirical_cdf(rng.uniform(0, 10, 37), 0.0, 10.0)
        assert F(10.0) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            empirical_cdf([], 0.0, 1.0)

    def test_clipping(self):
        F = empirical_cdf([-5.0, 0.5, 20.0], 0.0, 10.0)
        assert F(0.0) == pytest.approx(1 / 3)
        assert F(10.0) == 1.0


class TestSmoothingDegree:
    @pytest.mark.parametrize("n,m", [(16, 10), (1, 3), (100, 34), (81, 29), (256, 66)])
    def test_examples(self, n, m):
        # 16, 81, 256 are exact fourth powers: the 3/4 power must not round up
        assert smoothing_degree(n) == m

    def test_consistency_window(self):
        for n in range(8, 2001):
            m = smoothing_degree(n)
            assert n ** (2 / 3) <= m <= (n / np.log(n)) ** 2


class TestFitDensity:
    def test_degenerate_point_mass(self):
        pts = np.tile([4.0, 4.0], (20, 1))
        d = fit_density(pts, 0.0, 10.0)
        grid = np.linspace(0.0, 10.0, d.degree + 1)
        expected = (grid >= 4.0).astype(float)
        npt.assert_array_equal(d.cdf_x.coeffs, expected)
        # density mass concentrates around the sample location
        zz = np.linspace(0, 10, 400)
        peak_at = zz[np.argmax(d.pdf_x(zz))]
        assert abs(peak_at - 4.0) < 1.0

    def test_uniform_supnorm(self):
        rng = np.random.default_rng(1)
        pts = rng.uniform(0.0, 100.0, size=(500, 2))
        d = fit_density(pts, 0.0, 100.0)
        zz = np.linspace(0, 100, 600)
        assert np.abs(d.cdf_x(zz) - zz / 100.0).max() < 0.07

    def test_cdf_endpoint_is_one(self):
        rng = np.random.default_rng(3)
        d = fit_density(rng.uniform(0, 10, size=(25, 2)), 0.0, 10.0)
        assert d.cdf_x(10.0) == 1.0
        assert d.cdf_y(10.0) == 1.0

    def test_cdf_coefficients_nondecreasing(self):
        rng = np.random.default_rng(9)
        for _ in range(5):
            pts = rng.normal(5, 2, size=(40, 2))
            d = fit_density(pts, 0.0, 10.0)
            assert np.all(np.diff(d.cdf_x.coeffs) >= 0)
            assert np.all(np.diff(d.cdf_y.coeffs) >= 0)

    def test_pdf_integral_matches_cdf_span(self):
        rng = np.random.default_rng(11)
        pts = rng.normal(5, 2, size=(60, 2))
        d = fit_density(pts, 0.0, 10.0)
        span = d.cdf_x(10.0) - d.cdf_x(0.0)
        assert abs(d.pdf_x.integral() - span) < 1e-9

    def test_pdf_nonnegative_at_samples(self):
        rng = np.random.default_rng(13)
        pts = rng.normal(5, 2, size=(80, 2))
        d = fit_density(pts, 0.0, 10.0)
        zz = np.linspace(0, 10, 300)
        assert d.pdf_x(zz).min() >= -1e-12

    def test_consistency_trend(self):
        wins = 0
        for seed in range(10):
            errs = []
            for n in (500, 50):
                rng = np.random.default_rng(seed)
                pts = rng.uniform(0.0, 100.0, size=(n, 2))
                d = fit_density(pts, 0.0, 100.0)
                zz = np.linspace(0, 100, 400)
                errs.append(np.abs(d.cdf_x(zz) - zz / 100.0).max())
            if errs[0] < errs[1]:
                wins += 1
        assert wins >= 9


class TestDensityStats:
    def test_symmetric_density_mean_is_midpoint(self):
        # samples mirror-symmetric about 5 and off the coefficient grid, so
        # the fitted density is exactly symmetric
        pts = np.array([[3.3, 2.5], [6.7, 4.5], [3.3, 5.5], [6.7, 7.5]])
        d = fit_density(pts, 0.0, 10.0)
        assert np.allclose(d.cdf_x.coeffs + d.cdf_x.coeffs[::-1], 1.0)
        (mx, _), (my, _) = density_stats(d)
        assert mx == pytest.approx(5.0, abs=1e-9)
        assert my == pytest.approx(5.0, abs=1e-9)

    def test_point_mass_concentration(self):
        sigmas = []
        for n in (20, 200):
            pts = np.tile([6.0, 6.0], (n, 1))
            d = fit_density(pts, 0.0, 10.0)
            (mx, sx), _ = density_stats(d)
            assert mx == pytest.approx(6.0, abs=0.2)
            sigmas.append(sx)
        assert sigmas[1] < sigmas[0]

    def test_normal_sample_moments(self):
        # oracle: the generating distribution N(50, 3); the smoothing degree
        # is chosen high enough that kernel widening stays inside tolerance
        rng = np.random.default_rng(4)
        pts = np.clip(rng.normal(50, 3, size=(1000, 2)), 0, 100)
        d = fit_density(pts, 0.0, 100.0, degree=1000)
        (mx, sx), (my, sy) = density_stats(d)
        assert mx == pytest.approx(50.0, abs=0.3)
        assert my == pytest.approx(50.0, abs=0.3)
        assert sx == pytest.approx(3.0, abs=0.5)
        assert sy == pytest.approx(3.0, abs=0.5)

    def test_degenerate_mass_raises(self):
        pts = np.zeros((5, 2))  # all clipped onto the lower edge
        d = fit_density(pts, 0.0, 10.0)
        with pytest.raises(DegenerateDensityError):
            density_stats(d)


class TestSklearnSurface:
    def test_localizer_fit_predict(self):
        positions = np.array([[0.0, 0.0], [6.0, 0.0], [0.0, 8.0], [6.0, 8.0]])
        ranges = np.hypot(*(positions - [3.0, 4.0]).T)
        loc = RangeLocalizer().fit(positions, ranges)
        npt.assert_allclose(loc.position_, [3.0, 4.0], atol=1e-3)
        npt.assert_allclose(loc.predict(positions), ranges, atol=1e-3)
        assert loc.score(positions, ranges) > 0.999

    def test_localizer_unfitted_predict_raises(self):
        with pytest.raises(NotFittedError):
            RangeLocalizer().predict(np.zeros((1, 2)))

    def test_localizer_clone_and_params(self):
        loc = RangeLocalizer(init=[1.0, 2.0], max_iters=50)
        params = loc.get_params()
        assert params["max_iters"] == 50
        twin = clone(loc)
        assert twin.get_params() == params

    def test_localizer_wrong_width_rejected(self):
        with pytest.raises(ValueError):
            RangeLocalizer().fit(np.zeros((4, 3)), np.zeros(4))

    def test_cdf_estimator_fit_and_eval(self):
        rng = np.random.default_rng(21)
        X = rng.normal(5, 1, size=(300, 2))
        est = BernsteinCdfEstimator(support=(0.0, 10.0)).fit(X)
        grid = np.linspace(0, 10, 50)
        cc = est.cdf(np.column_stack([grid, grid]))
        assert cc.shape == (50, 2)
        assert np.all(np.diff(cc[:, 0]) >= -1e-12)
        assert cc[-1, 0] == pytest.approx(1.0)
        assert est.means_[0] == pytest.approx(5.0, abs=0.3)

    def test_cdf_estimator_params_roundtrip(self):
        est = BernsteinCdfEstimator(support=(0.0, 12.0), degree=17)
        assert clone(est).get_params() == est.get_params()

    def test_cdf_estimator_unfitted_raises(self):
        with pytest.raises(NotFittedError):
            BernsteinCdfEstimator().cdf(np.zeros((1, 1)))
