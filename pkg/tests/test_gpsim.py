import logging
import math

import numpy as np
import pytest

from gradcp import (
    KernelSpec,
    LongRunCovariance,
    RescaledGrid,
    SeriesSample,
    estimated_driver,
    hac_sigma,
    hmax_draw,
    make_family,
    pivotal_driver,
    quantile_curve,
    simulate_driver_path,
)
from gradcp.gpsim import simulate_hmax_curves


def pivotal_kernel(u, v, up, vp):
    """Closed-form covariance of the sigma-scaled limit contrast."""
    return (
        (v * vp) / (u * up) * min(u, up)
        - (vp / up) * min(v, up)
        - (v / u) * min(u, vp)
        + min(v, vp)
    )


def draw_paths(driver, n):
    return np.stack(
        [
            simulate_driver_path(driver, np.random.SeedSequence(driver.seed, spawn_key=(k,)))
            for k in range(n)
        ]
    )


class TestPivotalDriver:
    def test_unit_rate_brownian_motion(self):
        grid = RescaledGrid.equispaced(64)
        driver = pivotal_driver(grid, 2000, seed=1)
        paths = draw_paths(driver, 2000)
        g1 = paths[:, 0, -1]
        se = math.sqrt(2.0 / (2000 - 1))
        assert g1.var() == pytest.approx(1.0, abs=4 * se)
        assert abs(g1.mean()) < 4.0 / math.sqrt(2000)

    def test_independent_increments(self):
        grid = RescaledGrid.equispaced(32)
        driver = pivotal_driver(grid, 1500, seed=5)
        paths = draw_paths(driver, 1500)
        a = paths[:, 0, 8] - paths[:, 0, 0]
        b = paths[:, 0, 24] - paths[:, 0, 16]
        corr = np.corrcoef(a, b)[0, 1]
        assert abs(corr) < 4.0 / math.sqrt(1500)

    def test_bridge_variance(self):
        # plug u = u' = 1, v = v' into the pivotal kernel: Var = v - v^2
        grid = RescaledGrid.equispaced(100)
        driver = pivotal_driver(grid, 4000, seed=9)
        paths = draw_paths(driver, 4000)
        g1 = paths[:, 0, -1]
        for v_idx in (25, 50, 75):
            v = v_idx / 100.0
            h = paths[:, 0, v_idx] - v * g1
            target = pivotal_kernel(1.0, v, 1.0, v)
            assert target == v - v * v
            se = target * math.sqrt(2.0 / (4000 - 1))
            assert h.var() == pytest.approx(target, abs=3 * se + 0.01)


class TestEstimatedDriver:
    def _homogeneous_lrv(self, m, sigma0):
        grid = RescaledGrid.equispaced(m)
        nf = sigma0.shape[0]
        sig = grid.points[:, None, None] * sigma0[None]
        return LongRunCovariance(grid=grid, labels=tuple(f"f{i}" for i in range(nf)),
                                 sigma=sig, centering="none")

    def test_homogeneous_increments(self):
        # Sigma(u) = u * Sigma0 -> increments N(0, du * Sigma0)
        sigma0 = np.array([[2.0, 0.6], [0.6, 1.0]])
        lrv = self._homogeneous_lrv(40, sigma0)
        driver = estimated_driver(lrv, 3000, seed=2)
        paths = draw_paths(driver, 3000)
        inc = paths[:, :, 10] - paths[:, :, 5]  # 5 steps of width 1/40
        emp = np.cov(inc.T, bias=True)
        np.testing.assert_allclose(emp, (5.0 / 40.0) * sigma0, atol=0.02)

    def test_psd_repair_logged(self, caplog):
        # oracle: eigendecomposition of the constructed non-PSD difference
        grid = RescaledGrid.equispaced(2)
        s1 = np.array([[1.0, 0.0], [0.0, 1.0]])
        diff = np.array([[0.5, 0.7], [0.7, 0.5]])  # eigenvalues -0.2, 1.2
        vals = np.linalg.eigvalsh(diff)
        assert vals[0] < 0
        sig = np.stack([s1, s1 + diff])
        lrv = LongRunCovariance(grid=grid, labels=("a", "b"), sigma=sig, centering="none")
        with caplog.at_level(logging.WARNING, logger="gradcp.gpsim"):
            driver = estimated_driver(lrv, 100, seed=0)
        assert any("repaired" in rec.message for rec in caplog.records)
        # the repaired factor squares to the clipped matrix (negative part removed)
        f = driver.factors[1]
        repaired = f @ f.T
        w, v = np.linalg.eigh(diff)
        expect = (v * np.clip(w, 0, None)) @ v.T
        np.testing.assert_allclose(repaired, expect, atol=1e-12)

    def test_grid_refinement_required(self):
        # covariance grid {2/6, 4/6, 6/6} cannot serve simulation points at 1/6
        grid = RescaledGrid(np.array([2, 4, 6]), 6)
        sig = grid.points[:, None, None] * np.eye(1)[None]
        lrv = LongRunCovariance(grid=grid, labels=("f0",), sigma=sig, centering="none")
        with pytest.raises(ValueError, match="not covered"):
            estimated_driver(lrv, 100, seed=0, grid=RescaledGrid.equispaced(6))

    def test_scale_equivariance_power_of_two(self):
        # Sigma * s^2 with shared variates scales every draw by |s| exactly
        sigma0 = np.array([[1.5]])
        lrv1 = self._homogeneous_lrv(20, sigma0)
        lrv4 = self._homogeneous_lrv(20, 4.0 * sigma0)
        d1 = estimated_driver(lrv1, 150, seed=3)
        d4 = estimated_driver(lrv4, 150, seed=3)
        c1 = simulate_hmax_curves(d1)
        c4 = simulate_hmax_curves(d4)
        np.testing.assert_array_equal(c4, 2.0 * c1)

    def test_scale_equivariance_general(self):
        sigma0 = np.array([[1.0, 0.3], [0.3, 2.0]])
        lrv1 = self._homogeneous_lrv(16, sigma0)
        lrv9 = self._homogeneous_lrv(16, 9.0 * sigma0)
        c1 = simulate_hmax_curves(estimated_driver(lrv1, 120, seed=3))
        c9 = simulate_hmax_curves(estimated_driver(lrv9, 120, seed=3))
        np.testing.assert_allclose(c9, 3.0 * c1, rtol=1e-12)

    def test_from_hac_estimate(self, rng):
        x = rng.standard_normal(200)
        cov = hac_sigma(SeriesSample(x), make_family("variance"), KernelSpec("bartlett", 0.0),
                        centering="nw", h=0.2)
        driver = estimated_driver(cov, 100, seed=1, grid=RescaledGrid.equispaced(50))
        assert driver.factors.shape == (50, 1, 1)
        assert np.all(np.isfinite(driver.factors))


class TestHmaxDraw:
    def test_zero_path(self):
        path = np.zeros((1, 33))
        np.testing.assert_array_equal(hmax_draw(path), np.zeros(32))

    def test_single_grid_point(self):
        path = np.array([[0.0, 1.7]])
        assert hmax_draw(path)[0] == 0.0  # only w = v = u_1 available

    def test_monotone(self, rng):
        path = np.zeros((2, 51))
        path[:, 1:] = np.cumsum(rng.standard_normal((2, 50)), axis=1)
        h = hmax_draw(path)
        assert np.all(np.diff(h) >= 0)

    def test_matches_direct_sup(self, rng):
        # oracle: direct triple loop over (f, j, i)
        m = 12
        path = np.zeros((2, m + 1))
        path[:, 1:] = np.cumsum(rng.standard_normal((2, m)), axis=1)
        h = hmax_draw(path)
        best = 0.0
        for j in range(1, m + 1):
            for f in range(2):
                for i in range(1, j + 1):
                    best = max(best, abs(path[f, i] - (i / j) * path[f, j]))
            assert h[j - 1] == pytest.approx(best, abs=1e-12)


class TestQuantileCurve:
    def test_alpha_level_ordering(self):
        grid = RescaledGrid.equispaced(50)
        driver = pivotal_driver(grid, 800, seed=11)
        q10 = quantile_curve(driver, 0.1)
        q30 = quantile_curve(driver, 0.3)  # same driver -> shared draws
        assert np.all(q10.q >= q30.q)

    def test_monotone_in_u(self):
        driver = pivotal_driver(RescaledGrid.equispaced(64), 500, seed=4)
        curve = quantile_curve(driver, 0.1)
        assert np.all(np.diff(curve.q) >= 0)
        assert np.all(curve.q[1:] > 0)

    def test_alpha_near_one_floor(self):
        driver = pivotal_driver(RescaledGrid.equispaced(16), 200, seed=8)
        curve = quantile_curve(driver, 0.999)
        assert curve.q[0] == 0.0  # Hmax at the first point is identically 0
        ref = quantile_curve(driver, 0.1)
        assert np.all(curve.q <= ref.q)

    def test_determinism(self):
        driver = pivotal_driver(RescaledGrid.equispaced(32), 300, seed=123)
        c1 = quantile_curve(driver, 0.1)
        c2 = quantile_curve(driver, 0.1)
        np.testing.assert_array_equal(c1.q, c2.q)

    def test_seed_consistency_five_percent(self):
        # two independent seeds at 5000 draws agree within 5% relative
        grid = RescaledGrid.equispaced(64)
        qa = quantile_curve(pivotal_driver(grid, 5000, seed=1), 0.1)
        qb = quantile_curve(pivotal_driver(grid, 5000, seed=2), 0.1)
        for u in (0.25, 0.5, 1.0):
            va, vb = qa.value_at(u), qb.value_at(u)
            assert abs(va - vb) / va < 0.05

    def test_insufficient_draws(self):
        driver = pivotal_driver(RescaledGrid.equispaced(8), 50, seed=0)
        with pytest.raises(ValueError, match="at least"):
            quantile_curve(driver, 0.1)

    def test_interpolation_clamps(self):
        driver = pivotal_driver(RescaledGrid.equispaced(10), 200, seed=7)
        curve = quantile_curve(driver, 0.2)
        assert curve.value_at(0.0) == curve.q[0]
        assert curve.value_at(1.0) == curve.q[-1]
        mid = curve.value_at(0.55)
        assert curve.q[4] <= mid <= curve.q[5] or math.isclose(mid, curve.q[5])


class TestDriverValidation:
    def test_bad_kind(self):
        grid = RescaledGrid.equispaced(4)
        from gradcp import GaussianDriver

        with pytest.raises(ValueError):
            GaussianDriver(grid=grid, n_draws=10, seed=0,
                           factors=np.ones((4, 1, 1)), labels=("a",), kind="bootstrap")

    def test_path_shape(self):
        driver = pivotal_driver(RescaledGrid.equispaced(12), 10, seed=0)
        g = simulate_driver_path(driver, 42)
        assert g.shape == (1, 13)
        assert g[0, 0] == 0.0
