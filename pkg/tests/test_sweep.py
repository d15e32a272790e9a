import numpy as np
import pytest

from capdyn import abm, sweep
from capdyn.abm import AbmConfig
from capdyn.ode import ModelParams

SMALL = AbmConfig(n_agents=30, t_steps=80, equilibrium_window=10)


class TestKStar:
    def test_logistic_curve_oracle(self):
        # steepest point of a logistic is its midpoint
        k = np.linspace(0.5, 1.0, 101)
        y = 1 / (1 + np.exp((k - 0.83) / 0.01))
        k_star, g, _, diag = sweep.locate_k_star(k, y)
        assert k_star == pytest.approx(0.83, abs=0.005)
        assert g == pytest.approx(25.0, rel=0.05)   # 1 / (4 * 0.01)
        assert diag == []

    def test_endpoint_rejected(self):
        k = np.linspace(0.5, 1.0, 11)
        k_star, _, _, diag = sweep.locate_k_star(k, np.exp(10 * k))
        assert k_star is None and "endpoint" in diag[0]

    def test_smoothing_keeps_edges(self):
        y = np.array([1.0, 0.0, 1.0, 0.0])
        np.testing.assert_allclose(sweep.moving_average3(y), [1.0, 2 / 3, 1 / 3, 0.0])

    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            sweep.locate_k_star([0.1, 0.2], [1, 0])

    def test_sweep_reports(self):
        rep = sweep.k_sweep(SMALL, np.linspace(0.6, 0.98, 8), replicates=3)
        assert len(rep.rows()) == 8 and rep.statistic.shape == (8,)
        assert np.all(rep.q25 <= rep.q75)
        with pytest.raises(KeyError):
            rep.value_at(0.123)

    def test_statistic_validation(self):
        with pytest.raises(ValueError):
            sweep.k_sweep(SMALL, [0.7, 0.8, 0.9], replicates=2, statistic="mode")


class TestGrid:
    def test_run_count(self, monkeypatch):
        calls = []
        real = abm.simulate_batch

        def counting(cfg, seeds):
            calls.append(len(seeds))
            return real(cfg, seeds)

        monkeypatch.setattr(sweep, "simulate_batch", counting)
        sweep.k_crisis_heatmap(SMALL, np.linspace(0.6, 0.95, 4), [0.0, 0.1, 0.2], replicates=3)
        assert sum(calls) == 4 * 3 * 3

    def test_worker_invariance(self):
        a = sweep.k_sweep(SMALL, np.linspace(0.6, 0.98, 6), replicates=4, workers=1)
        b = sweep.k_sweep(SMALL, np.linspace(0.6, 0.98, 6), replicates=4, workers=3)
        assert np.array_equal(a.statistic, b.statistic)

    def test_zero_crisis_row_matches_k_sweep(self):
        k = np.linspace(0.6, 0.95, 5)
        hm = sweep.k_crisis_heatmap(SMALL, k, [0.0, 0.2], replicates=3)
        rep = sweep.k_sweep(SMALL.replace(p_crisis=0.0), k, replicates=3)
        np.testing.assert_array_equal(hm.statistic[0], rep.statistic)

    def test_grid_counts_validated(self):
        with pytest.raises(ValueError):
            sweep.k_crisis_heatmap(SMALL, [0.8], [0.0, 0.1], replicates=1)
        with pytest.raises(ValueError):
            sweep.evaluate_grid([SMALL], 0, 1)

    def test_contour_interpolation(self):
        z = np.array([[1.0, 0.8, 0.2, 0.1], [1.0, 1.0, 0.6, 0.4], [1.0, 1.0, 1.0, 1.0]])
        pts = sweep.contour_crossings([0.0, 1.0, 2.0, 3.0], [0.0, 0.1, 0.2], z)
        assert pts == [(0.0, pytest.approx(1.5)), (0.1, pytest.approx(2.5))]


class TestCurves:
    def test_antifragility_ratio(self):
        rows = sweep.antifragility_curve(SMALL, k_values=(0.9,), crisis_values=(0.0, 0.25), replicates=4)
        assert rows[0]["ratio"] == 1.0
        assert rows[1]["ratio"] == pytest.approx(rows[1]["median_h"] / rows[0]["median_h"])

    def test_policy_improves_capability(self):
        rows = sweep.policy_curve(SMALL, (0.0, 0.4), replicates=5)
        assert rows[1]["median_h"] > rows[0]["median_h"]
        assert rows[0]["improvement_pct"] == 0.0

    def test_sensitivity_unknown_parameter(self):
        with pytest.raises(ValueError):
            sweep.sensitivity_suite(SMALL, "kappa")

    def test_sensitivity_shape(self):
        res = sweep.sensitivity_suite(SMALL, "beta", values=[0.02, 0.05], k_grid=np.linspace(0.6, 0.98, 6),
                                      replicates=2)
        assert len(res.rows()) == 2 and len(res.k_stars) == 2


class TestOdeGrids:
    def test_epsilon_sweep_monotone(self):
        res = sweep.epsilon_sweep()
        assert np.all(np.diff(res["time"]) < 0)
        assert 2.3 <= res["ratio"] <= 3.3

    def test_cost_to_gamma(self):
        assert sweep.cost_to_gamma(0.0) == 1.0
        assert sweep.cost_to_gamma(0.995) == 0.01

    def test_historical_regimes(self):
        m = {r["name"]: r for r in sweep.historical_markers(t_end=1000.0)}
        assert m["calculator"]["equilibrium_h"] > 0.9
        assert m["ai-2030"]["equilibrium_h"] < 0.1
        assert m["industrial-revolution"]["equilibrium_h"] > m["roman-slave-economy"]["equilibrium_h"]

    def test_slow_adoption_column_with_weak_social_pressure(self):
        # with gamma at its floor capability survives unless social pressure dominates
        g = sweep.gamma_delta_grid(n=6, delta_range=(0.01, 0.12), t_end=1000.0)
        assert np.all(g.h[:, 0] > 0.9)

    def test_strong_social_pressure_overrides_slow_adoption(self):
        g = sweep.gamma_delta_grid(n=4, delta_range=(0.5, 1.0), gamma_range=(0.01, 0.02), t_end=2000.0)
        assert g.h[-1, 0] < 0.5

    def test_initial_condition_monotone(self):
        grid = sweep.initial_condition_grid(t_end=1000.0)
        assert np.all(sweep.monotone_columns(grid))
        assert grid.labels.shape == grid.h.shape

    def test_grid_rows(self):
        g = sweep.cost_scope_grid(n=3, t_end=100.0)
        rows = g.rows()
        assert len(rows) == 9 and {"cost", "scope", "h", "d", "label"} <= set(rows[0])
        assert len(g.markers) == 4
