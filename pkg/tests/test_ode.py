import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad, solve_ivp

from capdyn import ode
from capdyn.ode import ModelParams, SystemState

FULL = ModelParams(scope=1.0)


def fd_jacobian(params, h, d, step=1e-6):
    c = ode._coeffs(params)

    def f(x, y):
        return np.array(ode._derivs(x, y, y, **c))

    return np.column_stack([(f(h + step, d) - f(h - step, d)) / (2 * step),
                            (f(h, d + step) - f(h, d - step)) / (2 * step)])


class TestParams:
    def test_baseline_defaults(self):
        p = ModelParams()
        assert (p.alpha, p.beta, p.gamma, p.delta, p.epsilon, p.scope) == (0.05, 0.03, 0.5, 0.5, 0.01, 0.7)

    @pytest.mark.parametrize("field,value", [("alpha", 0.0), ("beta", -1.0), ("k_ai", 1.5), ("scope", 0.0),
                                             ("epsilon", 0.6), ("delta", -0.1), ("alpha", float("nan"))])
    def test_rejects_out_of_range(self, field, value):
        with pytest.raises(ValueError, match=field):
            ModelParams(**{field: value})

    def test_rejects_non_numeric(self):
        with pytest.raises(TypeError):
            ModelParams(alpha="0.1")

    def test_state_bounds(self):
        with pytest.raises(ValueError):
            SystemState(1.2, 0.0)


class TestRhs:
    def test_worked_example(self):
        # hand evaluation at H=0.5, D=0.5, D_avg=0.5 with full scope
        dh, dd = ode.rhs(FULL, SystemState(0.5, 0.5), 0.5)
        assert dh == pytest.approx(0.05 * 0.51 * 0.5 * 0.5 - 0.03 * 0.5 * 0.5, abs=1e-15)
        assert dd == pytest.approx(0.5 * 0.4 * 0.5 * 0.5 + 0.5 * 0.5 * 0.5 * 0.5, abs=1e-15)

    def test_corners_are_stationary(self):
        for state in (SystemState(1.0, 0.0), SystemState(0.0, 1.0)):
            assert ode.rhs(FULL, state, state.d) == pytest.approx((0.0, 0.0), abs=1e-15)

    def test_null_state_regularised(self):
        dh, dd = ode.rhs(FULL, SystemState(0.0, 0.0), 0.0)
        assert dh == pytest.approx(FULL.alpha * FULL.epsilon)
        assert dd == 0.0


class TestIntegrate:
    def test_length_and_times(self):
        tr = ode.integrate(FULL, SystemState(0.8, 0.1), 10.0, 0.1)
        assert len(tr) == 101
        assert tr.times[-1] == pytest.approx(10.0)

    def test_matches_reference_solver(self):
        # independent oracle: adaptive RK45 at tight tolerance
        p = ModelParams(k_ai=0.8)
        tr = ode.integrate(p, SystemState(0.8, 0.3), 50.0, 0.05)
        c = ode._coeffs(p)
        ref = solve_ivp(lambda t, y: ode._derivs(y[0], y[1], y[1], **c), (0, 50), [0.8, 0.3],
                        rtol=1e-11, atol=1e-12)
        assert tr.h[-1] == pytest.approx(ref.y[0, -1], abs=1e-7)
        assert tr.d[-1] == pytest.approx(ref.y[1, -1], abs=1e-7)

    def test_fourth_order_convergence(self):
        p = ModelParams(k_ai=0.8)
        ref = ode.integrate(p, SystemState(0.8, 0.3), 20.0, 0.005).final
        e1 = abs(ode.integrate(p, SystemState(0.8, 0.3), 20.0, 0.2).final.h - ref.h)
        e2 = abs(ode.integrate(p, SystemState(0.8, 0.3), 20.0, 0.1).final.h - ref.h)
        assert e1 / e2 == pytest.approx(16, rel=0.3)

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            ode.integrate(FULL, SystemState(0.5, 0.5), 1.0, 0.0)

    def test_final_matches_trajectory(self):
        p = ModelParams()
        tr = ode.integrate(p, SystemState(0.7, 0.2), 30.0)
        h, d = ode.integrate_final(0.7, 0.2, 30.0, **ode._coeffs(p))
        assert float(h) == tr.h[-1] and float(d) == tr.d[-1]

    @settings(max_examples=40, deadline=None)
    @given(h=st.floats(0, 1), d=st.floats(0, 1), k=st.floats(0, 1.2), s=st.floats(0.05, 1.0),
           beta=st.floats(0.001, 1.0))
    def test_stays_in_unit_square(self, h, d, k, s, beta):
        tr = ode.integrate(ModelParams(k_ai=k, scope=s, beta=beta), SystemState(h, d), 20.0, 0.5)
        assert np.all((tr.h >= 0) & (tr.h <= 1) & (tr.d >= 0) & (tr.d <= 1))


class TestStability:
    @pytest.mark.parametrize("params", [FULL, ModelParams(), ModelParams(coupling="ceiling", scope=0.8),
                                        ModelParams(alpha=0.3, beta=0.2, gamma=0.1, delta=1.5, k_ai=0.4)])
    @pytest.mark.parametrize("state", [(0.3, 0.6), (0.9, 0.05), (0.5, 0.5)])
    def test_jacobian_matches_finite_differences(self, params, state):
        analytic = ode.jacobian(params, SystemState(*state))
        np.testing.assert_allclose(analytic, fd_jacobian(params, *state), atol=1e-8)

    def test_boundary_eigenvalues_match_numerics(self):
        for fp in ode.boundary_fixed_points(ModelParams(epsilon=0.0)):
            num = np.sort(np.linalg.eigvals(fd_jacobian(ModelParams(epsilon=0.0), fp.location.h, fp.location.d)).real)
            np.testing.assert_allclose(num, np.sort(fp.eigenvalues), atol=1e-8)

    def test_labels(self):
        fps = {fp.label: fp for fp in ode.boundary_fixed_points(FULL)}
        assert fps["FP1"].stability == "unstable-node" and fps["FP1"].regularized_away
        assert fps["FP2"].stability == "stable-node"
        assert fps["FP3"].stability == "stable-node"
        assert fps["FP3"].eigenvalues[0] == -FULL.beta

    def test_fp2_marginal_at_threshold(self):
        fps = {fp.label: fp for fp in ode.boundary_fixed_points(FULL.replace(k_ai=1.0))}
        assert fps["FP2"].stability == "marginal"

    def test_fp2_unstable_above_threshold(self):
        fps = {fp.label: fp for fp in ode.boundary_fixed_points(FULL.replace(k_ai=1.1))}
        assert fps["FP2"].stability == "saddle"

    def test_ceiling_coupling_has_no_closed_form(self):
        with pytest.raises(ValueError):
            ode.boundary_fixed_points(ModelParams(coupling="ceiling"))


class TestNullclinesAndSaddle:
    def test_textbook_h_nullcline(self):
        p = FULL.replace(epsilon=0.0)
        h = np.linspace(0.05, 0.95, 19)
        expected = p.alpha * (1 - h) / (p.alpha * (1 - h) + p.beta)
        np.testing.assert_allclose(ode.h_nullcline(p, h), expected, rtol=1e-12)

    def test_d_nullcline_nan_below_k(self):
        d = ode.d_nullcline(FULL.replace(k_ai=0.7), np.array([0.5, 0.8]))
        assert math.isnan(d[0]) and d[1] == pytest.approx(0.1)

    def test_nullclines_reject_out_of_range(self):
        with pytest.raises(ValueError):
            ode.nullclines(FULL, [0.5, 1.5])

    @pytest.mark.parametrize("k", [0.6, 0.7, 0.8, 0.9])
    def test_saddle_is_grid_sign_change(self, k):
        # oracle: first sign change of the nullcline gap on a dense grid
        p = FULL.replace(k_ai=k)
        grid = np.linspace(k + 1e-6, 1 - 1e-6, 200001)
        gap = np.array([ode._nullcline_gap(p, h) for h in grid[::50]])
        idx = np.flatnonzero(np.diff(np.sign(gap)) != 0)[0]
        sad = ode.interior_saddle(p)
        assert grid[::50][idx] <= sad.location.h <= grid[::50][idx + 1]
        assert sad.stability == "saddle"
        assert ode.rhs(p, sad.location, sad.location.d) == pytest.approx((0, 0), abs=1e-9)

    def test_saddle_reference_point(self):
        sad = ode.interior_saddle(FULL.replace(k_ai=0.7))
        assert sad.location.h == pytest.approx(0.8746, abs=1e-4)
        assert sad.location.d == pytest.approx(0.1746, abs=1e-4)

    @pytest.mark.parametrize("k", [1.0, 1.1])
    def test_no_saddle_at_or_above_one(self, k):
        assert ode.interior_saddle(FULL.replace(k_ai=k)) is None

    def test_no_saddle_without_social_term(self):
        assert ode.interior_saddle(FULL.replace(delta=0.0)) is None


class TestBasins:
    def test_two_attractors(self):
        p = FULL.replace(k_ai=0.7)
        assert ode.classify_basin(p, ode.AUTONOMOUS_START) == "autonomous"
        assert ode.classify_basin(p, ode.DEPENDENT_START) == "dependent"

    def test_equilibrium_vs_k_collapses_past_one(self):
        eq = ode.equilibrium_vs_k(FULL, [0.5, 0.9, 1.1])
        assert eq[0] > 0.99 and eq[1] > 0.99 and eq[2] < 0.1


class TestRecovery:
    @pytest.mark.parametrize("eps", [0.01, 0.05, 0.25])
    def test_matches_quadrature(self, eps):
        p = ModelParams(alpha=1.0, beta=0.5, epsilon=eps)
        f = lambda h: p.alpha * (h + eps) * (1 - h)
        exact, _ = quad(lambda h: 1 / f(h), 0.0, 0.5)
        assert ode.recovery_time(p, 0.0, 0.5) == pytest.approx(exact, rel=1e-6)

    def test_reference_times(self):
        times = [ode.recovery_time(ModelParams(alpha=1.0, beta=0.5, epsilon=e), 0.0, 0.5)
                 for e in (0.01, 0.05, 0.10, 0.25)]
        assert times == pytest.approx([4.579, 2.944, 2.259, 1.433], abs=2e-3)

    def test_unreachable_under_delegation(self):
        with pytest.raises(ode.UnreachableTargetError):
            ode.recovery_time(ModelParams(alpha=1.0, beta=0.5), 0.0, 0.5, d_fixed=0.9)

    def test_full_capability_is_asymptotic(self):
        assert ode.recovery_time(ModelParams(alpha=1.0, beta=0.5), 0.2, 1.0) == math.inf

    def test_zero_epsilon_from_zero_never_recovers(self):
        with pytest.raises(ode.UnreachableTargetError):
            ode.recovery_time(ModelParams(alpha=1.0, beta=0.5, epsilon=0.0), 0.0, 0.5)


class TestTwoSkill:
    def test_state_validation(self):
        with pytest.raises(ValueError):
            ode.TwoSkillState(tau1=0.6, tau2=0.6)

    def test_unknown_scenario(self):
        with pytest.raises(ValueError):
            ode.simulate_two_skill(FULL, FULL, "D")

    def test_scenario_a_skill1_is_single_skill_model(self):
        p = ModelParams(k_ai=0.95)
        tr = ode.simulate_two_skill(p, ModelParams(k_ai=0.3), "A", t_end=100.0)
        single = ode.integrate(p, SystemState(0.8, 0.1), 100.0)
        np.testing.assert_allclose(tr.h1, single.h, atol=1e-12)
        np.testing.assert_allclose(tr.d1, single.d, atol=1e-12)

    def test_reallocation_never_hurts(self):
        p1, p2 = ModelParams(k_ai=0.95), ModelParams(k_ai=0.95, scope=0.1)
        a = ode.simulate_two_skill(p1, p2, "A", t_end=200.0)
        b = ode.simulate_two_skill(p1, p2, "B", t_end=200.0)
        assert np.all(b.h2 >= a.h2 - 1e-12)
        np.testing.assert_allclose(b.tau1 + b.tau2, 1.0)
