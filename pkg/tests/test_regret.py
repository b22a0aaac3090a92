import math

import numpy as np
import pytest

from poco.descent import DescentConfig, run_predictive_ogd
from poco.domains import EuclideanBall, UnitSimplex
from poco.objectives import (
    FunctionalTimeSeries,
    Markowitz,
    ObjectiveConstants,
    QuadraticTracking,
    contraction_factor,
)
from poco.predictors import VarPredictor
from poco.regret import (
    build_ledger,
    dynamic_regret,
    expert_regret_bound,
    minimizer_oracle,
    minimizers_batch,
    path_length,
    predictive_regret_bound,
    realized_theta_box,
)
from poco.scenarios import SwitchingProcessSpec, gen_switching

from helpers import secular_ball_minimizer, simplex_mesh_argmin


def tracking_setup():
    family = QuadraticTracking((100.0, 1.0))
    cset = EuclideanBall(center=np.zeros(2), radius=50.0)
    return family, cset


class TestMinimizerOracle:
    def test_feasible_stationary_point(self):
        family, cset = tracking_setup()
        np.testing.assert_allclose(
            minimizer_oracle(family, cset, [0.0, 0.0, 0.0]), [0.0, 0.0], atol=1e-12
        )

    def test_boundary_case_matches_secular_oracle(self):
        family, cset = tracking_setup()
        theta = np.array([100.0, 20.0, -50.0])
        xstar = minimizer_oracle(family, cset, theta)
        ref = secular_ball_minimizer((100.0, 1.0), theta[:2], np.zeros(2), 50.0)
        assert np.linalg.norm(xstar) == pytest.approx(50.0, abs=1e-9)
        assert np.linalg.norm(xstar - ref) <= 1e-6

    def test_random_boundary_cases_match_secular_oracle(self):
        rng = np.random.default_rng(14)
        for _ in range(25):
            weights = rng.uniform(0.5, 8.0, size=2)
            family = QuadraticTracking(weights)
            center = rng.normal(scale=1.0, size=2)
            cset = EuclideanBall(center=center, radius=rng.uniform(0.5, 3.0))
            target = rng.normal(scale=10.0, size=2)
            theta = np.concatenate([target, [0.0]])
            xstar = minimizer_oracle(family, cset, theta)
            ref = secular_ball_minimizer(weights, target, center, cset.radius)
            assert np.linalg.norm(xstar - ref) <= 1e-6

    def test_markowitz_vertex_on_simplex(self):
        family = Markowitz(2)
        cset = UnitSimplex(2)
        theta = family.pack([2.0, 0.0], np.eye(2), 1.0)
        xstar = minimizer_oracle(family, cset, theta)
        np.testing.assert_allclose(xstar, [1.0, 0.0], atol=1e-8)

    def test_markowitz_matches_grid_search(self):
        family = Markowitz(3)
        cset = UnitSimplex(3)
        rng = np.random.default_rng(15)
        a = rng.normal(size=(3, 3))
        sigma = a @ a.T + 0.2 * np.eye(3)
        theta = family.pack(rng.normal(size=3), sigma, 1.5)
        xstar = minimizer_oracle(family, cset, theta)

        def vals(pts):
            return np.einsum("ij,jk,ik->i", pts, sigma, pts) - 1.5 * pts @ theta[:3]

        ref = simplex_mesh_argmin(vals, 3, step=1e-3)
        assert np.linalg.norm(xstar - ref) <= 5e-3

    def test_functional_series_interior(self):
        rng = np.random.default_rng(16)
        family = FunctionalTimeSeries(
            coeffs=rng.uniform(0.5, 2.0, size=(3, 2)),
            centers=rng.normal(scale=0.2, size=(3, 2)),
        )
        cset = EuclideanBall(center=np.zeros(2), radius=5.0)
        theta = np.array([0.2, 0.5, 0.3])
        xstar = minimizer_oracle(family, cset, theta)
        np.testing.assert_allclose(
            xstar, family.unconstrained_minimizer(theta), atol=1e-10
        )

    def test_iteration_cap(self):
        family, cset = tracking_setup()
        with pytest.raises(RuntimeError, match="cap"):
            minimizer_oracle(family, cset, [100.0, 20.0, 0.0], max_iter=3)

    def test_batch_matches_scalar(self):
        family, cset = tracking_setup()
        rng = np.random.default_rng(17)
        thetas = np.column_stack(
            [rng.normal(scale=80.0, size=(30, 2)), rng.normal(size=(30, 1))]
        )
        batch = minimizers_batch(family, cset, thetas)
        for theta, row in zip(thetas, batch):
            assert np.linalg.norm(row - minimizer_oracle(family, cset, theta)) <= 1e-9


class TestAccounting:
    def test_zero_regret_at_optimum(self):
        losses = np.array([1.0, 2.0, 3.0])
        assert dynamic_regret(losses, losses) == 0.0

    def test_single_step_example(self):
        family, _ = tracking_setup()
        loss = family.value([1.0, 0.0], [0.0, 0.0, 0.0])
        opt = family.value([0.0, 0.0], [0.0, 0.0, 0.0])
        assert dynamic_regret([loss], [opt]) == 100.0

    def test_matches_reaccumulation(self):
        rng = np.random.default_rng(18)
        a = rng.normal(size=5) ** 2 + 1.0
        b = a - rng.uniform(0.0, 1.0, size=5)
        assert dynamic_regret(a, b) == pytest.approx(sum(x - y for x, y in zip(a, b)))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            dynamic_regret([1.0], [1.0, 2.0])

    def test_path_length_examples(self):
        assert path_length(np.zeros((4, 2))) == 0.0
        assert path_length(np.array([[0.0, 0.0], [3.0, 4.0]])) == 5.0
        hop = np.array([[0.0, 0.0], [3.0, 4.0]])
        alternating = np.tile(hop, (5, 1))  # 10 points, 9 hops of length 5
        assert path_length(alternating) == pytest.approx(45.0)

    def test_path_length_single_point(self):
        assert path_length(np.array([[1.0, 2.0]])) == 0.0


class TestPredictiveRegretBound:
    CONSTANTS = ObjectiveConstants(G=36000.6, L=200.0, lam=2.0, C_theta=200.0, D=1.0)

    def test_vanishing_terms(self):
        c = contraction_factor(self.CONSTANTS, 1.0 / 200.0)
        val = predictive_regret_bound(self.CONSTANTS, 1.0 / 200.0, 0.0, 1.0, 0.0)
        assert val == pytest.approx(self.CONSTANTS.G * c / (1.0 - c))

    def test_large_k_drains_path_term(self):
        val = predictive_regret_bound(
            self.CONSTANTS, 1.0 / 200.0, 0.0, 1.0, 0.0, k=5000
        )
        assert val == pytest.approx(0.0, abs=1e-12)

    def test_independent_recomputation(self):
        # second code path: assemble the same three terms from scratch
        eta, k = 1.0 / 200.0, 2
        x1_gap, p_star, p_theta = 64.02, 4905.4, 6730.2
        g, c_theta, lam = 36000.6, 200.0, 2.0
        c = math.sqrt(1.0 - 2.0 * lam * eta / (1.0 + eta * lam))
        by_hand = (
            g * x1_gap / (1 - c**k)
            + g * (c**k) * p_star / (1 - c**k)
            + g * eta * c_theta * p_theta / (1 - c)
        )
        val = predictive_regret_bound(self.CONSTANTS, eta, x1_gap, p_star, p_theta, k=k)
        assert val == pytest.approx(by_hand, rel=1e-12)

    def test_k_one_recovers_single_step_display(self):
        eta = 1.0 / 200.0
        c = contraction_factor(self.CONSTANTS, eta)
        g = self.CONSTANTS.G
        expected = (
            g * 2.0 / (1 - c) + g * c * 3.0 / (1 - c) + g * eta * 200.0 * 4.0 / (1 - c)
        )
        assert predictive_regret_bound(self.CONSTANTS, eta, 2.0, 3.0, 4.0) == pytest.approx(
            expected, rel=1e-12
        )

    def test_step_size_guard(self):
        with pytest.raises(ValueError, match="eta <= 1/L"):
            predictive_regret_bound(self.CONSTANTS, 1.0, 0.0, 0.0, 0.0)

    def test_negative_inputs_rejected(self):
        with pytest.raises(ValueError):
            predictive_regret_bound(self.CONSTANTS, 1.0 / 200.0, -1.0, 0.0, 0.0)


class TestExpertRegretBound:
    CONSTANTS = ObjectiveConstants(G=10.0, L=20.0, lam=1.0, C_theta=5.0, D=3.0)

    def test_single_expert_penalty(self):
        eta = 1.0 / 20.0
        base = predictive_regret_bound(self.CONSTANTS, eta, 1.0, 1.0, 1.0)
        val = expert_regret_bound(self.CONSTANTS, eta, 1.0, 1.0, 1.0, 3.0, 50, 1)
        assert val == pytest.approx(base + 3.0 * math.sqrt(100.0) / 4.0)

    def test_zero_range_no_penalty(self):
        eta = 1.0 / 20.0
        base = predictive_regret_bound(self.CONSTANTS, eta, 1.0, 1.0, 1.0)
        assert expert_regret_bound(
            self.CONSTANTS, eta, 1.0, 1.0, 1.0, 0.0, 50, 4
        ) == pytest.approx(base)

    def test_formula_recomputation(self):
        eta, d, t, n = 1.0 / 20.0, 2.5, 120, 7
        base = predictive_regret_bound(self.CONSTANTS, eta, 0.5, 2.0, 3.0)
        expected = base + d * math.sqrt(2 * t) / 4.0 * (1 + math.log(n))
        assert expert_regret_bound(
            self.CONSTANTS, eta, 0.5, 2.0, 3.0, d, t, n
        ) == pytest.approx(expected, rel=1e-12)


class TestLedger:
    def test_offset_cancels_in_regret(self):
        family, cset = tracking_setup()
        proc = SwitchingProcessSpec(horizon=60)
        thetas = gen_switching(proc, 19)
        shifted = thetas.copy()
        shifted[:, 2] += 123.456
        cfg = DescentConfig(1.0 / 200.0, 1, "standard")
        a = run_predictive_ogd(family, cset, thetas, cfg, (0.0, 40.0))
        b = run_predictive_ogd(family, cset, shifted, cfg, (0.0, 40.0))
        la = build_ledger(family, cset, a, 1.0 / 200.0)
        lb = build_ledger(family, cset, b, 1.0 / 200.0)
        assert la.reg_d == pytest.approx(lb.reg_d, abs=1e-9 * max(1.0, abs(la.reg_d)))

    def test_bound_holds_on_predictive_run(self):
        family, cset = tracking_setup()
        thetas = gen_switching(SwitchingProcessSpec(horizon=120), 20)
        traj = run_predictive_ogd(
            family, cset, thetas, DescentConfig(1.0 / 200.0, 1, "predictive"),
            (0.0, 40.0), predictor=VarPredictor(order=4, min_history=10, indices=(0, 1)),
        )
        ledger = build_ledger(family, cset, traj, 1.0 / 200.0)
        assert ledger.bound_holds
        assert ledger.reg_d <= ledger.bound
        assert ledger.p_theta > 0
        assert ledger.contraction == pytest.approx(0.990049, abs=1e-6)

    def test_zero_prediction_error_zeroes_third_term(self):
        constants = ObjectiveConstants(G=2.0, L=4.0, lam=1.0, C_theta=3.0, D=1.0)
        eta = 0.25
        c = contraction_factor(constants, eta)
        with_term = predictive_regret_bound(constants, eta, 1.0, 1.0, 1.0)
        without = predictive_regret_bound(constants, eta, 1.0, 1.0, 0.0)
        assert with_term - without == pytest.approx(2.0 * eta * 3.0 / (1 - c))
        assert predictive_regret_bound(constants, eta, 0.0, 0.0, 0.0) == 0.0

    def test_heuristic_projection_skips_bound(self, caplog):
        family = Markowitz(3)
        cset = UnitSimplex(3, mode="renormalize")
        rng = np.random.default_rng(21)
        thetas = []
        for _ in range(8):
            a = rng.normal(size=(3, 3))
            thetas.append(family.pack(rng.normal(size=3), a @ a.T + 0.1 * np.eye(3), 1.0))
        thetas = np.stack(thetas)
        traj = run_predictive_ogd(
            family, cset, thetas, DescentConfig(0.05, 1, "standard"),
            np.full(3, 1.0 / 3.0),
        )
        ledger = build_ledger(family, cset, traj, 0.05)
        assert ledger.bound is None
        assert "nonexpansive" in ledger.bound_skipped_reason
        assert ledger.reg_d >= -1e-9

    def test_realized_box_covers_observations_and_aims(self):
        thetas = np.array([[0.0, 1.0], [2.0, -1.0]])
        hats = np.array([[5.0, 0.0], [-3.0, 0.5]])
        lo, hi = realized_theta_box(thetas, hats)
        np.testing.assert_array_equal(lo, [-3.0, -1.0])
        np.testing.assert_array_equal(hi, [5.0, 1.0])

    def test_summary_lines_mention_bound(self):
        family, cset = tracking_setup()
        thetas = gen_switching(SwitchingProcessSpec(horizon=30), 22)
        traj = run_predictive_ogd(
            family, cset, thetas, DescentConfig(1.0 / 200.0, 1, "standard"), (0.0, 40.0)
        )
        ledger = build_ledger(family, cset, traj, 1.0 / 200.0)
        text = "\n".join(ledger.summary_lines())
        assert "Reg_D" in text and "regret bound" in text and "PASS" in text
