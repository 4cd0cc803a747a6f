import numpy as np
import pytest

from rsvm import (
    Dataset,
    GapConsistencyError,
    Hyperparams,
    dual_aggregates,
    dual_objective,
    duality_gap,
    evaluate_iterate,
    kkt_residuals,
    margin,
    margins,
    primal_from_dual,
    primal_objective,
    robust_loss,
    robust_losses,
)
from conftest import random_instance


class TestRobustLoss:
    def test_zero_weights_give_unit_loss(self, two_sample):
        ds = two_sample(0.5)
        assert robust_loss(np.zeros(1), ds.sample(0)) == 1.0

    def test_exact_margin_zero_loss(self, two_sample):
        ds = two_sample(0.0)
        assert robust_loss(np.array([1.0]), ds.sample(0)) == 0.0

    def test_hand_value(self, two_sample):
        # [1 - 1.4 + 0.3 * 1.4]_+ = 0.02
        ds = two_sample(0.3)
        assert robust_loss(np.array([1.4]), ds.sample(0)) == pytest.approx(0.02, abs=1e-12)

    def test_nonnegative_everywhere(self, two_sample):
        ds = two_sample(0.2)
        rng = np.random.default_rng(0)
        for _ in range(100):
            w = rng.normal(size=1) * 10
            assert robust_loss(w, ds.sample(0)) >= 0.0

    def test_matches_margin_identity(self):
        # loss = [1 - psi]_+ by definition of the worst-case margin.
        ds = random_instance(3)
        rng = np.random.default_rng(1)
        w = rng.normal(size=ds.dim)
        losses = robust_losses(w, ds)
        psi = margins(w, ds)
        assert np.allclose(losses, np.maximum(1 - psi, 0.0))

    def test_dimension_mismatch(self, two_sample):
        with pytest.raises(ValueError):
            robust_loss(np.zeros(2), two_sample(0.0).sample(0))


class TestPrimalObjective:
    def test_at_zero_weights(self, two_sample):
        ds = two_sample(0.3)
        hp = Hyperparams(C=1.0)
        assert primal_objective(np.zeros(1), ds, hp) == pytest.approx(ds.n * hp.C)

    def test_hand_value(self, two_sample):
        # 0.5 * 1.96 + 1 * (0.02 + 0.02) = 1.02
        ds = two_sample(0.3)
        p = primal_objective(np.array([1.4]), ds, Hyperparams(C=1.0))
        assert p == pytest.approx(1.02, abs=1e-12)

    def test_separable_optimum(self, two_sample):
        ds = two_sample(0.0)
        p = primal_objective(np.array([1.0]), ds, Hyperparams(C=1.0))
        assert p == pytest.approx(0.5, abs=1e-12)

    def test_reduces_to_classical_hinge_at_rho_zero(self):
        # Independent soft-margin evaluation.
        ds = random_instance(7, rho=0.0)
        rng = np.random.default_rng(2)
        C = 0.7
        hp = Hyperparams(C=C)
        for _ in range(20):
            w = rng.normal(size=ds.dim)
            hinge = np.maximum(1.0 - ds.y * (ds.X @ w), 0.0).sum()
            classical = 0.5 * w @ w + C * hinge
            assert primal_objective(w, ds, hp) == pytest.approx(classical, abs=1e-10)

    def test_strong_convexity(self):
        ds = random_instance(11, rho=0.05)
        hp = Hyperparams(C=2.0)
        rng = np.random.default_rng(3)
        for _ in range(50):
            w1, w2 = rng.normal(size=(2, ds.dim)) * 3
            theta = rng.uniform(0.05, 0.95)
            mid = theta * w1 + (1 - theta) * w2
            lhs = primal_objective(mid, ds, hp)
            rhs = (
                theta * primal_objective(w1, ds, hp)
                + (1 - theta) * primal_objective(w2, ds, hp)
                - 0.5 * theta * (1 - theta) * np.linalg.norm(w1 - w2) ** 2
            )
            assert lhs <= rhs + 1e-9


class TestDualAggregates:
    def test_zero(self, two_sample):
        d, s = dual_aggregates(np.zeros(2), two_sample(0.3))
        assert np.array_equal(d, [0.0]) and s == 0.0

    def test_hand_value(self, two_sample):
        d, s = dual_aggregates(np.ones(2), two_sample(0.3))
        assert d[0] == pytest.approx(2.0) and s == pytest.approx(0.6)

    def test_single_term(self, three_sample):
        d, s = dual_aggregates([0.5, 0.0, 0.0], three_sample)
        assert d[0] == pytest.approx(0.5) and s == 0.0

    def test_length_mismatch(self, two_sample):
        with pytest.raises(ValueError):
            dual_aggregates(np.zeros(3), two_sample(0.0))


class TestDualObjective:
    def test_zero(self, two_sample):
        assert dual_objective(np.zeros(2), two_sample(0.3), Hyperparams(C=1.0)) == 0.0

    def test_hand_value(self, two_sample):
        # 2 - 0.5 * (2 - 0.6)^2 = 1.02
        v = dual_objective(np.ones(2), two_sample(0.3), Hyperparams(C=1.0))
        assert v == pytest.approx(1.02, abs=1e-12)

    def test_kink_region_is_linear(self, two_sample):
        # With huge radii, ||d|| <= s for any feasible alpha.
        ds = two_sample(50.0)
        hp = Hyperparams(C=1.0)
        for a in ([0.2, 0.7], [1.0, 1.0], [0.0, 0.3]):
            assert dual_objective(a, ds, hp) == pytest.approx(sum(a), abs=1e-14)

    def test_box_violation_rejected(self, two_sample):
        hp = Hyperparams(C=1.0)
        with pytest.raises(ValueError):
            dual_objective([1.5, 0.0], two_sample(0.0), hp)
        with pytest.raises(ValueError):
            dual_objective([-0.1, 0.0], two_sample(0.0), hp)

    def test_midpoint_concavity(self):
        ds = random_instance(5, rho=0.04)
        hp = Hyperparams(C=1.0)
        rng = np.random.default_rng(4)
        for _ in range(50):
            a, b = rng.uniform(0, 1, size=(2, ds.n))
            mid = 0.5 * (a + b)
            lhs = dual_objective(mid, ds, hp)
            rhs = 0.5 * (dual_objective(a, ds, hp) + dual_objective(b, ds, hp))
            assert lhs >= rhs - 1e-12


class TestPrimalFromDual:
    def test_zero_alpha(self, two_sample):
        assert np.array_equal(primal_from_dual(np.zeros(2), two_sample(0.3)), [0.0])

    def test_hand_value(self, two_sample):
        w = primal_from_dual(np.ones(2), two_sample(0.3))
        assert w[0] == pytest.approx(1.4, abs=1e-12)

    def test_huge_radius_collapses_to_zero(self, two_sample):
        w = primal_from_dual([0.8, 0.6], two_sample(50.0))
        assert np.array_equal(w, [0.0])

    def test_continuity_away_from_kink(self):
        ds = random_instance(9, rho=0.02)
        rng = np.random.default_rng(5)
        alpha = rng.uniform(0.3, 0.7, size=ds.n)
        w0 = primal_from_dual(alpha, ds)
        for _ in range(20):
            delta = rng.normal(size=ds.n) * 1e-8
            w1 = primal_from_dual(np.clip(alpha + delta, 0, 1), ds)
            assert np.linalg.norm(w1 - w0) < 1e-6


class TestDualityGap:
    def test_at_zero(self, two_sample):
        P, D, gap = duality_gap(np.zeros(2), two_sample(0.3), Hyperparams(C=1.0))
        assert (P, D, gap) == (2.0, 0.0, 2.0)

    def test_zero_at_optimum(self, two_sample):
        P, D, gap = duality_gap(np.ones(2), two_sample(0.3), Hyperparams(C=1.0))
        assert P == pytest.approx(1.02) and D == pytest.approx(1.02)
        assert gap <= 1e-12

    def test_nonnegative_on_random_feasible_points(self):
        ds = random_instance(13, rho=0.05)
        hp = Hyperparams(C=2.0)
        rng = np.random.default_rng(6)
        for _ in range(50):
            alpha = rng.uniform(0, hp.C, size=ds.n)
            _, _, gap = duality_gap(alpha, ds, hp)
            assert gap >= 0.0

    def test_weak_duality_against_arbitrary_w(self):
        ds = random_instance(17, rho=0.03)
        hp = Hyperparams(C=1.0)
        rng = np.random.default_rng(7)
        for _ in range(30):
            alpha = rng.uniform(0, 1, size=ds.n)
            w = rng.normal(size=ds.dim) * 2
            assert dual_objective(alpha, ds, hp) <= primal_objective(w, ds, hp) + 1e-9


class TestMargin:
    def test_zero_weights(self, two_sample):
        assert margin(np.zeros(1), two_sample(0.3).sample(0)).psi == 0.0

    def test_hand_value(self, two_sample):
        m = margin(np.array([1.4]), two_sample(0.3).sample(0))
        assert m.psi == pytest.approx(0.98, abs=1e-12)

    def test_plain_inner_product_when_rho_zero(self, three_sample):
        assert margin(np.array([1.0]), three_sample.sample(2)).psi == pytest.approx(3.0)


class TestKKTResiduals:
    def test_zero_at_exact_optimum(self, two_sample):
        report = kkt_residuals(np.ones(2), two_sample(0.3), Hyperparams(C=1.0))
        assert report.max_violation == 0.0

    def test_alpha_zero_at_origin_violates(self, two_sample):
        # w = 0 gives psi = 0; the alpha=0 case demands psi >= 1.
        report = kkt_residuals(np.zeros(2), two_sample(0.0), Hyperparams(C=1.0))
        assert report.max_violation == pytest.approx(1.0)

    def test_infinite_tolerance_silences_everything(self, two_sample):
        report = kkt_residuals(np.zeros(2), two_sample(0.0), Hyperparams(C=1.0), tol=np.inf)
        assert report.max_violation == 0.0


class TestEvaluateIterate:
    def test_aggregate_consistency(self):
        ds = random_instance(19, rho=0.02)
        hp = Hyperparams(C=1.0)
        rng = np.random.default_rng(8)
        alpha = rng.uniform(0, 1, size=ds.n)
        it = evaluate_iterate(alpha, ds, hp)
        d, s = dual_aggregates(alpha, ds)
        assert np.abs(it.d - d).max() <= 1e-9 * ds.n
        assert abs(it.s - s) <= 1e-9 * ds.n
        assert it.s >= 0.0

    def test_gap_floor_clamps_jitter(self, two_sample):
        it = evaluate_iterate(np.ones(2), two_sample(0.3), Hyperparams(C=1.0))
        assert it.gap >= 0.0
