import numpy as np
import pytest

from rsvm import (
    Hyperparams,
    Partition,
    SafeBall,
    ScreenDecision,
    classify,
    dynamic_screen,
    evaluate_iterate,
    gap_ball,
    ideal_screen,
    margin_bounds,
    margins,
    solve,
    verify_no_false_screening,
)
from conftest import random_instance


class TestGapBall:
    def test_zero_gap(self, two_sample, hp):
        it = evaluate_iterate(np.ones(2), two_sample(0.3), hp)
        ball = gap_ball(it)
        assert ball.radius <= 2e-6  # sqrt of a clamped near-zero gap

    def test_radius_formula(self, two_sample, hp):
        it = evaluate_iterate(np.zeros(2), two_sample(0.3), hp)
        ball = gap_ball(it)
        # At alpha = 0 the gap is exactly C * n.
        assert ball.gap == 2.0
        assert ball.radius == pytest.approx(np.sqrt(4.0))

    def test_arbitrary_gap_arithmetic(self):
        ball = SafeBall(center=np.zeros(2), radius=np.sqrt(2 * 0.02), gap=0.02)
        assert ball.radius == pytest.approx(0.2)


class TestMarginBounds:
    def test_zero_radius_collapses_to_margin(self, two_sample):
        ds = two_sample(0.3)
        ball = SafeBall(center=np.array([1.4]), radius=0.0, gap=0.0)
        lb, ub = margin_bounds(ball, ds.sample(0))
        assert lb == pytest.approx(0.98) and ub == pytest.approx(0.98)

    def test_hand_value(self, two_sample):
        # LB = 1.4 - 0.3*(1.4+0.2) - 0.2*1 = 0.72; UB = 1.4 - 0.3*1.2 + 0.2 = 1.24
        ds = two_sample(0.3)
        ball = SafeBall(center=np.array([1.4]), radius=0.2, gap=0.02)
        lb, ub = margin_bounds(ball, ds.sample(0))
        assert lb == pytest.approx(0.72, abs=1e-12)
        assert ub == pytest.approx(1.24, abs=1e-12)

    def test_zero_center(self, two_sample):
        ds = two_sample(0.3)
        ball = SafeBall(center=np.zeros(1), radius=0.5, gap=0.125)
        lb, ub = margin_bounds(ball, ds.sample(0))
        assert lb == pytest.approx(-0.3 * 0.5 - 0.5)
        assert ub == pytest.approx(0.5)

    def test_lb_never_exceeds_ub(self):
        ds = random_instance(31, n=40, d=3, rho=0.05)
        rng = np.random.default_rng(0)
        for _ in range(50):
            ball = SafeBall(center=rng.normal(size=3), radius=float(rng.uniform(0, 2)), gap=0.0)
            lb, ub = margin_bounds(ball, ds.sample(int(rng.integers(ds.n))))
            assert lb <= ub

    def test_sandwich_on_random_ball_points(self):
        # Every w inside the ball has its margin inside [LB, UB].
        rng = np.random.default_rng(1)
        ds = random_instance(32, n=30, d=4, rho=0.05)
        center = rng.normal(size=4)
        radius = 0.7
        ball = SafeBall(center=center, radius=radius, gap=radius**2 / 2)
        bounds = [margin_bounds(ball, ds.sample(i)) for i in range(ds.n)]
        for _ in range(200):
            direction = rng.normal(size=4)
            direction /= np.linalg.norm(direction)
            w = center + direction * radius * rng.uniform() ** (1 / 4)
            psi = margins(w, ds)
            for i, (lb, ub) in enumerate(bounds):
                assert lb - 1e-12 <= psi[i] <= ub + 1e-12


class TestClassify:
    def test_screen_zero(self):
        assert classify(1.5, 2.0) is ScreenDecision.SCREEN_ZERO

    def test_screen_c(self):
        assert classify(0.2, 0.9) is ScreenDecision.SCREEN_C

    def test_keep(self):
        assert classify(0.72, 1.24) is ScreenDecision.KEEP

    def test_boundaries_kept(self):
        # The rules are strict inequalities; ties are kept for safety.
        assert classify(1.0, 1.5) is ScreenDecision.KEEP
        assert classify(0.5, 1.0) is ScreenDecision.KEEP

    def test_invalid_bounds_rejected(self):
        with pytest.raises(ValueError):
            classify(2.0, 1.0)


class TestPartition:
    def test_disjoint_cover_enforced(self):
        with pytest.raises(ValueError):
            Partition([0, 1], [1], [2])
        with pytest.raises(ValueError):
            Partition([0], [1], [3])

    def test_screened_fraction(self):
        p = Partition([0, 1], [2], [3])
        assert p.screened_fraction == pytest.approx(0.75)


class TestIdealScreen:
    def test_three_sample(self, three_sample):
        hp = Hyperparams(C=1.0, gap_tol=1e-12)
        rep = solve(three_sample, hp)
        part = ideal_screen(rep.iterate, three_sample)
        assert np.array_equal(part.screened_zero, [2])
        assert np.array_equal(np.sort(part.free), [0, 1])
        assert part.screened_C.size == 0

    def test_two_sample_saturated(self, two_sample):
        ds = two_sample(0.3)
        rep = solve(ds, Hyperparams(C=1.0, gap_tol=1e-12))
        part = ideal_screen(rep.iterate, ds)
        assert np.array_equal(part.screened_C, [0, 1])

    def test_all_saturated_when_weights_vanish(self, two_sample):
        # Huge radii force w* = 0 so every margin is 0 < 1.
        ds = two_sample(50.0)
        rep = solve(ds, Hyperparams(C=1.0, gap_tol=1e-12))
        assert np.array_equal(rep.iterate.w, [0.0])
        part = ideal_screen(rep.iterate, ds)
        assert part.screened_C.size == 2

    def test_uncertified_input_rejected(self, two_sample):
        ds = two_sample(0.3)
        it = evaluate_iterate(np.zeros(2), ds, Hyperparams(C=1.0))
        with pytest.raises(ValueError):
            ideal_screen(it, ds)


class TestDynamicScreen:
    def test_three_sample_screens_far_point(self, three_sample):
        hp = Hyperparams(C=1.0, gap_tol=1e-8)
        res = dynamic_screen(three_sample, hp)
        assert res.converged
        assert set(res.partition.screened_zero) <= {2}
        assert res.w[0] == pytest.approx(1.0, abs=1e-4)

    def test_fmin_n_degenerates_to_plain_solve(self, three_sample):
        hp = Hyperparams(C=1.0, gap_tol=1e-8)
        res = dynamic_screen(three_sample, hp, f_min=three_sample.n)
        plain = solve(three_sample, hp)
        assert len(res.trace) == 1
        assert res.partition.screened_zero.size == 0
        assert np.allclose(res.w, plain.iterate.w, atol=1e-8)

    def test_infinite_tolerance_single_trace_row(self, three_sample):
        hp = Hyperparams(C=1.0, gap_tol=np.inf)
        res = dynamic_screen(three_sample, hp)
        assert len(res.trace) == 1

    def test_monotone_free_counts(self):
        ds = random_instance(41, n=200, d=6, rho=0.02)
        res = dynamic_screen(ds, Hyperparams(C=1.0, gap_tol=1e-8))
        frees = [r.n_free for r in res.trace.rows]
        assert all(a >= b for a, b in zip(frees, frees[1:]))

    def test_partition_indices_recorded(self):
        ds = random_instance(42, n=100, d=4, rho=0.02)
        res = dynamic_screen(ds, Hyperparams(C=1.0, gap_tol=1e-8))
        screened = np.concatenate([res.partition.screened_zero, res.partition.screened_C])
        assert np.all(res.screened_at[screened] >= 1)
        assert np.all(res.screened_at[res.partition.free] == -1)

    def test_equivalence_with_unscreened(self):
        ds = random_instance(43, n=150, d=5, rho=0.03)
        hp = Hyperparams(C=1.0, gap_tol=1e-8)
        res = dynamic_screen(ds, hp)
        rep = solve(ds, hp)
        assert np.linalg.norm(res.w - rep.iterate.w) <= 10 * np.sqrt(2 * 1e-8)

    def test_trace_csv_schema(self, three_sample):
        res = dynamic_screen(three_sample, Hyperparams(C=1.0, gap_tol=1e-8))
        csv = res.trace.to_csv()
        assert csv.splitlines()[0] == "iter,gap,radius,n_zero,n_C,n_free,seconds"
        assert len(csv.splitlines()) == len(res.trace) + 1

    def test_invalid_knobs_rejected(self, three_sample):
        hp = Hyperparams(C=1.0)
        with pytest.raises(ValueError):
            dynamic_screen(three_sample, hp, f_min=-1)
        with pytest.raises(ValueError):
            dynamic_screen(three_sample, hp, screen_every=0)


class TestBallContainment:
    @pytest.mark.parametrize("rho,w_star", [(0.0, 1.0), (0.3, 1.4)])
    def test_optimum_stays_inside_every_ball(self, two_sample, rho, w_star):
        ds = two_sample(rho)
        seen = []
        solve(ds, Hyperparams(C=1.0), tol=1e-10,
              callback=lambda k, it: seen.append(it))
        assert len(seen) >= 2
        for it in seen:
            radius = np.sqrt(2 * it.gap)
            assert abs(w_star - it.w[0]) <= radius + 1e-9


class TestVerifyNoFalseScreening:
    def test_dynamic_partitions_audit_clean(self):
        for seed in range(8):
            ds = random_instance(seed + 60, n=120, d=5, rho=0.02)
            hp = Hyperparams(C=1.0, gap_tol=1e-8)
            res = dynamic_screen(ds, hp)
            report = verify_no_false_screening(res.partition, ds, hp)
            assert report.passed, (seed, report)

    def test_empty_partition_vacuous(self):
        ds = random_instance(70, n=40, d=3, rho=0.02)
        part = Partition(np.empty(0, int), np.empty(0, int), np.arange(ds.n))
        report = verify_no_false_screening(part, ds, Hyperparams(C=1.0))
        assert report.passed

    def test_adversarial_partition_fails(self):
        # Pin the worst margin violator to "certified correctly classified".
        ds = random_instance(71, n=60, d=3, sep=1.0, rho=0.05)
        hp = Hyperparams(C=1.0, gap_tol=1e-10)
        rep = solve(ds, hp)
        psi = margins(rep.iterate.w, ds)
        worst = int(np.argmin(psi))
        assert psi[worst] < 1 - 1e-3
        rest = np.setdiff1d(np.arange(ds.n), [worst])
        part = Partition(np.array([worst]), np.empty(0, int), rest)
        report = verify_no_false_screening(part, ds, hp)
        assert not report.passed
        assert worst in report.zero_violations
