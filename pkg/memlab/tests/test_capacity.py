# memlab/tests/test_capacity.py
import numpy as np
import pytest

from capacity.analysis import (CapacityParams, LinearDynamicSystem, brute_force_optimal_schedule,
                               capacity_of_schedule, capacity_upper_bound, empirical_contribution, f_lambda,
                               fisher_memory_curve, schedule_intervals)
from config import settings
from core.autodiff import Tensor, tanh
from core.exceptions import ArgumentError, DomainError, ResourceError
from scheduling.schedules import WriteSchedule, make_schedule


class TestFLambda:
    def test_values(self):
        assert f_lambda(7, 1.0) == 7.0
        assert f_lambda(2, 0.5) == pytest.approx(1.5)
        for lam in (0.1, 0.5, 1.0, 1.5):
            assert f_lambda(0, lam) == 0.0

    def test_continuous_at_one(self):
        assert f_lambda(5, 1 - 1e-10) == pytest.approx(5.0, rel=1e-8)

    def test_nonpositive_lambda(self):
        with pytest.raises(ArgumentError):
            f_lambda(3, 0.0)


class TestCapacityOfSchedule:
    def test_lambda_one_is_always_one(self, rng):
        for _ in range(10):
            steps = sorted(rng.choice(np.arange(1, 12), size=3, replace=False))
            score = capacity_of_schedule(WriteSchedule.from_steps(12, steps), CapacityParams(1.0, 12, 3))
            assert score.score == pytest.approx(1.0, abs=1e-15)

    def test_hand_example(self):
        score = capacity_of_schedule(WriteSchedule.from_steps(6, [3]), CapacityParams(0.9, 6, 1))
        assert score.intervals == [3, 3]
        assert score.score == pytest.approx(5.42 / 6)

    def test_no_writes_is_rnn_measure(self):
        lam, T = 0.7, 10
        score = capacity_of_schedule(WriteSchedule.from_steps(T, []), CapacityParams(lam, T, 0))
        assert score.score == pytest.approx(sum(lam ** (T - t) for t in range(1, T + 1)) / T)

    def test_intervals_sum_to_T(self):
        assert schedule_intervals([2, 5, 9], 12) == [2, 3, 4, 3]
        assert schedule_intervals([4, 8, 12], 12) == [4, 4, 4]

    def test_too_many_writes(self):
        with pytest.raises(ArgumentError):
            capacity_of_schedule(WriteSchedule.from_steps(6, [1, 2, 3]), CapacityParams(0.9, 6, 2))

    def test_linear_in_C(self):
        sched = WriteSchedule.from_steps(9, [2, 7])
        base = capacity_of_schedule(sched, CapacityParams(0.8, 9, 2)).score
        scaled = capacity_of_schedule(sched, CapacityParams(0.8, 9, 2, C=3.5)).score
        assert scaled == pytest.approx(3.5 * base)

    def test_exploding_needs_flag(self):
        with pytest.raises(ArgumentError):
            CapacityParams(1.2, 6, 1)
        assert CapacityParams(1.2, 6, 1, allow_exploding=True).lam == 1.2


class TestBruteForce:
    def test_unique_argmax(self):
        result = brute_force_optimal_schedule(CapacityParams(0.9, 6, 1))
        assert result.evaluated == 5
        assert len(result.ties) == 1
        assert result.best.schedule.sorted_steps() == [3]

    def test_two_writes(self):
        result = brute_force_optimal_schedule(CapacityParams(0.8, 9, 2))
        assert result.best.schedule.sorted_steps() == [3, 6]
        assert result.best.intervals == [3, 3, 3]

    def test_lambda_one_ties_everything(self):
        result = brute_force_optimal_schedule(CapacityParams(1.0, 7, 2))
        assert len(result.ties) == result.evaluated == 15
        assert all(t.score == pytest.approx(1.0) for t in result.ties)

    def test_guard(self, monkeypatch):
        monkeypatch.setattr(settings, 'BRUTE_FORCE_LIMIT', 10)
        with pytest.raises(ResourceError):
            brute_force_optimal_schedule(CapacityParams(0.9, 12, 3))

    def test_more_writes_than_steps(self):
        with pytest.raises(ArgumentError):
            brute_force_optimal_schedule(CapacityParams(0.9, 4, 4))

    @pytest.mark.parametrize('lam', [0.5, 0.8, 0.9, 0.99])
    def test_upper_bound_holds(self, lam):
        for T in range(2, 15):
            for D in range(0, min(4, T - 1) + 1):
                params = CapacityParams(lam, T, D)
                result = brute_force_optimal_schedule(params, keep_all=True)
                bound = capacity_upper_bound(params)
                assert max(s.score for s in result.scores) <= bound + 1e-12

    @pytest.mark.parametrize('T,D', [(6, 1), (9, 2), (12, 3), (10, 4), (12, 2)])
    def test_uniform_attains_maximum_when_divisible(self, T, D):
        params = CapacityParams(0.85, T, D)
        best = brute_force_optimal_schedule(params).best.score
        uniform = capacity_of_schedule(make_schedule('uniform', T, D, final_write=False), params)
        assert uniform.score == pytest.approx(best, abs=1e-9)

    def test_bound_nondecreasing_in_D(self):
        for lam in (0.5, 0.9):
            for T in (8, 20, 50):
                bounds = [capacity_upper_bound(CapacityParams(lam, T, D)) for D in range(0, T)]
                assert all(b2 >= b1 - 1e-12 for b1, b2 in zip(bounds, bounds[1:]))

    def test_job_count_does_not_change_result(self):
        params = CapacityParams(0.9, 20, 4)
        serial = brute_force_optimal_schedule(params, n_jobs=1)
        parallel = brute_force_optimal_schedule(params, n_jobs=2)
        assert serial.best.schedule.steps == parallel.best.schedule.steps
        assert serial.evaluated == parallel.evaluated


class TestEmpiricalContribution:
    def test_linear_system_matches_powers(self, rng):
        n, d, T = 3, 2, 5
        W = rng.normal(size=(n, d))
        U = rng.normal(scale=0.5, size=(n, n))
        lds = LinearDynamicSystem(W, U)
        profile = empirical_contribution(lds, np.zeros(n), rng.normal(size=(T, d)))
        for t in range(T):
            for i in range(t + 1):
                expected = np.linalg.norm(np.linalg.matrix_power(U, t - i) @ W, 'fro')
                assert profile.c[i, t] == pytest.approx(expected, rel=1e-10)
            assert np.isnan(profile.c[t + 1:, t]).all()

    def test_submultiplicative(self, rng):
        U = rng.normal(scale=0.4, size=(4, 4))
        profile = empirical_contribution(LinearDynamicSystem(rng.normal(size=(4, 2)), U), np.zeros(4),
                                         rng.normal(size=(6, 2)))
        u_norm = np.linalg.norm(U, 'fro')
        t = 5
        for i in range(1, t + 1):
            assert u_norm * profile.c[i, t] >= profile.c[i - 1, t] - 1e-12

    def test_no_recurrence(self, rng):
        lds = LinearDynamicSystem(rng.normal(size=(3, 2)), np.zeros((3, 3)))
        profile = empirical_contribution(lds, np.zeros(3), rng.normal(size=(4, 2)))
        for t in range(4):
            np.testing.assert_array_equal(profile.c[:t, t], np.zeros(t))

    def test_inf_norm(self, rng):
        W = rng.normal(size=(3, 2))
        profile = empirical_contribution(LinearDynamicSystem(W, np.zeros((3, 3))), np.zeros(3),
                                         rng.normal(size=(2, 2)), norm='inf')
        assert profile.c[1, 1] == pytest.approx(np.abs(W).sum(axis=1).max())

    def test_unknown_norm(self, rng):
        with pytest.raises(ArgumentError):
            empirical_contribution(LinearDynamicSystem(np.eye(2), np.eye(2)), np.zeros(2), np.zeros((2, 2)),
                                   norm='l1')

    def test_tanh_rnn_contribution_decays(self):
        T, n, d = 6, 4, 3
        totals = np.zeros(T)
        for seed in range(30):
            rng = np.random.default_rng(seed)
            W = Tensor(rng.normal(scale=0.5, size=(d, n)))
            U = Tensor(rng.normal(scale=0.2, size=(n, n)))
            profile = empirical_contribution(lambda x, h: tanh(x @ W + h @ U), np.zeros(n),
                                             rng.normal(size=(T, d)))
            totals += profile.column(T - 1)
        # oldest input contributes least
        assert np.all(np.diff(totals) > 0)


class TestFisherMemoryCurve:
    def test_zero_matrix(self, rng):
        v = rng.normal(size=4)
        J = fisher_memory_curve(np.zeros((4, 4)), v, k_max=5)
        assert J[0] == pytest.approx(v @ v)
        np.testing.assert_array_equal(J[1:], np.zeros(5))

    def test_scaled_identity(self):
        n = 5
        J = fisher_memory_curve(0.5 * np.eye(n), np.ones(n), k_max=10)
        np.testing.assert_allclose(J, n * 0.25 ** np.arange(11) * 0.75)

    def test_decay_rate_bounded_by_radius(self, rng):
        Q = np.linalg.qr(rng.normal(size=(4, 4)))[0]
        W = Q @ np.diag([0.9, 0.5, -0.3, 0.1]) @ Q.T
        J = fisher_memory_curve(W, rng.normal(size=4), k_max=50)
        ratios = J[2:] / J[1:-1]
        assert np.all(ratios <= 0.81 + 1e-9)

    def test_rotation_block(self):
        theta = 0.7
        W = 0.6 * np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        J = fisher_memory_curve(W, np.array([1.0, 2.0]), k_max=3)
        np.testing.assert_allclose(J, 5.0 * 0.36 ** np.arange(4) * 0.64)

    def test_unstable(self):
        with pytest.raises(DomainError):
            fisher_memory_curve(np.eye(3), np.ones(3))

    def test_non_normal(self):
        with pytest.raises(ArgumentError):
            fisher_memory_curve(np.array([[0.1, 0.5], [0.0, 0.2]]), np.ones(2))
