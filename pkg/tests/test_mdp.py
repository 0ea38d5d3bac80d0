"""Tests for tabular MDP primitives."""

import numpy as np
import pytest

from pwmdp import (
    KERNEL_ROW_TOL,
    ModeModel,
    OperatorParams,
    PiecewiseSchedule,
    QFunction,
    greedy_value,
    make_random_mode,
    sup_dist,
    validate_mode,
)


class TestQFunction:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            QFunction([[1.0, np.inf]])
        with pytest.raises(ValueError, match="finite"):
            QFunction([[np.nan]])

    def test_rejects_wrong_rank(self):
        with pytest.raises(ValueError, match="2-d"):
            QFunction([1.0, 2.0])

    def test_immutable(self):
        q = QFunction([[1.0, 2.0]])
        with pytest.raises(ValueError):
            q.values[0, 0] = 5.0

    def test_zeros(self):
        q = QFunction.zeros(3, 2)
        assert q.shape == (3, 2)
        assert (q.values == 0).all()


class TestGreedyValue:
    def test_direct_max(self):
        q = QFunction([[1.0, 2.0], [3.0, 0.0]])
        assert greedy_value(q).tolist() == [2.0, 3.0]

    def test_constant_table(self):
        q = QFunction(np.full((4, 3), 2.5))
        assert greedy_value(q).tolist() == [2.5] * 4

    def test_matches_elementwise_scan(self):
        rng = np.random.default_rng(7)
        q = QFunction(rng.uniform(-10, 10, (5, 4)))
        # independent oracle: explicit elementwise scan
        expected = []
        for s in range(5):
            best = q.values[s, 0]
            for a in range(1, 4):
                if q.values[s, a] > best:
                    best = q.values[s, a]
            expected.append(best)
        assert greedy_value(q).tolist() == expected

    def test_one_lipschitz_in_sup_norm(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            q1 = QFunction(rng.uniform(-10, 10, (4, 3)))
            q2 = QFunction(rng.uniform(-10, 10, (4, 3)))
            gap = np.abs(greedy_value(q1) - greedy_value(q2)).max()
            assert gap <= sup_dist(q1, q2) + 1e-15

    def test_monotone(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            q1 = QFunction(rng.uniform(-5, 5, (3, 4)))
            q2 = QFunction(q1.values + rng.uniform(0, 2, (3, 4)))
            assert (greedy_value(q1) <= greedy_value(q2)).all()

    def test_additive_constant(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            q = QFunction(rng.uniform(-5, 5, (3, 4)))
            c = float(rng.uniform(-7, 7))
            shifted = greedy_value(QFunction(q.values + c))
            np.testing.assert_allclose(shifted, greedy_value(q) + c, atol=1e-12)


class TestSupDist:
    def test_identity(self):
        q = QFunction([[1.0, -2.0]])
        assert sup_dist(q, q) == 0.0

    def test_uniform_shift(self):
        q1 = QFunction([[1.0, 2.0], [3.0, 4.0]])
        q2 = QFunction(q1.values - 3.5)
        assert sup_dist(q1, q2) == 3.5

    def test_matches_exhaustive_scan(self):
        rng = np.random.default_rng(11)
        q1 = QFunction(rng.uniform(-10, 10, (6, 3)))
        q2 = QFunction(rng.uniform(-10, 10, (6, 3)))
        best = 0.0
        for s in range(6):
            for a in range(3):
                best = max(best, abs(q1.values[s, a] - q2.values[s, a]))
        assert sup_dist(q1, q2) == best

    def test_symmetric_zero_iff_equal(self):
        rng = np.random.default_rng(12)
        q1 = QFunction(rng.uniform(-1, 1, (3, 2)))
        q2 = QFunction(rng.uniform(-1, 1, (3, 2)))
        assert sup_dist(q1, q2) == sup_dist(q2, q1)
        assert sup_dist(q1, q2) > 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            sup_dist(QFunction.zeros(2, 2), QFunction.zeros(3, 2))


class TestValidateMode:
    def test_valid_model_empty_report(self):
        model = make_random_mode(0, 3, 2)
        assert validate_mode(model) == []

    def test_deficient_row_named_with_deficit(self):
        model = make_random_mode(1, 3, 2)
        kernel = model.kernel.copy()
        kernel[1, 0, :] *= 0.9
        report = validate_mode(ModeModel(model.reward, kernel, model.gamma_epi))
        assert len(report) == 1
        assert "(1,0)" in report[0]
        assert "0.1" in report[0]

    def test_negative_entry_named(self):
        model = make_random_mode(2, 2, 2)
        kernel = model.kernel.copy()
        kernel[0, 1, 1] -= 2.0
        report = validate_mode(ModeModel(model.reward, kernel, model.gamma_epi))
        assert any("kernel[0,1,1]" in line and "negative" in line for line in report)
        # the row sum is now off as well
        assert any("row (0,1)" in line for line in report)

    def test_negative_penalty_named(self):
        model = make_random_mode(3, 2, 2)
        pen = model.gamma_epi.copy()
        pen[1, 1] = -0.25
        report = validate_mode(ModeModel(model.reward, model.kernel, pen))
        assert any("gamma_epi[1,1]" in line for line in report)


class TestMakeRandomMode:
    def test_deterministic(self):
        a = make_random_mode(42, 4, 3)
        b = make_random_mode(42, 4, 3)
        assert (a.reward == b.reward).all()
        assert (a.kernel == b.kernel).all()
        assert (a.gamma_epi == b.gamma_epi).all()

    def test_construction_contract(self):
        assert validate_mode(make_random_mode(0, 3, 2)) == []

    def test_row_stochastic_sweep(self):
        for seed in range(1000):
            model = make_random_mode(seed, 3, 2)
            sums = model.kernel.sum(axis=2)
            assert np.abs(sums - 1.0).max() <= KERNEL_ROW_TOL

    def test_reward_range_respected(self):
        model = make_random_mode(9, 5, 4, reward_range=(2.0, 3.0))
        assert model.reward.min() >= 2.0
        assert model.reward.max() <= 3.0


class TestOperatorParams:
    def test_gamma_domain(self):
        with pytest.raises(ValueError):
            OperatorParams(gamma=1.0)
        with pytest.raises(ValueError):
            OperatorParams(gamma=-0.1)
        assert OperatorParams(gamma=0.0).gamma == 0.0

    def test_penalties_nonnegative(self):
        with pytest.raises(ValueError):
            OperatorParams(gamma=0.9, lambda_epi=-1.0)
        with pytest.raises(ValueError):
            OperatorParams(gamma=0.9, kappa=-0.5)


class TestPiecewiseSchedule:
    def test_mode_at_and_totals(self):
        sched = PiecewiseSchedule(((0, 3), (2, 2)))
        assert sched.total_iterations == 5
        assert [sched.mode_at(t) for t in range(5)] == [0, 0, 0, 2, 2]
        assert sched.switch_times() == [3]
        assert sched.max_mode_index == 2

    def test_rejects_bad_dwell(self):
        with pytest.raises(ValueError, match="dwell"):
            PiecewiseSchedule(((0, 0),))

    def test_rejects_negative_mode(self):
        with pytest.raises(ValueError, match="mode index"):
            PiecewiseSchedule(((-1, 5),))

    def test_beyond_end_raises(self):
        sched = PiecewiseSchedule(((0, 2),))
        with pytest.raises(ValueError):
            sched.mode_at(2)
