import math

import numpy as np
import pytest

from repbandits.environments import (LinearInstance, MabInstance, Trajectory, action_set_at,
                                     compute_regret, lin_sample_reward, mab_reward_from_uniform,
                                     mab_sample_reward)
from repbandits.randomness import SeedPlan, derive_stream


def env(label="env"):
    return derive_stream(SeedPlan(0), [label])


class TestMab:
    def test_degenerate_bernoulli(self):
        inst = MabInstance((1.0, 0.0))
        e = env()
        assert all(mab_sample_reward(inst, 1, e) == 1.0 for _ in range(200))
        assert all(mab_sample_reward(inst, 2, e) == 0.0 for _ in range(200))

    def test_bernoulli_mean(self):
        inst = MabInstance((0.5,))
        r = mab_reward_from_uniform(inst, np.ones(100_000, dtype=int), env().uniform(100_000))
        # Hoeffding at 1e-8 failure: sqrt(ln(2e8)/(2e5)) ~ 0.0098
        assert 0.49 <= r.mean() <= 0.51

    @pytest.mark.parametrize("mu", [0.05, 0.3, 0.5, 0.9])
    def test_truncated_gaussian_in_range_and_centered(self, mu):
        inst = MabInstance((mu,), noise="truncated_gaussian", noise_scale=0.2)
        r = mab_reward_from_uniform(inst, np.ones(100_000, dtype=int), env("tg").uniform(100_000))
        assert r.min() >= 0.0 and r.max() <= 1.0
        assert abs(r.mean() - mu) < 4 * 0.5 / math.sqrt(100_000)

    def test_truncated_gaussian_at_boundary_is_constant(self):
        inst = MabInstance((1.0, 0.0), noise="truncated_gaussian", noise_scale=0.2)
        assert mab_sample_reward(inst, 1, env()) == 1.0
        assert mab_sample_reward(inst, 2, env()) == 0.0

    def test_reward_determinism(self):
        inst = MabInstance((0.3, 0.7), noise="truncated_gaussian")
        a, b = env(), env()
        assert [mab_sample_reward(inst, 2, a) for _ in range(10)] == \
               [mab_sample_reward(inst, 2, b) for _ in range(10)]

    def test_arm_range(self):
        inst = MabInstance((0.3, 0.7))
        with pytest.raises(ValueError):
            mab_sample_reward(inst, 0, env())
        with pytest.raises(ValueError):
            mab_sample_reward(inst, 3, env())

    def test_invalid_instance(self):
        with pytest.raises(ValueError):
            MabInstance((1.2,))
        with pytest.raises(ValueError):
            MabInstance(())
        with pytest.raises(ValueError):
            MabInstance((0.5,), noise="cauchy")

    def test_gaps(self):
        inst = MabInstance((0.2, 0.9, 0.5))
        assert inst.K == 3 and inst.best_mean == 0.9
        assert np.allclose(inst.gaps, [0.7, 0.0, 0.4])


class TestLinear:
    def test_noiseless_reward(self):
        inst = LinearInstance([1.0, 0.0], sigma=0.0)
        assert lin_sample_reward(inst, [1.0, 0.0], env()) == 1.0
        inst = LinearInstance([0.3, -0.4], sigma=0.0)
        assert lin_sample_reward(inst, [0.6, 0.8], env()) == pytest.approx(0.18 - 0.32)

    def test_zero_action_noise_mean(self):
        inst = LinearInstance([0.5, 0.5], sigma=0.3)
        e = env("lin")
        r = np.array([lin_sample_reward(inst, [0.0, 0.0], e) for _ in range(100_000)])
        assert abs(r.mean()) <= 4 * 0.3 / math.sqrt(100_000)

    def test_norm_checks(self):
        with pytest.raises(ValueError):
            LinearInstance([2.0, 0.0], S=1.0)
        inst = LinearInstance([0.5, 0.0], L=1.0)
        with pytest.raises(ValueError):
            lin_sample_reward(inst, [1.0, 1.0], env())
        with pytest.raises(ValueError):
            LinearInstance([0.5, 0.0], actions=[[2.0, 0.0]])

    def test_fixed_schedule(self):
        inst = LinearInstance([0.5, 0.0], m=16, schedule="fixed")
        A1, A7 = action_set_at(inst, 1), action_set_at(inst, 7)
        assert A1.shape == (16, 2)
        assert np.array_equal(A1, A7)
        assert np.allclose(np.linalg.norm(A1, axis=1), 1.0)

    def test_sphere_schedule_oblivious(self):
        inst = LinearInstance([0.5, 0.0, 0.1], m=5, L=2.0, schedule="sphere", schedule_seed=4)
        first = action_set_at(inst, 7).copy()
        # unrelated activity in between must not matter
        derive_stream(SeedPlan(4, "action-schedule"), ["round", 7]).uniform(100)
        action_set_at(inst, 3)
        assert np.array_equal(action_set_at(inst, 7), first)
        assert not np.array_equal(action_set_at(inst, 8), first)
        assert np.all(np.linalg.norm(first, axis=1) <= 2.0 * (1 + 1e-12))
        twin = LinearInstance([0.5, 0.0, 0.1], m=5, L=2.0, schedule="sphere", schedule_seed=4)
        assert np.array_equal(action_set_at(twin, 7), first)

    def test_explicit_actions(self):
        inst = LinearInstance([1.0, 0.0], actions=[[1.0, 0.0], [0.0, 1.0]])
        assert inst.m == 2
        assert np.array_equal(action_set_at(inst, 5), np.eye(2))


class TestRegret:
    def test_all_optimal(self):
        inst = MabInstance((0.9, 0.5))
        traj = Trajectory(np.array([1, 1, 1]), np.zeros(3), np.zeros(3))
        assert np.array_equal(compute_regret(traj, inst), np.zeros(3))

    def test_mab_series(self):
        inst = MabInstance((0.9, 0.5))
        traj = Trajectory(np.array([1, 2, 2, 1]), np.zeros(4), np.zeros(4))
        assert compute_regret(traj, inst) == pytest.approx([0.0, 0.4, 0.8, 0.8])

    def test_linear_series(self):
        inst = LinearInstance([1.0, 0.0], actions=np.eye(2))
        vecs = np.array([[0.0, 1.0], [1.0, 0.0]])
        traj = Trajectory(np.array([1, 0]), np.zeros(2), np.zeros(2), action_vectors=vecs)
        assert compute_regret(traj, inst) == pytest.approx([1.0, 1.0])

    def test_nonnegative_nondecreasing(self):
        inst = MabInstance((0.2, 0.9, 0.5))
        arms = derive_stream(SeedPlan(1), ["arms"]).u64(500) % 3 + 1
        series = compute_regret(Trajectory(arms.astype(int), np.zeros(500), np.zeros(500)), inst)
        assert np.all(series >= 0) and np.all(np.diff(series) >= 0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            Trajectory(np.array([1, 2]), np.zeros(3), np.zeros(2))
