import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from repbandits.environments import MabInstance
from repbandits.errors import ConfigError
from repbandits.randomness import SeedPlan, paired_streams
from repbandits.repucb import (ArmState, batch_length, budget_for, call_budget, ceil_log2,
                               plain_ucb_run, repucb_run, select_arm)


def streams(seed=0, trial=0):
    shared, env, _ = paired_streams(SeedPlan(seed), trial)
    return shared, env


class TestBudget:
    def test_examples(self):
        assert budget_for(5, 1000, 0.3).M == 55
        assert call_budget(5, 1000) == 55
        # K=1, T=1 has M=1 but fails the delta1 <= rho1/4 check
        assert call_budget(1, 1) == 1
        b = budget_for(3, 512, 0.3)
        assert b.M == 30
        assert b.rho1 == pytest.approx(0.01, rel=1e-15)
        assert b.delta1 == pytest.approx(1 / 30720, rel=1e-15)

    @given(st.integers(1, 2**40))
    def test_ceil_log2(self, T):
        assert 2 ** ceil_log2(T) >= T
        assert T == 1 or 2 ** (ceil_log2(T) - 1) < T

    def test_infeasible_names_inequality(self):
        # K=1, T=1: delta1 = 1/2 exceeds rho1/4 for every rho < 1
        with pytest.raises(ConfigError, match="delta1 <= rho1/4"):
            budget_for(1, 1, 0.9)

    def test_preconditions(self):
        with pytest.raises(ConfigError):
            budget_for(3, 2, 0.3)
        with pytest.raises(ConfigError):
            budget_for(3, 10, 1.0)


class TestSelection:
    @staticmethod
    def states(*u):
        return [ArmState(ucb=x) for x in u]

    def test_examples(self):
        assert select_arm(self.states(0.5, 0.9, 0.9)) == 2
        assert select_arm(self.states(1.0, 0.2)) == 1
        assert select_arm(self.states(0.3, 0.3, 0.3)) == 1

    @given(st.lists(st.sampled_from([0.0, 0.5, 1.0, 2.0]), min_size=1, max_size=8))
    def test_smallest_maximizer(self, u):
        assert select_arm(self.states(*u)) == u.index(max(u)) + 1

    def test_batch_length(self):
        assert batch_length(4, 10, 100) == 4
        assert batch_length(8, 98, 100) == 3
        assert batch_length(1, 100, 100) == 1


class TestRun:
    inst = MabInstance((0.6, 0.5, 0.4))

    def test_round_robin_and_length(self):
        traj = repucb_run(self.inst, 512, 0.25, *streams())
        assert traj.T == 512
        assert traj.actions[:3].tolist() == [1, 2, 3]

    def test_call_budget_and_doubling(self):
        traj = repucb_run(self.inst, 512, 0.25, *streams(3))
        diag = traj.diagnostics
        assert len(diag["calls"]) <= diag["budget"].M
        counts = {a: 1 for a in (1, 2, 3)}
        for start, arm, B in diag["batches"]:
            if start + B - 1 < 512:
                assert B == counts[arm]  # doubling outside the final batch
            counts[arm] += B
        assert [counts[a] for a in (1, 2, 3)] == diag["counts"]
        assert sum(diag["counts"]) == 512

    def test_calls_use_current_count_and_tau(self):
        traj = repucb_run(self.inst, 256, 0.25, *streams(1))
        p = traj.diagnostics["budget"].mean_params
        from repbandits.repmean import tau_schedule
        for arm, call, n, est, radius in traj.diagnostics["calls"]:
            assert radius == tau_schedule(n, p)

    def test_determinism(self):
        a = repucb_run(self.inst, 300, 0.25, *streams(7))
        b = repucb_run(self.inst, 300, 0.25, *streams(7))
        assert np.array_equal(a.actions, b.actions)
        assert np.array_equal(a.rewards, b.rewards)

    def test_stubbed_estimator_ignores_rewards(self):
        def oracle(samples, arm, call):
            return self.inst.arm_means[arm - 1]

        s, e1 = streams(0, 0)
        _, e2 = streams(0, 1)
        a = repucb_run(self.inst, 512, 0.25, s, e1, estimator=oracle)
        b = repucb_run(self.inst, 512, 0.25, s, e2, estimator=oracle)
        assert np.array_equal(a.actions, b.actions)

    def test_single_arm(self):
        inst = MabInstance((0.4,))
        traj = repucb_run(inst, 64, 0.9, *streams())
        assert set(traj.actions.tolist()) == {1}
        assert traj.cumulative_regret[-1] == 0.0


class TestPlainUcb:
    def test_deterministic_rewards_pick_best(self):
        # gap 1 with constant rewards: a losing arm is only pulled while its
        # bonus sqrt(2 ln t / N) reaches 1, so it gets at most 1 + 2 ln T pulls
        T = 2000
        traj = plain_ucb_run(MabInstance((0.0, 1.0, 0.0)), T, streams()[1])
        assert traj.actions[:3].tolist() == [1, 2, 3]
        for arm in (1, 3):
            assert np.sum(traj.actions == arm) <= 1 + 2 * math.log(T)
        assert traj.actions[-1] == 2

    def test_single_arm(self):
        traj = plain_ucb_run(MabInstance((0.5,)), 50, streams()[1])
        assert set(traj.actions.tolist()) == {1}

    def test_gap_sanity(self):
        # median over 50 seeds of N_2(T)/T for a gap-0.3 instance at T=10^4
        inst = MabInstance((0.65, 0.35))
        fracs = [np.mean(plain_ucb_run(inst, 10_000, streams(s)[1]).actions == 2)
                 for s in range(50)]
        assert np.median(fracs) < 0.2
