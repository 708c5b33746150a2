"""Replicable batched UCB for K-armed bandits, and a plain UCB1 baseline.

Arms are numbered 1..K and every argmax breaks ties toward the smallest index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .environments import MabInstance, Trajectory, mab_instant_regret, mab_reward_from_uniform
from .errors import ConfigError
from .randomness import StreamHandle
from .repmean import DEFAULT_C_ME, RepMeanParams, rep_mean, tau_schedule

# estimator(samples, arm, call_index) -> estimate
MeanEstimator = Callable[[np.ndarray, int, int], float]


def ceil_log2(T: int) -> int:
    return (int(T) - 1).bit_length() if T >= 1 else 0


@dataclass(frozen=True)
class RepUcbBudget:
    rho: float
    K: int
    T: int
    M: int
    rho1: float
    delta1: float
    c_me: float = DEFAULT_C_ME

    @property
    def mean_params(self) -> RepMeanParams:
        return RepMeanParams(delta1=self.delta1, rho1=self.rho1, c_me=self.c_me)

    def hardness(self, gap: float) -> float:
        """Pull-count threshold H_a above which a gap-``gap`` arm stops being chosen
        (on runs where every estimate is within its radius)."""
        return (9.0 * self.c_me * math.log(1.0 / self.delta1)
                / ((self.rho1 - self.delta1) ** 2 * gap ** 2))


def call_budget(K: int, T: int) -> int:
    """Upper bound on RepMean calls in a T-round run: K(1 + ceil(log2 T))."""
    return K * (1 + ceil_log2(T))


def budget_for(K: int, T: int, rho: float, c_me: float = DEFAULT_C_ME) -> RepUcbBudget:
    if K < 1:
        raise ConfigError("need K >= 1")
    if T < K:
        raise ConfigError(f"need T >= K, got T={T}, K={K}")
    if not 0 < rho < 1:
        raise ConfigError(f"rho must lie in (0, 1), got {rho}")
    M = call_budget(K, T)
    rho1 = rho / M
    delta1 = 1.0 / (2 * M * T)
    if delta1 > rho1 / 4:
        raise ConfigError(
            f"budget infeasible: delta1 <= rho1/4 violated (delta1={delta1!r}, "
            f"rho1/4={rho1 / 4!r}, M={M})")
    budget = RepUcbBudget(rho=rho, K=K, T=T, M=M, rho1=rho1, delta1=delta1, c_me=c_me)
    budget.mean_params  # validates the estimator's own constraints
    return budget


@dataclass
class ArmState:
    samples: list = field(default_factory=list)
    count: int = 0
    estimate: float = 0.0
    radius: float = math.inf
    ucb: float = math.inf
    calls: int = 0


def select_arm(states: Sequence[ArmState]) -> int:
    best, best_u = 1, states[0].ucb
    for i, s in enumerate(states[1:], start=2):
        if s.ucb > best_u:
            best, best_u = i, s.ucb
    return best


def batch_length(count: int, t: int, T: int) -> int:
    return min(count, T - t + 1)


def default_estimator(budget: RepUcbBudget, shared: StreamHandle) -> MeanEstimator:
    params = budget.mean_params

    def estimate(samples, arm, call):
        return rep_mean(samples, params, shared, call_key=(arm, call))

    return estimate


def repucb_run(inst: MabInstance, T: int, rho: float, shared: StreamHandle,
               env: StreamHandle, estimator: Optional[MeanEstimator] = None,
               c_me: float = DEFAULT_C_ME) -> Trajectory:
    """Run RepUCB for ``T`` rounds.

    Round t's reward comes from the t-th uniform of ``env``. ``estimator``
    replaces the replicable mean oracle (used to test that equal estimates
    force equal trajectories).
    """
    K = inst.K
    budget = budget_for(K, T, rho, c_me)
    params = budget.mean_params
    if estimator is None:
        estimator = default_estimator(budget, shared)

    noise = env.uniform(T)
    actions = np.empty(T, dtype=np.int64)
    rewards = np.empty(T, dtype=np.float64)
    states = [ArmState() for _ in range(K)]
    calls = []
    batches = []

    def refresh(arm):
        st = states[arm - 1]
        est = float(estimator(np.asarray(st.samples), arm, st.calls))
        st.estimate = est
        st.radius = tau_schedule(st.count, params)
        st.ucb = est + 2.0 * st.radius
        calls.append((arm, st.calls, st.count, est, st.radius))
        st.calls += 1

    for arm in range(1, K + 1):
        r = mab_reward_from_uniform(inst, arm, noise[arm - 1])
        actions[arm - 1] = arm
        rewards[arm - 1] = r
        st = states[arm - 1]
        st.samples.append(r)
        st.count = 1
        refresh(arm)

    t = K + 1
    while t <= T:
        arm = select_arm(states)
        st = states[arm - 1]
        B = batch_length(st.count, t, T)
        r = mab_reward_from_uniform(inst, np.full(B, arm), noise[t - 1:t - 1 + B])
        actions[t - 1:t - 1 + B] = arm
        rewards[t - 1:t - 1 + B] = r
        st.samples.extend(r.tolist())
        st.count += B
        batches.append((t, arm, B))
        t += B
        refresh(arm)

    return Trajectory(
        actions=actions,
        rewards=rewards,
        instant_regret=mab_instant_regret(inst, actions),
        diagnostics={
            "algorithm": "repucb",
            "budget": budget,
            # (arm, per-arm call index, sample count, estimate, radius)
            "calls": calls,
            # (start round, arm, length)
            "batches": batches,
            "counts": [s.count for s in states],
        },
    )


def plain_ucb_run(inst: MabInstance, T: int, env: StreamHandle) -> Trajectory:
    """UCB1 with per-round updates: index ``mean + sqrt(2 ln t / N)``."""
    K = inst.K
    noise = env.uniform(T)
    actions = np.empty(T, dtype=np.int64)
    rewards = np.empty(T, dtype=np.float64)
    sums = [0.0] * K
    counts = [0] * K
    for t in range(1, T + 1):
        if t <= K:
            arm = t
        else:
            bonus_num = 2.0 * math.log(t - 1)
            arm, best = 1, -math.inf
            for a in range(K):
                u = sums[a] / counts[a] + math.sqrt(bonus_num / counts[a])
                if u > best:
                    arm, best = a + 1, u
        r = mab_reward_from_uniform(inst, arm, noise[t - 1])
        actions[t - 1] = arm
        rewards[t - 1] = r
        sums[arm - 1] += r
        counts[arm - 1] += 1
    return Trajectory(
        actions=actions,
        rewards=rewards,
        instant_regret=mab_instant_regret(inst, actions),
        diagnostics={"algorithm": "plain_ucb", "counts": counts},
    )
