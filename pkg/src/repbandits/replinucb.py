"""Replicable batched linear UCB with determinant-triggered batches, and a
per-round LinUCB baseline.

The policy changes only at batch starts. A batch ends once ``det V`` has grown
by the factor ``q`` since the batch began; at most ``B`` batches are opened.
Action-set positions are 0-based and ties go to the smallest position.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import linalg

from .environments import LinearInstance, Trajectory, action_set_at, linear_instant_regret
from .errors import ConfigError, NumericError
from .randomness import StreamHandle
from .repridge import GramState, beta_radius, rep_ridge, ridge_fit

# estimator(gram, batch_index) -> theta_tilde
BatchEstimator = Callable[[GramState, int], np.ndarray]


@dataclass(frozen=True)
class BatchPlan:
    B: int
    q: float
    log_q: float
    delta_b: float
    rho_b: float


def batch_params(d: int, T: int, L: float, lam: float, delta: float, rho: float) -> BatchPlan:
    if d < 1 or T < 1:
        raise ConfigError("need d >= 1 and T >= 1")
    if not L > 0 or not lam > 0:
        raise ConfigError("need L > 0 and lambda > 0")
    if not 0 < delta < 1 or not 0 < rho < 1:
        raise ConfigError("delta and rho must lie in (0, 1)")
    if rho <= 3 * delta:
        raise ConfigError(f"rho > 3*delta violated: rho={rho}, delta={delta}")
    growth = math.log1p(T * L * L / (lam * d))
    B = max(1, math.ceil(d * growth))
    log_q = d * growth / B
    return BatchPlan(B=B, q=math.exp(log_q), log_q=log_q, delta_b=delta / B, rho_b=rho / B)


def inflated_radius(beta: float, d: int, rho_b: float, delta_b: float) -> float:
    if d < 1:
        raise ConfigError("need d >= 1")
    if rho_b <= 2 * delta_b:
        raise ConfigError(f"rho_b > 2*delta_b violated: rho_b={rho_b}, delta_b={delta_b}")
    return beta * (1.0 + d / (rho_b - 2.0 * delta_b))


@dataclass
class BatchState:
    b: int
    t_b: int
    V_at_start: np.ndarray
    theta_tilde: np.ndarray
    beta_b: float
    beta_inflated: float
    logdet_at_start: float
    chol: tuple = None

    def __post_init__(self):
        if self.chol is None:
            try:
                self.chol = linalg.cho_factor(self.V_at_start, lower=True, check_finite=False)
            except linalg.LinAlgError as exc:
                raise NumericError("batch-start Gram matrix is not positive definite") from exc

    @property
    def det_at_start(self) -> float:
        return math.exp(self.logdet_at_start)


def ucb_scores(actions: np.ndarray, theta: np.ndarray, beta: float, chol) -> np.ndarray:
    actions = np.asarray(actions, dtype=np.float64)
    solved = linalg.cho_solve(chol, actions.T, check_finite=False)
    norms = np.sqrt(np.maximum(np.einsum("ij,ji->i", actions, solved), 0.0))
    return actions @ theta + beta * norms


def select_action(actions, bs: BatchState):
    """Smallest-position maximizer of the batch-start UCB score.

    Returns ``(vector, position)``.
    """
    actions = np.asarray(actions, dtype=np.float64)
    if actions.ndim != 2 or actions.shape[0] == 0:
        raise ValueError("action set must be a non-empty (m, d) array")
    idx = int(np.argmax(ucb_scores(actions, bs.theta_tilde, bs.beta_inflated, bs.chol)))
    return actions[idx], idx


def det_trigger(logdet_now: float, logdet_start: float, log_q: float, b: int, B: int) -> bool:
    """Whether to open batch ``b+1``: strict growth test on log-determinants."""
    return b <= B - 2 and logdet_now > log_q + logdet_start


def default_estimator(plan: BatchPlan, sigma: float, S: float,
                      shared: StreamHandle) -> BatchEstimator:
    def estimate(gram, b):
        return rep_ridge(gram, plan.delta_b, plan.rho_b, sigma, S, shared,
                         call_key=("batch", b)).theta_tilde

    return estimate


def replinucb_run(inst: LinearInstance, T: int, delta: float, rho: float,
                  shared: StreamHandle, env: StreamHandle, lam: float = 1.0,
                  estimator: Optional[BatchEstimator] = None) -> Trajectory:
    d = inst.d
    plan = batch_params(d, T, inst.L, lam, delta, rho)
    if estimator is None:
        estimator = default_estimator(plan, inst.sigma, inst.S, shared)

    noise = env.normal(T)
    gram = GramState.initial(d, lam)
    positions = np.empty(T, dtype=np.int64)
    vectors = np.empty((T, d))
    rewards = np.empty(T)
    potential = np.empty(T)
    # logdets[t-1] = ln det V_t, for t = 1..T+1
    logdets = np.empty(T + 1)
    logdets[0] = gram.logdet
    action_sets = []
    batches = []

    b, t_b, bs = 0, 1, None
    for t in range(1, T + 1):
        A = action_set_at(inst, t)
        action_sets.append(A)
        if t == t_b:
            theta_tilde = np.asarray(estimator(gram, b), dtype=np.float64)
            beta_b = beta_radius(gram, plan.delta_b, inst.sigma, inst.S)
            bs = BatchState(b=b, t_b=t_b, V_at_start=gram.V.copy(), theta_tilde=theta_tilde,
                            beta_b=beta_b,
                            beta_inflated=inflated_radius(beta_b, d, plan.rho_b, plan.delta_b),
                            logdet_at_start=gram.logdet)
            batches.append(bs)
        a, idx = select_action(A, bs)
        r = float(a @ inst.theta_star + inst.sigma * noise[t - 1])
        positions[t - 1] = idx
        vectors[t - 1] = a
        rewards[t - 1] = r
        potential[t - 1] = gram.add(a, r)
        logdets[t] = gram.logdet
        if det_trigger(gram.logdet, bs.logdet_at_start, plan.log_q, b, plan.B):
            b += 1
            t_b = t + 1

    return Trajectory(
        actions=positions,
        rewards=rewards,
        instant_regret=linear_instant_regret(inst, vectors, action_sets),
        action_vectors=vectors,
        diagnostics={
            "algorithm": "replinucb",
            "plan": plan,
            "lam": lam,
            "batch_starts": [x.t_b for x in batches],
            "batches": [
                {"b": x.b, "t_b": x.t_b, "theta_tilde": x.theta_tilde, "beta": x.beta_b,
                 "beta_inflated": x.beta_inflated, "logdet": x.logdet_at_start}
                for x in batches
            ],
            "potential": potential,
            "logdets": logdets,
            "D_T": float(logdets[-1] - d * math.log(lam)),
        },
    )


def plain_linucb_run(inst: LinearInstance, T: int, delta: float, env: StreamHandle,
                     lam: float = 1.0) -> Trajectory:
    """OFUL-style LinUCB: refit and re-score every round, no rounding."""
    if not 0 < delta < 1:
        raise ConfigError("delta must lie in (0, 1)")
    d = inst.d
    noise = env.normal(T)
    gram = GramState.initial(d, lam)
    positions = np.empty(T, dtype=np.int64)
    vectors = np.empty((T, d))
    rewards = np.empty(T)
    potential = np.empty(T)
    logdets = np.empty(T + 1)
    logdets[0] = gram.logdet
    action_sets = []
    for t in range(1, T + 1):
        A = action_set_at(inst, t)
        action_sets.append(A)
        theta_hat = ridge_fit(gram)
        beta = beta_radius(gram, delta, inst.sigma, inst.S)
        chol = linalg.cho_factor(gram.V, lower=True, check_finite=False)
        idx = int(np.argmax(ucb_scores(A, theta_hat, beta, chol)))
        a = A[idx]
        r = float(a @ inst.theta_star + inst.sigma * noise[t - 1])
        positions[t - 1] = idx
        vectors[t - 1] = a
        rewards[t - 1] = r
        potential[t - 1] = gram.add(a, r)
        logdets[t] = gram.logdet
    return Trajectory(
        actions=positions,
        rewards=rewards,
        instant_regret=linear_instant_regret(inst, vectors, action_sets),
        action_vectors=vectors,
        diagnostics={
            "algorithm": "plain_linucb",
            "lam": lam,
            "potential": potential,
            "logdets": logdets,
            "D_T": float(logdets[-1] - d * math.log(lam)),
        },
    )
