"""Reward environments: K-armed bandits with [0, 1] rewards and linear bandits
with finite, obliviously scheduled action sets."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .randomness import SeedPlan, StreamHandle, derive_stream

MAB_NOISE_KINDS = ("bernoulli", "truncated_gaussian")
SCHEDULE_KINDS = ("fixed", "sphere")

# norms are compared against L with this relative slack
_NORM_RTOL = 1e-12


@dataclass(frozen=True)
class MabInstance:
    arm_means: tuple
    noise: str = "bernoulli"
    noise_scale: float = 0.1

    def __post_init__(self):
        means = tuple(float(m) for m in self.arm_means)
        if not means:
            raise ValueError("need at least one arm")
        if any(not 0.0 <= m <= 1.0 for m in means):
            raise ValueError("arm means must lie in [0, 1]")
        if self.noise not in MAB_NOISE_KINDS:
            raise ValueError(f"noise must be one of {MAB_NOISE_KINDS}, got {self.noise!r}")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be non-negative")
        object.__setattr__(self, "arm_means", means)

    @property
    def K(self) -> int:
        return len(self.arm_means)

    @property
    def best_mean(self) -> float:
        return max(self.arm_means)

    @property
    def gaps(self) -> np.ndarray:
        mu = np.asarray(self.arm_means)
        return mu.max() - mu


def mab_reward_from_uniform(inst: MabInstance, arm, u):
    """Reward for 1-based ``arm`` driven by the uniform ``u`` (vectorizes)."""
    mu = np.asarray(inst.arm_means)[np.asarray(arm) - 1]
    u = np.asarray(u, dtype=np.float64)
    if inst.noise == "bernoulli":
        r = (u < mu).astype(np.float64)
    else:
        # Gaussian truncated symmetrically about mu keeps the mean at mu
        s = inst.noise_scale
        half = np.minimum(mu, 1.0 - mu)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(half > 0, half / s, 0.0) if s > 0 else np.zeros_like(mu)
            lo = ndtr(-c)
            x = mu + s * ndtri(lo + u * (1.0 - 2.0 * lo))
        r = np.where(c > 0, np.clip(x, mu - half, mu + half), mu)
        r = np.clip(r, 0.0, 1.0)
    return float(r) if r.ndim == 0 else r


def _check_arm(inst: MabInstance, arm: int):
    if not 1 <= arm <= inst.K:
        raise ValueError(f"arm {arm} out of range 1..{inst.K}")


def mab_sample_reward(inst: MabInstance, arm: int, env: StreamHandle) -> float:
    _check_arm(inst, arm)
    return mab_reward_from_uniform(inst, arm, env.uniform())


@dataclass(frozen=True, eq=False)
class LinearInstance:
    """Linear bandit with ``m`` actions per round.

    ``schedule="fixed"`` uses one action set for all rounds (``actions`` if
    given, otherwise ``m`` points drawn once on the sphere of radius ``L``);
    ``"sphere"`` draws a fresh set each round. Either way the set at round t
    depends only on ``(schedule_seed, t)``.
    """

    theta_star: np.ndarray
    sigma: float = 0.1
    S: float = 1.0
    L: float = 1.0
    m: int = 8
    schedule: str = "fixed"
    schedule_seed: int = 0
    actions: Optional[np.ndarray] = None
    _fixed: Optional[np.ndarray] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        theta = np.array(self.theta_star, dtype=np.float64).reshape(-1)
        if theta.size == 0:
            raise ValueError("theta_star must have dimension >= 1")
        if self.sigma < 0 or self.S < 0 or not self.L > 0:
            raise ValueError("need sigma >= 0, S >= 0, L > 0")
        if np.linalg.norm(theta) > self.S * (1 + _NORM_RTOL):
            raise ValueError(f"||theta_star|| = {np.linalg.norm(theta)} exceeds S = {self.S}")
        if self.schedule not in SCHEDULE_KINDS:
            raise ValueError(f"schedule must be one of {SCHEDULE_KINDS}, got {self.schedule!r}")
        object.__setattr__(self, "theta_star", theta)
        theta.setflags(write=False)
        fixed = None
        if self.actions is not None:
            if self.schedule != "fixed":
                raise ValueError("explicit actions require the fixed schedule")
            fixed = np.array(self.actions, dtype=np.float64)
            if fixed.ndim != 2 or fixed.shape[1] != theta.size or fixed.shape[0] == 0:
                raise ValueError("actions must be a non-empty (m, d) array")
            if np.any(np.linalg.norm(fixed, axis=1) > self.L * (1 + _NORM_RTOL)):
                raise ValueError("every action must have norm <= L")
            object.__setattr__(self, "m", fixed.shape[0])
        else:
            if self.m < 1:
                raise ValueError("m must be >= 1")
            if self.schedule == "fixed":
                fixed = self._draw_set(["fixed"])
        if fixed is not None:
            fixed.setflags(write=False)
        object.__setattr__(self, "actions", fixed)
        object.__setattr__(self, "_fixed", fixed)

    @property
    def d(self) -> int:
        return self.theta_star.size

    def _draw_set(self, path) -> np.ndarray:
        stream = derive_stream(SeedPlan(self.schedule_seed, "action-schedule"), path)
        g = stream.normal(self.m * self.d).reshape(self.m, self.d)
        norms = np.linalg.norm(g, axis=1, keepdims=True)
        return self.L * g / norms


def action_set_at(inst: LinearInstance, t: int) -> np.ndarray:
    """Action set for round ``t`` as an ``(m, d)`` array (rows are actions)."""
    if t < 1:
        raise ValueError("rounds are 1-based")
    if inst._fixed is not None:
        return inst._fixed
    a = inst._draw_set(["round", int(t)])
    a.setflags(write=False)
    return a


def lin_reward_from_normal(inst: LinearInstance, action, z: float) -> float:
    return float(np.dot(action, inst.theta_star) + inst.sigma * z)


def lin_sample_reward(inst: LinearInstance, action, env: StreamHandle) -> float:
    action = np.asarray(action, dtype=np.float64)
    if action.shape != (inst.d,):
        raise ValueError(f"action must be a {inst.d}-vector")
    if np.linalg.norm(action) > inst.L * (1 + _NORM_RTOL):
        raise ValueError(f"action norm {np.linalg.norm(action)} exceeds L = {inst.L}")
    return lin_reward_from_normal(inst, action, env.normal())


@dataclass
class Trajectory:
    """One run: ``actions`` are 1-based arm indices (MAB) or 0-based positions
    in the round's action set (linear, with the vectors in ``action_vectors``)."""

    actions: np.ndarray
    rewards: np.ndarray
    instant_regret: np.ndarray
    action_vectors: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        T = len(self.actions)
        if len(self.rewards) != T or len(self.instant_regret) != T:
            raise ValueError("actions, rewards and regret must have equal length")
        if self.action_vectors is not None and len(self.action_vectors) != T:
            raise ValueError("action_vectors length mismatch")

    @property
    def T(self) -> int:
        return len(self.actions)

    @property
    def cumulative_regret(self) -> np.ndarray:
        return np.cumsum(self.instant_regret)


def mab_instant_regret(inst: MabInstance, arms) -> np.ndarray:
    return inst.gaps[np.asarray(arms, dtype=np.int64) - 1]


def linear_instant_regret(inst: LinearInstance, action_vectors: np.ndarray,
                          action_sets: Sequence[np.ndarray] | None = None) -> np.ndarray:
    vecs = np.asarray(action_vectors, dtype=np.float64)
    T = len(vecs)
    if action_sets is None:
        action_sets = [action_set_at(inst, t) for t in range(1, T + 1)]
    if inst._fixed is not None:
        best = np.full(T, np.max(inst._fixed @ inst.theta_star))
    else:
        best = np.array([np.max(A @ inst.theta_star) for A in action_sets])
    return best - vecs @ inst.theta_star


def compute_regret(traj: Trajectory, inst) -> np.ndarray:
    """Cumulative regret series, recomputed from the actions alone."""
    if isinstance(inst, MabInstance):
        arms = np.asarray(traj.actions, dtype=np.int64)
        if arms.size and (arms.min() < 1 or arms.max() > inst.K):
            raise ValueError("trajectory does not belong to this instance")
        return np.cumsum(mab_instant_regret(inst, arms))
    if isinstance(inst, LinearInstance):
        if traj.action_vectors is None:
            raise ValueError("linear trajectory needs action_vectors")
        return np.cumsum(linear_instant_regret(inst, traj.action_vectors))
    raise TypeError(f"unknown instance type {type(inst).__name__}")


def unit_sphere_theta(d: int, norm: float, seed: int) -> np.ndarray:
    """Deterministic parameter vector of the given norm."""
    g = derive_stream(SeedPlan(seed, "theta"), ["theta", d]).normal(d)
    return norm * g / math.sqrt(float(g @ g))
