"""Paired-run replicability experiments, regret curves and per-run checks of
the deterministic inequalities the algorithms are supposed to satisfy."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .environments import LinearInstance, MabInstance, Trajectory
from .randomness import SeedPlan, StreamHandle, paired_streams
from .replinucb import batch_params, plain_linucb_run, replinucb_run
from .repucb import budget_for, plain_ucb_run, repucb_run

MAB_ALGORITHMS = ("repucb", "plain_ucb")
LINEAR_ALGORITHMS = ("replinucb", "plain_linucb")
ALGORITHMS = MAB_ALGORITHMS + LINEAR_ALGORITHMS

Z_95 = 1.96


@dataclass(frozen=True)
class AlgorithmParams:
    rho: float = 0.25
    delta: float = 0.05
    lam: float = 1.0
    c_me: float = 8.0


@dataclass(frozen=True)
class Diagnostic:
    name: str
    lhs: float
    rhs: float
    passed: bool

    def __post_init__(self):
        object.__setattr__(self, "lhs", float(self.lhs))
        object.__setattr__(self, "rhs", float(self.rhs))
        object.__setattr__(self, "passed", bool(self.passed))


@dataclass
class PairedRunReport:
    trial_id: int
    match: bool
    first_divergence_round: Optional[int]
    regret_a: float
    regret_b: float
    diagnostics_a: list
    diagnostics_b: list
    traj_a: Optional[Trajectory] = field(default=None, repr=False)
    traj_b: Optional[Trajectory] = field(default=None, repr=False)

    def __post_init__(self):
        if self.match != (self.first_divergence_round is None):
            raise ValueError("match must be true exactly when there is no divergence round")


@dataclass(frozen=True)
class ReplicabilitySummary:
    trials: int
    matches: int
    rate: float
    wilson_lo: float
    wilson_hi: float
    target: Optional[float] = None


@dataclass(frozen=True)
class RegretCurve:
    mean: np.ndarray
    p10: np.ndarray
    p90: np.ndarray


def wilson_interval(successes: int, n: int, z: float = Z_95) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("need at least one trial")
    if not 0 <= successes <= n:
        raise ValueError("successes must lie in [0, n]")
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    return max(0.0, min(p, center - half)), min(1.0, max(p, center + half))


def check_params(algorithm: str, inst, T: int, params: AlgorithmParams):
    """Raise ConfigError if the algorithm's parameter regime is violated."""
    if algorithm == "repucb":
        budget_for(inst.K, T, params.rho, params.c_me)
    elif algorithm == "replinucb":
        batch_params(inst.d, T, inst.L, params.lam, params.delta, params.rho)
    elif algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")


def run_single(algorithm: str, inst, T: int, params: AlgorithmParams, shared, env,
               estimator=None) -> Trajectory:
    if algorithm in MAB_ALGORITHMS and not isinstance(inst, MabInstance):
        raise TypeError(f"{algorithm} needs a MabInstance")
    if algorithm in LINEAR_ALGORITHMS and not isinstance(inst, LinearInstance):
        raise TypeError(f"{algorithm} needs a LinearInstance")
    if algorithm == "repucb":
        return repucb_run(inst, T, params.rho, shared, env, estimator=estimator, c_me=params.c_me)
    if algorithm == "plain_ucb":
        return plain_ucb_run(inst, T, env)
    if algorithm == "replinucb":
        return replinucb_run(inst, T, params.delta, params.rho, shared, env, lam=params.lam,
                             estimator=estimator)
    if algorithm == "plain_linucb":
        return plain_linucb_run(inst, T, params.delta, env, lam=params.lam)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def first_divergence(a: Trajectory, b: Trajectory) -> Optional[int]:
    """1-based round of the first differing action, or None."""
    diff = np.flatnonzero(np.asarray(a.actions) != np.asarray(b.actions))
    if diff.size == 0 and a.action_vectors is not None and b.action_vectors is not None:
        # positions agree; vectors must then agree bitwise too (oblivious schedule)
        rows = np.flatnonzero(np.any(a.action_vectors != b.action_vectors, axis=1))
        diff = rows
    return int(diff[0]) + 1 if diff.size else None


def run_paired(algorithm: str, inst, T: int, params: AlgorithmParams, plan: SeedPlan,
               trial_id: int, identical_env: bool = False, estimator=None,
               keep_trajectories: bool = True) -> PairedRunReport:
    """Run ``algorithm`` twice with shared internal randomness and independent
    reward noise (or the same noise when ``identical_env``)."""
    shared, env_a, env_b = paired_streams(plan, trial_id)
    if identical_env:
        env_b = StreamHandle(env_a.plan, env_a.path)
    try:
        traj_a = run_single(algorithm, inst, T, params, shared, env_a, estimator)
        traj_b = run_single(algorithm, inst, T, params, shared, env_b, estimator)
    except ValueError as exc:
        raise type(exc)(f"trial {trial_id}: {exc}") from exc
    div = first_divergence(traj_a, traj_b)
    return PairedRunReport(
        trial_id=trial_id,
        match=div is None,
        first_divergence_round=div,
        regret_a=float(np.sum(traj_a.instant_regret)),
        regret_b=float(np.sum(traj_b.instant_regret)),
        diagnostics_a=diagnostic_suite(traj_a, inst, params),
        diagnostics_b=diagnostic_suite(traj_b, inst, params),
        traj_a=traj_a if keep_trajectories else None,
        traj_b=traj_b if keep_trajectories else None,
    )


def estimate_replicability(reports: Sequence, target: Optional[float] = None) -> ReplicabilitySummary:
    """Match rate and its 95% Wilson interval. Accepts reports or booleans."""
    flags = [bool(r.match) if hasattr(r, "match") else bool(r) for r in reports]
    if not flags:
        raise ValueError("need at least one report")
    k, n = sum(flags), len(flags)
    lo, hi = wilson_interval(k, n)
    return ReplicabilitySummary(trials=n, matches=k, rate=k / n, wilson_lo=lo, wilson_hi=hi,
                                target=target)


def regret_curve(runs: Sequence) -> RegretCurve:
    """Pointwise mean and 10th/90th percentiles of cumulative regret.

    ``runs`` may hold trajectories, paired reports (both runs are used) or
    cumulative regret arrays.
    """
    series = []
    for r in runs:
        if isinstance(r, PairedRunReport):
            if r.traj_a is None:
                raise ValueError("report was created without trajectories")
            series += [r.traj_a.cumulative_regret, r.traj_b.cumulative_regret]
        elif isinstance(r, Trajectory):
            series.append(r.cumulative_regret)
        else:
            series.append(np.asarray(r, dtype=np.float64))
    if not series:
        raise ValueError("need at least one run")
    T = len(series[0])
    if any(len(s) != T for s in series):
        raise ValueError("runs have different horizons")
    X = np.vstack(series)
    return RegretCurve(mean=X.mean(axis=0),
                       p10=np.percentile(X, 10, axis=0),
                       p90=np.percentile(X, 90, axis=0))


def _need(diag: dict, key: str):
    if key not in diag:
        raise ValueError(f"trajectory is missing the {key!r} record")
    return diag[key]


def _mab_diagnostics(traj: Trajectory, inst: MabInstance, params: AlgorithmParams) -> list:
    K, T = inst.K, traj.T
    out = []
    rr_bad = int(np.sum(np.asarray(traj.actions[:K]) != np.arange(1, K + 1)))
    out.append(Diagnostic("round_robin_init", rr_bad, 0, rr_bad == 0))
    if traj.diagnostics.get("algorithm") != "repucb":
        return out
    budget = _need(traj.diagnostics, "budget")
    calls = _need(traj.diagnostics, "calls")
    out.append(Diagnostic("repmean_calls", len(calls), budget.M, len(calls) <= budget.M))
    mu = inst.arm_means
    inaccurate = sum(1 for arm, _, _, est, radius in calls if abs(est - mu[arm - 1]) > radius)
    out.append(Diagnostic("tau_accuracy", inaccurate, 0, inaccurate == 0))
    if inaccurate == 0:
        counts = np.bincount(np.asarray(traj.actions), minlength=K + 1)[1:]
        for a, gap in enumerate(inst.gaps, start=1):
            if gap > 0:
                bound = 1.0 + 2.0 * budget.hardness(gap)
                out.append(Diagnostic(f"pull_bound_arm{a}", int(counts[a - 1]), bound,
                                      counts[a - 1] <= bound))
    return out


def _linear_diagnostics(traj: Trajectory, inst: LinearInstance, params: AlgorithmParams) -> list:
    diag = traj.diagnostics
    T, d = traj.T, inst.d
    lam = diag.get("lam", params.lam)
    potential = _need(diag, "potential")
    ell = float(np.sum(np.minimum(1.0, potential)))
    ell_bound = 2.0 * d * math.log1p(T * inst.L ** 2 / (lam * d))
    out = [Diagnostic("elliptical_potential", ell, ell_bound, ell <= ell_bound)]
    if diag.get("algorithm") != "replinucb":
        return out
    plan = _need(diag, "plan")
    starts = _need(diag, "batch_starts")
    logdets = _need(diag, "logdets")
    out.append(Diagnostic("batch_count", len(starts), plan.B, len(starts) <= plan.B))
    # every batch still allowed to trigger (b <= B-2) keeps det V_t <= q det V_{t_b}
    # until its last round
    worst_growth = -math.inf
    min_trigger_growth = math.inf
    bounds = list(starts) + [T + 1]
    for b, (t0, t1) in enumerate(zip(bounds[:-1], bounds[1:])):
        if b <= plan.B - 2:
            growth = float(np.max(logdets[t0 - 1:t1 - 1] - logdets[t0 - 1]))
            worst_growth = max(worst_growth, growth)
        if t1 <= T:
            min_trigger_growth = min(min_trigger_growth, float(logdets[t1 - 1] - logdets[t0 - 1]))
    if worst_growth > -math.inf:
        out.append(Diagnostic("within_batch_det_growth", worst_growth, plan.log_q,
                              worst_growth <= plan.log_q))
    if min_trigger_growth < math.inf:
        out.append(Diagnostic("trigger_det_growth", min_trigger_growth, plan.log_q,
                              min_trigger_growth > plan.log_q))
    return out


def diagnostic_suite(traj: Trajectory, inst, params: AlgorithmParams = AlgorithmParams()) -> list:
    """Evaluate each inequality that applies to the run's algorithm.

    For ``*_det_growth`` entries lhs/rhs are log-determinant increments versus
    ``ln q``; ``trigger_det_growth`` must hold strictly.
    """
    if isinstance(inst, MabInstance):
        return _mab_diagnostics(traj, inst, params)
    if isinstance(inst, LinearInstance):
        return _linear_diagnostics(traj, inst, params)
    raise TypeError(f"unknown instance type {type(inst).__name__}")
