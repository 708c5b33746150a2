"""Monte Carlo self-checks of the replicable estimators.

Each suite returns :class:`CheckResult` rows. A replicability row passes when
the Wilson interval of the match rate reaches the required floor; a failure-rate
row passes when the interval's lower end does not exceed the allowed rate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .harness import wilson_interval
from .randomness import SeedPlan, derive_stream, paired_streams
from .repmean import RepMeanParams, rep_mean, sample_bound, tau_schedule
from .repridge import GramState, rep_ridge


@dataclass(frozen=True)
class CheckResult:
    name: str
    observed: float
    required: float
    wilson_lo: float
    wilson_hi: float
    trials: int
    passed: bool
    kind: str  # "at_least" or "at_most"

    def line(self) -> str:
        op = ">=" if self.kind == "at_least" else "<="
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: observed {self.observed:.4f} "
                f"(95% Wilson [{self.wilson_lo:.4f}, {self.wilson_hi:.4f}], n={self.trials}) "
                f"required {op} {self.required:.4f}")


def _rate_at_least(name, successes, n, floor, slack=0.0, use_lower=False):
    lo, hi = wilson_interval(successes, n)
    bound = lo if use_lower else hi
    return CheckResult(name, successes / n, floor - slack, lo, hi, n,
                       bound >= floor - slack, "at_least")


def _rate_at_most(name, failures, n, ceiling):
    lo, hi = wilson_interval(failures, n)
    return CheckResult(name, failures / n, ceiling, lo, hi, n, lo <= ceiling, "at_most")


def repmean_suite(trials: int = 2000, rho1: float = 0.2, delta1: float = 0.01,
                  mean: float = 0.5, tau: float = 0.2, seed: int = 0) -> list:
    """Bernoulli(mean) samples at the sample size the oracle needs for ``tau``."""
    p = RepMeanParams(delta1=delta1, rho1=rho1)
    n = sample_bound(tau, p)
    radius = tau_schedule(n, p)
    plan = SeedPlan(seed, "check-repmean")
    failures = matches = 0
    for trial in range(trials):
        shared, env_a, env_b = paired_streams(plan, trial)
        xa = (env_a.uniform(n) < mean).astype(np.float64)
        xb = (env_b.uniform(n) < mean).astype(np.float64)
        ma = rep_mean(xa, p, shared, call_key=(0,))
        mb = rep_mean(xb, p, shared, call_key=(0,))
        failures += abs(ma - mean) > radius
        matches += ma == mb
    return [
        _rate_at_most(f"repmean accuracy failure |mu_hat - mu| > tau(n={n})", failures, trials,
                      delta1),
        _rate_at_least("repmean paired match rate", matches, trials, 1.0 - rho1),
    ]


@dataclass(frozen=True)
class RidgeSetup:
    X: np.ndarray
    theta_star: np.ndarray
    sigma: float
    lam: float
    S: float
    delta: float
    rho: float


def fixed_design(d: int = 3, n: int = 200, sigma: float = 0.1, lam: float = 1.0,
                 S: float = 1.0, delta: float = 0.05, rho: float = 0.3,
                 theta_norm: float = 0.8, seed: int = 0) -> RidgeSetup:
    """Unit-norm covariates and a parameter of norm ``theta_norm``, fixed by ``seed``."""
    plan = SeedPlan(seed, "fixed-design")
    g = derive_stream(plan, ["X"]).normal(n * d).reshape(n, d)
    X = g / np.linalg.norm(g, axis=1, keepdims=True)
    th = derive_stream(plan, ["theta"]).normal(d)
    th = theta_norm * th / np.linalg.norm(th)
    return RidgeSetup(X, th, sigma, lam, S, delta, rho)


def _gram(setup: RidgeSetup, base: GramState, noise: np.ndarray) -> GramState:
    y = setup.X @ setup.theta_star + setup.sigma * noise
    return GramState(V=base.V, b=setup.X.T @ y, n=base.n, lam=base.lam, logdet=base.logdet)


def repridge_suite(rep_trials: int = 1000, cov_trials: int = 2000, seed: int = 0,
                   setup: RidgeSetup | None = None, rep_slack: float = 0.03) -> list:
    setup = setup or fixed_design()
    n, d = setup.X.shape
    base = GramState.from_data(setup.X, np.zeros(n), setup.lam)
    plan = SeedPlan(seed, "check-repridge")
    args = (setup.delta, setup.rho, setup.sigma, setup.S)

    matches = 0
    for trial in range(rep_trials):
        shared, env_a, env_b = paired_streams(plan, trial)
        ea = rep_ridge(_gram(setup, base, env_a.normal(n)), *args, shared)
        eb = rep_ridge(_gram(setup, base, env_b.normal(n)), *args, shared)
        matches += bool(np.array_equal(ea.theta_tilde, eb.theta_tilde))

    failures = 0
    for trial in range(rep_trials, rep_trials + cov_trials):
        shared, env_a, _ = paired_streams(plan, trial)
        est = rep_ridge(_gram(setup, base, env_a.normal(n)), *args, shared)
        diff = est.theta_tilde - setup.theta_star
        v_norm = float(np.sqrt(diff @ base.V @ diff))
        failures += v_norm > est.beta_inflated

    return [
        _rate_at_least("repridge paired match rate", matches, rep_trials, 1.0 - setup.rho,
                       slack=rep_slack, use_lower=True),
        _rate_at_most("repridge coverage failure ||theta_tilde - theta*||_V > inflated beta",
                      failures, cov_trials, setup.delta),
    ]


SUITES = {"repmean": repmean_suite, "repridge": repridge_suite}

__all__ = ["CheckResult", "RidgeSetup", "SUITES", "fixed_design",
           "repmean_suite", "repridge_suite"]
