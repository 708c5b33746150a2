"""Replicable UCB-style bandit algorithms and a paired-run harness."""
from .environments import (LinearInstance, MabInstance, Trajectory, action_set_at,
                           compute_regret, lin_sample_reward, mab_sample_reward)
from .errors import ConfigError, DegenerateGridError, NumericError
from .harness import (AlgorithmParams, PairedRunReport, ReplicabilitySummary, diagnostic_suite,
                      estimate_replicability, regret_curve, run_paired)
from .randomness import SeedPlan, StreamHandle, derive_stream, paired_streams
from .replinucb import plain_linucb_run, replinucb_run
from .repmean import RepMeanParams, rep_mean, tau_schedule
from .repridge import GramState, rep_ridge
from .repucb import budget_for, plain_ucb_run, repucb_run

__version__ = "0.1.0"
