"""Run paired trials for a config and write the result files.

Each trial is a pure function of ``(config, master_seed, trial_id)``; workers
only change wall-clock time, and results are merged in trial order.
"""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .config import ExperimentConfig
from .environments import LinearInstance
from .harness import estimate_replicability, regret_curve, run_paired
from .randomness import SeedPlan
from .replinucb import batch_params

log = logging.getLogger(__name__)

REGRET_COLUMNS = ["round", "mean_regret", "p10", "p90"]
TRIAL_COLUMNS = ["trial_id", "match", "first_divergence_round", "regret_a", "regret_b"]
BATCH_COLUMNS = ["trial_id", "batch_count", "trigger_rounds"]


@dataclass
class TrialRecord:
    trial_id: int
    match: bool
    first_divergence_round: Optional[int]
    regret_a: float
    regret_b: float
    diagnostics: list
    cum_regret_a: np.ndarray
    cum_regret_b: np.ndarray
    batch_starts: Optional[list] = None
    elliptical_potential: Optional[float] = None


def run_trial(cfg: ExperimentConfig, trial_id: int) -> TrialRecord:
    inst = cfg.build_instance()
    plan = SeedPlan(cfg.master_seed, cfg.experiment_id)
    rep = run_paired(cfg.algorithm, inst, cfg.T, cfg.params, plan, trial_id)
    diags = rep.diagnostics_a + rep.diagnostics_b
    ell = next((d.lhs for d in rep.diagnostics_a if d.name == "elliptical_potential"), None)
    return TrialRecord(
        trial_id=trial_id,
        match=rep.match,
        first_divergence_round=rep.first_divergence_round,
        regret_a=rep.regret_a,
        regret_b=rep.regret_b,
        diagnostics=diags,
        cum_regret_a=rep.traj_a.cumulative_regret,
        cum_regret_b=rep.traj_b.cumulative_regret,
        batch_starts=rep.traj_a.diagnostics.get("batch_starts"),
        elliptical_potential=ell,
    )


def _run_chunk(args):
    cfg, ids = args
    return [run_trial(cfg, i) for i in ids]


def run_trials(cfg: ExperimentConfig, workers: int = 1) -> list:
    ids = list(range(cfg.trials))
    if workers <= 1 or cfg.trials == 1:
        return [run_trial(cfg, i) for i in ids]
    n_chunks = min(len(ids), workers * 4)
    chunks = [ids[k::n_chunks] for k in range(n_chunks)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_chunk, [(cfg, c) for c in chunks]))
    records = [r for part in parts for r in part]
    records.sort(key=lambda r: r.trial_id)
    return records


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def summarize(cfg: ExperimentConfig, records: list) -> dict:
    replicable = cfg.algorithm in ("repucb", "replinucb")
    summary = estimate_replicability([r.match for r in records],
                                     target=1.0 - cfg.rho if replicable else None)
    diag_counts: dict = {}
    for r in records:
        for d in r.diagnostics:
            runs, passed = diag_counts.get(d.name, (0, 0))
            diag_counts[d.name] = (runs + 1, passed + int(d.passed))
    finals = np.array([[r.regret_a, r.regret_b] for r in records]).ravel()
    out = {
        "config": cfg.resolved(),
        "replicability": asdict(summary),
        "diagnostics": {
            name: {"runs": runs, "passed": passed, "pass_rate": passed / runs}
            for name, (runs, passed) in sorted(diag_counts.items())
        },
        "regret": {
            "final_mean": float(finals.mean()),
            "final_p10": float(np.percentile(finals, 10)),
            "final_p90": float(np.percentile(finals, 90)),
        },
    }
    inst = cfg.build_instance()
    if cfg.algorithm == "replinucb":
        bp = batch_params(inst.d, cfg.T, inst.L, cfg.lam, cfg.delta, cfg.rho)
        out["batch_plan"] = asdict(bp)
    return out


def write_outputs(cfg: ExperimentConfig, records: list, out_dir) -> list:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    summary = summarize(cfg, records)
    path = out_dir / "summary.json"
    path.write_text(json.dumps(summary, indent=2) + "\n")
    written.append(path)

    curve = regret_curve([c for r in records for c in (r.cum_regret_a, r.cum_regret_b)])
    path = out_dir / "regret.csv"
    _write_csv(path, REGRET_COLUMNS,
               ((t + 1, curve.mean[t], curve.p10[t], curve.p90[t]) for t in range(cfg.T)))
    written.append(path)

    linear = isinstance(cfg.build_instance(), LinearInstance)
    columns = TRIAL_COLUMNS + (["elliptical_potential"] if linear else [])
    rows = []
    for r in records:
        row = [r.trial_id, r.match, r.first_divergence_round, r.regret_a, r.regret_b]
        if linear:
            row.append(r.elliptical_potential)
        rows.append(row)
    path = out_dir / "trials.csv"
    _write_csv(path, columns, rows)
    written.append(path)

    if cfg.algorithm == "replinucb":
        path = out_dir / "batches.csv"
        _write_csv(path, BATCH_COLUMNS,
                   # a batch opened at round t_b was triggered at the end of round t_b - 1
                   ([r.trial_id, len(r.batch_starts),
                     " ".join(str(t - 1) for t in r.batch_starts[1:])] for r in records))
        written.append(path)
    return written


def run_experiment(cfg: ExperimentConfig, out_dir, workers: Optional[int] = None) -> list:
    workers = cfg.workers if workers is None else workers
    log.info("running %d paired trials of %s (T=%d) on %d worker(s)",
             cfg.trials, cfg.algorithm, cfg.T, workers)
    records = run_trials(cfg, workers)
    return write_outputs(cfg, records, out_dir)
