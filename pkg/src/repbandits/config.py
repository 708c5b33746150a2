"""Experiment configuration: YAML (or JSON) files with a fixed schema.

MAB example::

    algorithm: repucb        # or plain_ucb
    T: 512
    rho: 0.25
    trials: 500
    master_seed: 0
    instance:
      arm_means: [0.6, 0.5, 0.4]
      noise: bernoulli       # or truncated_gaussian (with noise_scale)

Linear example::

    algorithm: replinucb     # or plain_linucb
    T: 1000
    rho: 0.3
    delta: 0.05
    lambda: 1.0
    trials: 300
    instance:
      theta_star: [0.6, 0.3] # or theta_seed + theta_norm
      sigma: 0.1
      S: 1.0
      L: 1.0
      m: 8
      schedule: fixed        # or sphere
      schedule_seed: 0
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .environments import LinearInstance, MabInstance, unit_sphere_theta
from .errors import ConfigError
from .harness import LINEAR_ALGORITHMS, MAB_ALGORITHMS, AlgorithmParams, check_params

_TOP_KEYS = {"algorithm", "T", "rho", "delta", "lambda", "c_me", "trials", "master_seed",
             "experiment_id", "workers", "output", "instance"}
_MAB_KEYS = {"arm_means", "noise", "noise_scale"}
_LIN_KEYS = {"theta_star", "theta_seed", "theta_norm", "d", "sigma", "S", "L", "m",
             "schedule", "schedule_seed", "actions"}


@dataclass
class ExperimentConfig:
    algorithm: str
    instance: dict
    T: int
    rho: float = 0.25
    delta: float = 0.05
    lam: float = 1.0
    c_me: float = 8.0
    trials: int = 100
    master_seed: int = 0
    experiment_id: str = "default"
    workers: int = 1
    output: Optional[str] = None
    _inst: Any = field(default=None, init=False, repr=False, compare=False)

    @property
    def kind(self) -> str:
        return "mab" if self.algorithm in MAB_ALGORITHMS else "linear"

    @property
    def params(self) -> AlgorithmParams:
        return AlgorithmParams(rho=self.rho, delta=self.delta, lam=self.lam, c_me=self.c_me)

    def build_instance(self):
        if self._inst is None:
            self._inst = _build_instance(self.kind, self.instance)
        return self._inst

    def resolved(self) -> dict:
        """Plain-data view of the configuration, written into summaries.

        ``workers`` and ``output`` are left out: they must not change results.
        """
        out = {k: v for k, v in asdict(self).items()
               if not k.startswith("_") and k not in ("workers", "output")}
        out["lambda"] = out.pop("lam")
        inst = self.build_instance()
        if isinstance(inst, LinearInstance):
            out["instance"] = dict(self.instance, theta_star=inst.theta_star.tolist(), m=inst.m)
        return out


def _fail(msg: str):
    raise ConfigError(msg)


def _build_instance(kind: str, section: dict):
    if not isinstance(section, dict):
        _fail("instance must be a mapping")
    try:
        if kind == "mab":
            unknown = set(section) - _MAB_KEYS
            if unknown:
                _fail(f"unknown instance keys for a MAB experiment: {sorted(unknown)}")
            if "arm_means" not in section:
                _fail("instance.arm_means is required")
            return MabInstance(tuple(section["arm_means"]), noise=section.get("noise", "bernoulli"),
                               noise_scale=float(section.get("noise_scale", 0.1)))
        unknown = set(section) - _LIN_KEYS
        if unknown:
            _fail(f"unknown instance keys for a linear experiment: {sorted(unknown)}")
        S = float(section.get("S", 1.0))
        if "theta_star" in section:
            theta = section["theta_star"]
        elif "theta_seed" in section:
            if "d" not in section:
                _fail("instance.d is required with theta_seed")
            theta = unit_sphere_theta(int(section["d"]), float(section.get("theta_norm", S)),
                                      int(section["theta_seed"]))
        else:
            _fail("instance needs theta_star or theta_seed")
        return LinearInstance(theta, sigma=float(section.get("sigma", 0.1)), S=S,
                              L=float(section.get("L", 1.0)), m=int(section.get("m", 8)),
                              schedule=section.get("schedule", "fixed"),
                              schedule_seed=int(section.get("schedule_seed", 0)),
                              actions=section.get("actions"))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid instance: {exc}") from exc


def config_from_mapping(data: dict, kind: Optional[str] = None) -> ExperimentConfig:
    """Build and fully validate a config; raises ConfigError on any problem."""
    if not isinstance(data, dict):
        _fail("config must be a mapping")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        _fail(f"unknown config keys: {sorted(unknown)}")
    for key in ("algorithm", "T", "instance"):
        if key not in data:
            _fail(f"missing required key {key!r}")
    algorithm = data["algorithm"]
    allowed = {"mab": MAB_ALGORITHMS, "linear": LINEAR_ALGORITHMS,
               None: MAB_ALGORITHMS + LINEAR_ALGORITHMS}[kind]
    if algorithm not in allowed:
        _fail(f"algorithm must be one of {list(allowed)}, got {algorithm!r}")

    def as_int(key, default=None):
        v = data.get(key, default)
        if isinstance(v, bool) or not isinstance(v, int):
            _fail(f"{key} must be an integer, got {v!r}")
        return v

    def as_float(key, default):
        v = data.get(key, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            _fail(f"{key} must be a number, got {v!r}")
        return float(v)

    cfg = ExperimentConfig(
        algorithm=algorithm,
        instance=dict(data["instance"]) if isinstance(data["instance"], dict) else data["instance"],
        T=as_int("T"),
        rho=as_float("rho", 0.25),
        delta=as_float("delta", 0.05),
        lam=as_float("lambda", 1.0),
        c_me=as_float("c_me", 8.0),
        trials=as_int("trials", 100),
        master_seed=as_int("master_seed", 0),
        experiment_id=str(data.get("experiment_id", "default")),
        workers=as_int("workers", 1),
        output=data.get("output"),
    )
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig):
    if cfg.trials < 1:
        _fail(f"trials must be >= 1, got {cfg.trials}")
    if cfg.T < 1:
        _fail(f"T must be >= 1, got {cfg.T}")
    if cfg.workers < 1:
        _fail(f"workers must be >= 1, got {cfg.workers}")
    if not 0 <= cfg.master_seed < 2 ** 64:
        _fail("master_seed must be a 64-bit unsigned integer")
    inst = cfg.build_instance()
    if isinstance(inst, MabInstance) and cfg.T < inst.K:
        _fail(f"T must be >= K, got T={cfg.T}, K={inst.K}")
    if isinstance(inst, LinearInstance) and not 0 < cfg.delta < 1:
        _fail(f"delta must lie in (0, 1), got {cfg.delta}")
    check_params(cfg.algorithm, inst, cfg.T, cfg.params)


def load_config(path, kind: Optional[str] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        _fail(f"config {path} must contain a mapping")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return config_from_mapping(data, kind)
