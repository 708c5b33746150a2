"""Replicable scalar mean estimation for [0, 1]-valued samples.

The empirical mean is rounded to the midpoint of its cell in a randomly
shifted grid. The grid is wide compared to the Hoeffding radius, so two
independent sample sets rounded with the same shift usually land in the same
cell.

With ``tau0(n) = sqrt(ln(2/delta1) / (2n))`` and width
``alpha = 2*tau0 / (rho1 - 2*delta1)``:

* two empirical means differ by at most ``2*tau0`` except with probability
  ``2*delta1``, and a boundary falls between them with probability at most
  ``2*tau0/alpha = rho1 - 2*delta1``, so outputs agree w.p. ``>= 1 - rho1``;
* ``|mu_hat - mu| <= tau0 + alpha/2 = tau0 * (1 + 1/(rho1 - 2*delta1))``
  except with probability ``delta1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import draw_shift, grid_round
from .randomness import StreamHandle

DEFAULT_C_ME = 8.0


@dataclass(frozen=True)
class RepMeanParams:
    delta1: float
    rho1: float
    c_me: float = DEFAULT_C_ME

    def __post_init__(self):
        if not 0 < self.rho1 < 1:
            raise ConfigError(f"rho1 must lie in (0, 1), got {self.rho1}")
        if not 0 < self.delta1 < 1:
            raise ConfigError(f"delta1 must lie in (0, 1), got {self.delta1}")
        if self.delta1 > self.rho1 / 4:
            raise ConfigError(
                f"delta1 <= rho1/4 violated: delta1={self.delta1!r}, rho1/4={self.rho1 / 4!r}")
        if not self.c_me > 0:
            raise ConfigError("c_me must be positive")
        # both sides scale as 1/sqrt(n), so checking n = 1 covers every n
        achieved = accuracy_radius(1, self)
        promised = tau_schedule(1, self)
        if achieved > promised:
            raise ConfigError(
                f"rounding accuracy {achieved!r} exceeds the radius schedule {promised!r} "
                f"at c_me={self.c_me}; increase c_me")


def tau_schedule(n: int, p: RepMeanParams) -> float:
    """Accuracy radius matched to ``n`` samples by the oracle's sample bound."""
    if n < 1:
        raise ValueError("tau_schedule needs n >= 1")
    return math.sqrt(p.c_me * math.log(1.0 / p.delta1) / (n * (p.rho1 - p.delta1) ** 2))


def sample_bound(tau: float, p: RepMeanParams) -> int:
    """Smallest n with ``tau_schedule(n) <= tau``."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    return math.ceil(p.c_me * math.log(1.0 / p.delta1) / (tau ** 2 * (p.rho1 - p.delta1) ** 2))


def hoeffding_radius(n: int, delta1: float) -> float:
    return math.sqrt(math.log(2.0 / delta1) / (2.0 * n))


def grid_width(n: int, p: RepMeanParams) -> float:
    return 2.0 * hoeffding_radius(n, p.delta1) / (p.rho1 - 2.0 * p.delta1)


def accuracy_radius(n: int, p: RepMeanParams) -> float:
    return hoeffding_radius(n, p.delta1) * (1.0 + 1.0 / (p.rho1 - 2.0 * p.delta1))


def exact_mean(samples) -> float:
    # fsum is order independent, so the result depends only on the multiset
    return math.fsum(samples) / len(samples)


def rep_mean(samples, p: RepMeanParams, shared: StreamHandle, call_key=()) -> float:
    """Replicable estimate of the mean of ``samples``.

    The grid shift is read from ``shared.child("repmean", *call_key)``, so the
    same ``call_key`` yields the same shift regardless of earlier draws.
    """
    x = np.asarray(samples, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise ValueError("rep_mean needs at least one sample")
    if np.any(x < 0.0) or np.any(x > 1.0) or not np.all(np.isfinite(x)):
        raise ValueError("rep_mean samples must lie in [0, 1]")
    n = x.size
    alpha = grid_width(n, p)
    u = draw_shift(shared.child("repmean", *call_key), alpha)
    return grid_round(exact_mean(x.tolist()), alpha, float(u))
