"""Replicable ridge regression by grid rounding in whitened coordinates.

The ridge estimate is whitened with the symmetric square root of the Gram
matrix, rounded on a randomly shifted grid whose width scales with the
confidence radius, and mapped back. Whitening turns the confidence ellipsoid
into a Euclidean ball, so the rounding error and the chance that two runs land
in different cells are both controlled by the grid width.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import ConfigError, DegenerateGridError, NumericError
from .grid import draw_shift, grid_round
from .randomness import StreamHandle

__all__ = [
    "GramState", "ReplicableEstimate", "gram_update", "ridge_fit", "beta_radius",
    "matrix_sqrt_spd", "spd_sqrt_pair", "grid_round", "grid_width", "rep_ridge",
]

LOGDET_REFRESH = 256


def _logdet_spd(V: np.ndarray) -> float:
    try:
        c = linalg.cholesky(V, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise NumericError("Gram matrix is not positive definite") from exc
    return 2.0 * float(np.sum(np.log(np.diag(c))))


@dataclass
class GramState:
    """``V = lam*I + sum x x^T``, ``b = sum x y`` and ``n``.

    ``logdet`` tracks ``ln det V`` through rank-one updates and is recomputed
    from a Cholesky factor every ``LOGDET_REFRESH`` updates.
    """

    V: np.ndarray
    b: np.ndarray
    n: int
    lam: float
    logdet: float

    @classmethod
    def initial(cls, d: int, lam: float = 1.0) -> "GramState":
        if d < 1:
            raise ValueError("dimension must be >= 1")
        if not lam > 0:
            raise ValueError("lambda must be positive")
        return cls(V=lam * np.eye(d), b=np.zeros(d), n=0, lam=float(lam),
                   logdet=d * math.log(lam))

    @classmethod
    def from_data(cls, X, y, lam: float = 1.0) -> "GramState":
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        if X.shape[0] != y.size:
            raise ValueError("X and y have different lengths")
        d = X.shape[1]
        V = lam * np.eye(d) + X.T @ X
        return cls(V=V, b=X.T @ y, n=y.size, lam=float(lam), logdet=_logdet_spd(V))

    @property
    def d(self) -> int:
        return self.b.size

    def copy(self) -> "GramState":
        return GramState(self.V.copy(), self.b.copy(), self.n, self.lam, self.logdet)

    def add(self, x, y: float) -> float:
        """Absorb one observation in place; returns ``||x||^2`` in the
        inverse-Gram norm *before* the update."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.d,):
            raise ValueError(f"expected a {self.d}-vector, got shape {x.shape}")
        w = float(x @ np.linalg.solve(self.V, x))
        self.V += np.outer(x, x)
        self.b += x * y
        self.n += 1
        if self.n % LOGDET_REFRESH == 0:
            self.logdet = _logdet_spd(self.V)
        else:
            self.logdet += math.log1p(w)
        return w


def gram_update(s: GramState, x, y: float) -> GramState:
    out = s.copy()
    out.add(x, y)
    return out


def ridge_fit(s: GramState) -> np.ndarray:
    try:
        c = linalg.cho_factor(s.V, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise NumericError("Gram matrix is not positive definite") from exc
    return linalg.cho_solve(c, s.b, check_finite=False)


def beta_radius(s: GramState, delta: float, sigma: float, S: float) -> float:
    """Self-normalized confidence radius for the ridge estimate."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    log_ratio = 0.5 * (s.logdet - s.d * math.log(s.lam))
    return sigma * math.sqrt(2.0 * (log_ratio - math.log(delta))) + math.sqrt(s.lam) * S


def _check_symmetric(V: np.ndarray) -> np.ndarray:
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise ValueError("expected a square matrix")
    scale = np.linalg.norm(V)
    if np.linalg.norm(V - V.T) > 1e-10 * max(scale, np.finfo(float).tiny):
        raise ValueError("matrix is not symmetric")
    return V


def spd_sqrt_pair(V) -> tuple[np.ndarray, np.ndarray]:
    """``(V^{1/2}, V^{-1/2})`` from one symmetric eigendecomposition."""
    V = _check_symmetric(V)
    w, Q = np.linalg.eigh(0.5 * (V + V.T))
    if w[0] <= 0:
        raise NumericError(f"matrix is not positive definite (min eigenvalue {w[0]!r})")
    r = np.sqrt(w)
    W = (Q * r) @ Q.T
    W_inv = (Q / r) @ Q.T
    return 0.5 * (W + W.T), 0.5 * (W_inv + W_inv.T)


def matrix_sqrt_spd(V) -> np.ndarray:
    return spd_sqrt_pair(V)[0]


def grid_width(beta: float, d: int, rho: float, delta: float) -> float:
    return 2.0 * beta * math.sqrt(d) / (rho - 2.0 * delta)


@dataclass(frozen=True, eq=False)
class ReplicableEstimate:
    theta_tilde: np.ndarray
    theta_hat: np.ndarray
    alpha: float
    shift: np.ndarray
    beta: float
    beta_inflated: float
    z: np.ndarray


def rep_ridge(s: GramState, delta: float, rho: float, sigma: float, S: float,
              shared: StreamHandle, call_key=("ridge",)) -> ReplicableEstimate:
    """Replicable ridge estimate; the shift is read from ``shared.child(*call_key)``."""
    if not 0 < delta < 1 or not rho < 1:
        raise ConfigError(f"need delta in (0, 1) and rho < 1, got delta={delta}, rho={rho}")
    if rho <= 2 * delta:
        raise ConfigError(f"rho > 2*delta violated: rho={rho}, delta={delta}")
    if rho <= 3 * delta:
        warnings.warn(f"rho={rho} <= 3*delta={3 * delta}: the coverage guarantee needs rho > 3*delta",
                      stacklevel=2)
    d = s.d
    theta_hat = ridge_fit(s)
    beta = beta_radius(s, delta, sigma, S)
    alpha = grid_width(beta, d, rho, delta)
    if not alpha > 0:
        raise DegenerateGridError("confidence radius is zero (sigma = S = 0): grid width would be 0")
    W, W_inv = spd_sqrt_pair(s.V)
    u = draw_shift(shared.child(*call_key), alpha, d)
    z = W @ theta_hat
    theta_tilde = W_inv @ grid_round(z, alpha, u)
    return ReplicableEstimate(
        theta_tilde=theta_tilde,
        theta_hat=theta_hat,
        alpha=alpha,
        shift=u,
        beta=beta,
        beta_inflated=beta * (1.0 + d / (rho - 2.0 * delta)),
        z=z,
    )
