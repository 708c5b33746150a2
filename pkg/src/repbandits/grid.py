"""Randomly shifted grid rounding."""
import numpy as np


def grid_round(z, alpha, u):
    """Snap ``z`` coordinatewise to the midpoint of its cell in the grid of
    width ``alpha`` shifted by ``u``.

    Cells are ``[u + k*alpha, u + (k+1)*alpha)``; a point exactly on a boundary
    belongs to the cell on its right. Works on scalars and arrays (``u``
    broadcasts against ``z``).
    """
    if not alpha > 0:
        raise ValueError(f"grid width must be positive, got {alpha!r}")
    z = np.asarray(z, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if np.any(u < 0) or np.any(u >= alpha):
        raise ValueError("grid shift must lie in [0, alpha)")
    out = alpha * np.floor((z - u) / alpha) + u + alpha / 2
    return float(out) if out.ndim == 0 else out


def draw_shift(stream, alpha, d=None):
    """Uniform shift in ``[0, alpha)`` (per coordinate if ``d`` is given)."""
    u = stream.uniform(d) * alpha
    # u*alpha can round up to alpha itself
    return np.minimum(u, np.nextafter(alpha, 0.0))
