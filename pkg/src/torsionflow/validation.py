"""Input validation helpers shared by the estimator front end and the CLI."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .geometry import MIN_GRID, SupportFunction


def check_density(f, n_theta: int | None = None) -> np.ndarray:
    """Coerce density samples to a positive, finite 1-d float array."""
    f = np.asarray(f, dtype=float)
    if f.ndim != 1:
        raise ConfigError("f: density samples must be one-dimensional")
    n = f.size if n_theta is None else n_theta
    if f.size != n:
        raise ConfigError(f"f: expected {n} samples, got {f.size}")
    if n < MIN_GRID or n % 2:
        raise ConfigError(
            f"f: angular grid must be even and >= {MIN_GRID}, got {n}"
        )
    if not np.all(np.isfinite(f)):
        raise ConfigError("f: density samples must be finite")
    if np.any(f <= 0):
        raise ConfigError("f: density samples must be positive")
    return f


def check_support(h, n_theta: int | None = None) -> SupportFunction:
    """Coerce support samples to a SupportFunction on the expected grid."""
    if isinstance(h, SupportFunction):
        out = h
    else:
        arr = np.asarray(h, dtype=float)
        if arr.ndim != 1:
            raise ConfigError("h: support samples must be one-dimensional")
        try:
            out = SupportFunction(arr)
        except ValueError as err:
            raise ConfigError(f"h: {err}") from err
    if n_theta is not None and out.n_theta != n_theta:
        raise ConfigError(
            f"h: expected {n_theta} samples, got {out.n_theta}"
        )
    if np.any(out.samples <= 0):
        raise ConfigError("h: support samples must be positive")
    return out


def check_angles(theta) -> np.ndarray:
    """Coerce evaluation angles to a finite float array (any shape)."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ConfigError("theta: angles must be finite")
    return theta
