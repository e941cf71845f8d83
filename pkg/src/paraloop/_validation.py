"""Input checks shared by the estimators and solvers."""

from __future__ import annotations

import numbers

import numpy as np

from .errors import ConfigError


def check_positive(**values):
    for name, v in values.items():
        if not isinstance(v, numbers.Real) or not np.isfinite(v) or v <= 0:
            raise ConfigError(f"{name} must be a positive finite number, got {v!r}")


def check_int(name, v, minimum=1):
    if isinstance(v, bool) or not isinstance(v, numbers.Integral) or v < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {v!r}")
    return int(v)


def check_signal(X, allow_2d=False, dtype=None):
    """Finite 1-D (or, when allowed, 2-D row-stacked) sample array."""
    X = np.asarray(X) if dtype is None else np.asarray(X, dtype=dtype)
    if X.ndim not in ((1, 2) if allow_2d else (1,)):
        raise ValueError(f"expected a {'1-D or 2-D' if allow_2d else '1-D'} array, got shape {X.shape}")
    if X.shape[-1] == 0:
        raise ValueError("empty signal")
    if not np.issubdtype(X.dtype, np.number):
        raise ValueError("signal must be numeric")
    if not np.all(np.isfinite(X)):
        raise ValueError("signal contains non-finite values")
    return X


def check_same_length(a, b):
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("empty sequence")
    return a, b
