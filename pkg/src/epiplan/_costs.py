"""Shared validation helpers for the per-day cost models."""

from __future__ import annotations

import numpy as np


def as_day_array(value, m: int, name: str) -> np.ndarray:
    """Broadcast a scalar to length m or validate a length-m sequence."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(m, float(arr))
    if arr.shape != (m,):
        raise ValueError(f"{name} must be a scalar or length-{m} sequence, "
                         f"got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def validate_cost_fields(m, a, omega, theta_plus, theta_minus, c, c0):
    if m < 1:
        raise ValueError(f"horizon m must be >= 1, got {m}")
    if a < 0 or not np.isfinite(a):
        raise ValueError(f"production rate a must be finite and >= 0, got {a}")
    if np.any(omega < 0):
        raise ValueError("weights omega must be >= 0")
    if np.any(theta_plus < 0) or np.any(theta_minus < 0):
        raise ValueError("imbalance costs theta must be >= 0")
    if not (np.any(theta_plus > 0) or np.any(theta_minus > 0)):
        raise ValueError("at least one theta_plus or theta_minus entry must be > 0")
    if np.any(c < 0):
        raise ValueError("possession costs c must be >= 0")
    if c0 < 0 or not np.isfinite(c0):
        raise ValueError(f"initial cost c0 must be finite and >= 0, got {c0}")
