"""Central-difference gradient checking helpers (test support)."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np


def numeric_gradient(f: Callable[[], float], arr: np.ndarray, coords, h: float = 1e-5) -> np.ndarray:
    """Numeric d f / d arr at the given flat coordinates; f reads arr in place."""
    flat = arr.reshape(-1)
    out = np.zeros(len(coords))
    for k, idx in enumerate(coords):
        orig = flat[idx]
        flat[idx] = orig + h
        plus = f()
        flat[idx] = orig - h
        minus = f()
        flat[idx] = orig
        out[k] = (plus - minus) / (2.0 * h)
    return out


def pick_coords(arr: np.ndarray, limit: int, rng: np.random.Generator) -> np.ndarray:
    size = arr.size
    if size <= limit:
        return np.arange(size)
    return rng.choice(size, size=limit, replace=False)


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray,
                       floor: float = 1e-6) -> float:
    num = np.abs(analytic - numeric)
    den = np.maximum(np.abs(analytic) + np.abs(numeric), floor)
    return float((num / den).max()) if num.size else 0.0
