"""Small trajectory diagnostics: local maxima and peak-envelope decay."""

from __future__ import annotations

import numpy as np

__all__ = ["local_maxima", "envelope_decay_rate", "is_monotone_decreasing"]


def local_maxima(t: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Strict interior local maxima of a sampled curve (plateaus count once)."""
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    if y.size < 3:
        return t[:0], y[:0]
    left = y[1:-1] > y[:-2]
    right = y[1:-1] >= y[2:]
    idx = np.nonzero(left & right)[0] + 1
    return t[idx], y[idx]


def envelope_decay_rate(t: np.ndarray, y: np.ndarray, floor: float = 1e-300) -> float:
    """Exponential decay rate of the peak envelope, from a log-linear fit.

    Returns ``a`` in ``peaks ≈ C e^{−a t}``; positive means decaying. With
    fewer than two peaks the rate is undefined and NaN is returned.
    """
    tp, yp = local_maxima(t, y)
    if tp.size < 2:
        return float("nan")
    slope = np.polyfit(tp, np.log(np.maximum(yp, floor)), 1)[0]
    return float(-slope)


def is_monotone_decreasing(y: np.ndarray, slack: float = 0.0) -> bool:
    """True when every step satisfies y[i+1] <= y[i] + slack."""
    y = np.asarray(y, dtype=float)
    return bool(np.all(np.diff(y) <= slack))
