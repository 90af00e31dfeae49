"""Theorem-level predicates evaluated on simulation output.

Each function returns the raw statistic; thresholds live with the callers
(CLI summaries and acceptance tests) so the statistic can be reported even
when a check fails.
"""

from __future__ import annotations

import math

import numpy as np

from .core import PhysicalParams, TimeSeriesRecord
from .signals import envelope_decay_rate, local_maxima

__all__ = [
    "antidiagonal_indices",
    "antidiagonal_ratio",
    "rabi_error",
    "envelope_drop",
    "count_maxima_before",
    "monotone_abs_ce",
    "damping_rate",
]


def antidiagonal_indices(k: np.ndarray, params: PhysicalParams) -> tuple[np.ndarray, np.ndarray]:
    """Grid pairs (i, j) with ω_i + ω_j = 2Δ₀ to within half a grid step."""
    k = np.asarray(k, dtype=float)
    target = 2.0 * params.delta0 / params.c - k
    j = np.clip(np.searchsorted(k, target), 1, len(k) - 1)
    j = np.where(np.abs(k[j - 1] - target) <= np.abs(k[j] - target), j - 1, j)
    dk = np.min(np.diff(k)) if len(k) > 1 else 0.0
    ok = np.abs(k[j] - target) <= 0.5 * dk + 1e-12
    i = np.nonzero(ok)[0]
    return i, j[ok]


def antidiagonal_ratio(c_gkk: np.ndarray, k: np.ndarray, params: PhysicalParams) -> float:
    """max|Re c_gkk| / max|Im c_gkk| along ω₁ + ω₂ = 2Δ₀."""
    i, j = antidiagonal_indices(k, params)
    vals = np.asarray(c_gkk)[i, j]
    im = np.max(np.abs(vals.imag))
    if im == 0.0:
        return math.inf if np.any(vals.real) else 0.0
    return float(np.max(np.abs(vals.real)) / im)


def rabi_error(record: TimeSeriesRecord, t_max: float | None = None) -> float:
    """max |  |c_e|² − cos²(√2γt) | over samples with t <= t_max."""
    t = record.t
    mask = np.ones_like(t, dtype=bool) if t_max is None else t <= t_max + 1e-12
    ref = np.cos(math.sqrt(2.0) * record.params.gamma * t[mask]) ** 2
    return float(np.max(np.abs(record.pop_e[mask] - ref)))


def envelope_drop(t: np.ndarray, y: np.ndarray, start_fraction: float = 0.5) -> float:
    """Relative drop of the peak envelope between the first and last local maxima
    after ``start_fraction`` of the run; NaN with fewer than two maxima."""
    t = np.asarray(t)
    cut = t[0] + start_fraction * (t[-1] - t[0])
    tp, yp = local_maxima(t[t >= cut], np.asarray(y)[t >= cut])
    if yp.size < 2:
        return float("nan")
    return float(1.0 - yp[-1] / yp[0])


def count_maxima_before(t: np.ndarray, y: np.ndarray, t_stop: float) -> int:
    mask = np.asarray(t) < t_stop
    return int(local_maxima(np.asarray(t)[mask], np.asarray(y)[mask])[0].size)


def monotone_abs_ce(record: TimeSeriesRecord, t_stop: float) -> bool:
    """|c_e(t)| non-increasing on (0, t_stop)."""
    mask = (record.t > 0) & (record.t < t_stop)
    a = np.abs(record.c_e[mask])
    return bool(np.all(np.diff(a) <= 0.0))


def damping_rate(record: TimeSeriesRecord) -> float:
    """Fitted decay rate of the |c_e|² peak envelope."""
    return envelope_decay_rate(record.t, record.pop_e)
