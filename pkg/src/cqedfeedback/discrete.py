"""Discrete periodic-mode coupling scheme.

When the feedback loop is comparable to the cavity, the cavity couples only to
the comb k_q = (2q+1)π/(2L). Each mode carries the coupling

    g_q(t) = √(π/2L) G₀ (−1)^q e^{−i(ω_q − Δ₀)t},

and the amplitude equations have the same shape as the continuous full model
with unit weights. The system is memoryless, so no history is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rk4 import RowBlocks, lowrank_rk4_step
from .continuous import IntegratorConfig, _full_small_rhs, _Recorder
from .core import AmplitudeState, DiscreteModeSet, PhysicalParams, TimeSeriesRecord, initial_state

__all__ = [
    "DiscreteAmplitudeState",
    "PeakReport",
    "discrete_coupling",
    "rhs_discrete",
    "integrate_discrete",
    "mode_spectrum_peak",
    "comb_phase_sum",
    "coupling_ratio_exact",
    "coupling_ratio_lorentzian",
    "lorentzian_profile",
]

SQRT2 = math.sqrt(2.0)

# Same five blocks: c_e, c_g, c_eq (in c_ek), c_gq (in c_gk), c_gpq (in c_gkk).
DiscreteAmplitudeState = AmplitudeState


def _check_modes(modes: DiscreteModeSet, params: PhysicalParams) -> None:
    if not math.isclose(modes.L, params.L, rel_tol=1e-12):
        raise ValueError(f"mode set built for L = {modes.L} but params have L = {params.L}")


def discrete_coupling(modes: DiscreteModeSet, params: PhysicalParams, t: float) -> np.ndarray:
    amp = math.sqrt(math.pi / (2.0 * params.L)) * params.g0 * modes.parity
    return amp * np.exp(-1j * (params.c * modes.values - params.delta0) * t)


def rhs_discrete(state: AmplitudeState, modes: DiscreteModeSet, params: PhysicalParams,
                 t: float) -> AmplitudeState:
    """Right-hand side of the discrete-mode amplitude equations at time ``t``."""
    _check_modes(modes, params)
    state.check_shape(len(modes))
    g = discrete_coupling(modes, params, t)
    gc = g.conj()
    gamma = params.gamma
    M = state.c_gkk
    src = np.outer(gc, state.c_gk)
    return AmplitudeState(
        t=t,
        c_e=1j * SQRT2 * gamma * state.c_g + 1j * (g @ state.c_ek),
        c_g=1j * SQRT2 * gamma * state.c_e + 1j * SQRT2 * (g @ state.c_gk),
        c_ek=1j * state.c_e * gc + 1j * gamma * state.c_gk,
        c_gk=(1j * gamma * state.c_ek + 1j * SQRT2 * state.c_g * gc
              + 1j * (M @ g) + 1j * (M.T @ g)),
        c_gkk=1j * (src + src.T),
    )


def integrate_discrete(params: PhysicalParams, modes: DiscreteModeSet,
                       config: IntegratorConfig) -> TimeSeriesRecord:
    """Integrate the comb model from the initial state to ``config.t_end``.

    Populations use unit weights. ``config`` fields that concern the delay
    (Θ(0), feedback, c_g coupling) are ignored.

    Raises:
        NormDriftError: the norm left ``config.norm_bound``.
    """
    _check_modes(modes, params)
    n = len(modes)
    w = np.ones(n)
    amp = math.sqrt(math.pi / (2.0 * params.L)) * params.g0 * modes.parity
    det = params.c * modes.values - params.delta0

    def G(t):
        return amp * np.exp(-1j * det * t)

    state = initial_state(n)
    small = (state.c_e, state.c_g, state.c_ek, state.c_gk)
    M = state.c_gkk
    f = _full_small_rhs(params.gamma, w)
    rec = _Recorder(w, config.sample_stride, config.snapshot_times, config.dt, config.norm_bound)
    kernels = RowBlocks(n, config.workers)
    dt, n_steps = config.dt, config.n_steps
    try:
        for step in range(n_steps + 1):
            t = step * dt
            rec.observe(step, t, small, M, step == n_steps)
            if step == n_steps:
                break
            small, M, _ = lowrank_rk4_step(t, dt, small, M, G, w, f, kernels)
    finally:
        kernels.close()
    final = AmplitudeState(t=n_steps * dt, c_e=complex(small[0]), c_g=complex(small[1]),
                           c_ek=small[2], c_gk=small[3], c_gkk=M)
    return rec.finish("discrete", params, modes.values, final)


@dataclass(frozen=True)
class PeakReport:
    q_star: int
    concentration: float
    q_resonant: int
    at_resonance: bool


def mode_spectrum_peak(c_gq, modes: DiscreteModeSet, params: PhysicalParams) -> PeakReport:
    """Locate the dominant comb mode of c_gq and compare with the mode nearest Δ₀.

    ``c_gq`` may be an :class:`AmplitudeState` or a vector. The concentration
    ratio is |c_gq*| over the largest other |c_gq|; a flat vector gives 1.

    Raises:
        ValueError: all-zero input.
    """
    if isinstance(c_gq, AmplitudeState):
        c_gq = c_gq.c_gk
    a = np.abs(np.asarray(c_gq))
    if a.shape != (len(modes),):
        raise ValueError(f"vector of length {a.shape} does not match {len(modes)} modes")
    if not np.any(a > 0):
        raise ValueError("all-zero mode vector has no peak")
    i = int(np.argmax(a))
    rest = np.delete(a, i)
    conc = float(a[i] / rest.max()) if rest.size and rest.max() > 0 else math.inf
    j = int(np.argmin(np.abs(params.c * modes.values - params.delta0)))
    return PeakReport(int(modes.q[i]), conc, int(modes.q[j]), i == j)


def comb_phase_sum(c_gq: np.ndarray, modes: DiscreteModeSet, params: PhysicalParams,
                        t: float) -> complex:
    """Σ_q c_gq(t) (−1)^q e^{−i(ω_q − Δ₀)t}."""
    phase = np.exp(-1j * (params.c * modes.values - params.delta0) * t)
    return complex(np.sum(np.asarray(c_gq) * modes.parity * phase))


def coupling_ratio_exact(k, l: float, L: float):  # noqa: E741
    """sin²(kL)/sin²(kl), the waveguide-to-cavity coupling ratio of a comb mode.

    Raises:
        ZeroDivisionError: k sits on a cavity node (sin(kl) = 0).
    """
    k = np.asarray(k, dtype=float)
    den = np.sin(k * l) ** 2
    if np.any(den < 1e-24):
        raise ZeroDivisionError(f"cavity node: sin(k l) = 0 at k = {k[den < 1e-24].ravel()[0] if k.ndim else float(k)}")
    val = np.sin(k * L) ** 2 / den
    return float(val) if val.ndim == 0 else val


def coupling_ratio_lorentzian(k, params: PhysicalParams):
    """(cΓ/l) / ((ck − Δ₀)² + Γ²), the narrowband form of the coupling ratio."""
    if not params.Gamma > 0:
        raise ValueError("need Γ > 0 (set l > 0 and r < 1)")
    x = params.c * np.asarray(k, dtype=float) - params.delta0
    val = (params.c * params.Gamma / params.l) / (x * x + params.Gamma ** 2)
    return float(val) if val.ndim == 0 else val


def lorentzian_profile(modes: DiscreteModeSet, params: PhysicalParams) -> np.ndarray:
    """1/√((ck_q − Δ₀)² + Γ²) over the comb."""
    x = params.c * modes.values - params.delta0
    return 1.0 / np.sqrt(x * x + params.Gamma ** 2)
