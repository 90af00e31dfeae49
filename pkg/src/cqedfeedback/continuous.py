"""Continuous-mode feedback dynamics.

Two formulations of the same physics are integrated here:

* ``full``: the integro-differential system over the k-grid, with every
  k-integral replaced by the trapezoidal sum. It conserves the weighted norm.
* ``reduced``: the delay-differential system where the waveguide
  self-energy has been integrated out into ``κ`` and delayed terms gated by
  Θ(t−τ). The delayed samples come from a :class:`HistoryBuffer`.

Both are advanced with fixed-step RK4; for the reduced model ``dt`` must divide
``τ`` so delayed reads land on stored records or cell midpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._rk4 import RowBlocks, lowrank_rk4_step
from .core import (
    AmplitudeState,
    ContinuousModeGrid,
    PhysicalParams,
    TimeSeriesRecord,
    initial_state,
)

__all__ = [
    "IntegratorConfig",
    "HistoryBuffer",
    "InsufficientHistoryError",
    "NormDriftError",
    "heaviside",
    "coupling",
    "rhs_full",
    "rhs_reduced",
    "integrate",
    "snapshot_cgkk",
]

SQRT2 = math.sqrt(2.0)

CG_COUPLINGS = ("eq9", "eq8")


class InsufficientHistoryError(LookupError):
    """A delayed read fell outside the stored history window."""


class NormDriftError(RuntimeError):
    """The weighted norm left its configured band during a run."""

    def __init__(self, t: float, norm: float, bound: float):
        super().__init__(f"norm drift |{norm:.6g} - 1| > {bound:g} at t = {t:.6g}")
        self.t = t
        self.norm = norm
        self.bound = bound


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration settings.

    ``cg_coupling`` picks the two-cavity-photon self-coupling in the reduced
    model: ``"eq9"`` uses κ (the form whose Laplace transform gives the
    closed-form transfer functions), ``"eq8"`` uses 2κ (the form the full
    model reduces to and the one behind the long-waveguide oscillator).
    """

    dt: float
    t_end: float
    sample_stride: int = 1
    snapshot_times: tuple[float, ...] = ()
    interpolation: str = "hermite3"
    theta_at_zero: float = 1.0
    feedback: bool = True
    norm_bound: float | None = None
    cg_coupling: str = "eq9"
    workers: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be non-negative, got {self.t_end!r}")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")
        if self.interpolation != "hermite3":
            raise ValueError(f"unsupported interpolation {self.interpolation!r}")
        if self.theta_at_zero not in (0.0, 1.0):
            raise ValueError("theta_at_zero must be 0 or 1")
        if self.cg_coupling not in CG_COUPLINGS:
            raise ValueError(f"cg_coupling must be one of {CG_COUPLINGS}")
        object.__setattr__(self, "snapshot_times", tuple(float(x) for x in self.snapshot_times))

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_end / self.dt - 1e-9))

    def delay_steps(self, tau: float) -> int:
        """Number of steps per delay; raises unless dt divides τ."""
        ratio = tau / self.dt
        m = int(round(ratio))
        if m < 1 or abs(ratio - m) > 1e-9 * max(1.0, ratio):
            raise ValueError(f"dt = {self.dt!r} does not divide tau = {tau!r} (ratio {ratio!r})")
        return m


def heaviside(x: float, at_zero: float = 1.0, tol: float = 0.0) -> float:
    if x > tol:
        return 1.0
    if x < -tol:
        return 0.0
    return at_zero


class HistoryBuffer:
    """Ring of equally spaced ``(t, value, derivative)`` records.

    Values are flat complex vectors. Reads between records use cubic Hermite
    interpolation; reads before t = 0 return the t = 0 record (the pre-history
    is constant). A record may carry a separate left derivative for a point
    where the right-hand side jumps (the first return at t = τ); cells ending
    there use it, so interpolation stays within one smooth piece.
    """

    def __init__(self, dt: float, horizon: float, size: int):
        self.dt = float(dt)
        self.horizon = float(horizon)
        self.capacity = int(math.ceil(horizon / dt - 1e-9)) + 2
        self._values = np.zeros((self.capacity, size), dtype=complex)
        self._derivs = np.zeros((self.capacity, size), dtype=complex)
        self._derivs_left = np.zeros((self.capacity, size), dtype=complex)
        self._first: np.ndarray | None = None
        self.count = 0  # records pushed so far; record j lives at t = j*dt

    def __len__(self) -> int:
        return min(self.count, self.capacity)

    @property
    def latest_time(self) -> float:
        return (self.count - 1) * self.dt

    @property
    def oldest_index(self) -> int:
        return max(0, self.count - self.capacity)

    def push(self, value: np.ndarray, deriv: np.ndarray,
             deriv_left: np.ndarray | None = None) -> None:
        slot = self.count % self.capacity
        self._values[slot] = value
        self._derivs[slot] = deriv
        self._derivs_left[slot] = deriv if deriv_left is None else deriv_left
        if self.count == 0:
            self._first = np.array(value, dtype=complex)
        self.count += 1

    def _record(self, j: int, left: bool = False) -> tuple[np.ndarray, np.ndarray]:
        if j < self.oldest_index or j >= self.count:
            raise InsufficientHistoryError(
                f"record {j} not held (have {self.oldest_index}..{self.count - 1})")
        slot = j % self.capacity
        return self._values[slot], (self._derivs_left if left else self._derivs)[slot]

    def query(self, t: float) -> np.ndarray:
        if self.count == 0:
            raise InsufficientHistoryError("history is empty")
        if t <= 0.0:
            return self._first.copy()
        pos = t / self.dt
        j = int(math.floor(pos + 1e-9))
        theta = pos - j
        if abs(theta) <= 1e-9:
            return self._record(j)[0].copy()
        y0, f0 = self._record(j)
        y1, f1 = self._record(j + 1, left=True)
        th2, th3 = theta * theta, theta * theta * theta
        h00 = 2 * th3 - 3 * th2 + 1
        h10 = th3 - 2 * th2 + theta
        h01 = -2 * th3 + 3 * th2
        h11 = th3 - th2
        return h00 * y0 + (h10 * self.dt) * f0 + h01 * y1 + (h11 * self.dt) * f1


def coupling(grid_values: np.ndarray, params: PhysicalParams, t: float) -> np.ndarray:
    """G(k, t) = G₀ sin(kL) exp(−i(ck − Δ₀)t) on the grid."""
    k = np.asarray(grid_values)
    return params.g0 * np.sin(k * params.L) * np.exp(-1j * (params.c * k - params.delta0) * t)


def _full_small_rhs(gamma: float, w: np.ndarray):
    a_g = 1j * SQRT2 * gamma

    def f(stage, ts, y, G, Mv):
        ce, cg, cek, cgk = y
        Gc = G.conj()
        wG = w * G
        return (
            a_g * cg + 1j * (wG @ cek),
            a_g * ce + (1j * SQRT2) * (wG @ cgk),
            (1j * ce) * Gc + (1j * gamma) * cgk,
            (1j * gamma) * cek + (1j * SQRT2 * cg) * Gc + 2j * Mv,
        )

    return f


def rhs_full(state: AmplitudeState, grid: ContinuousModeGrid, params: PhysicalParams,
             t: float) -> AmplitudeState:
    """Right-hand side of the full integro-differential system at time ``t``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    state.check_shape(grid.n_k)
    w = grid.weights
    G = coupling(grid.values, params, t)
    Gc = G.conj()
    wG = w * G
    M = state.c_gkk
    gamma = params.gamma
    d_gkk = np.outer(Gc, state.c_gk)
    d_gkk = 1j * (d_gkk + d_gkk.T)
    return AmplitudeState(
        t=t,
        c_e=1j * SQRT2 * gamma * state.c_g + 1j * (wG @ state.c_ek),
        c_g=1j * SQRT2 * gamma * state.c_e + 1j * SQRT2 * (wG @ state.c_gk),
        c_ek=1j * state.c_e * Gc + 1j * gamma * state.c_gk,
        c_gk=(1j * gamma * state.c_ek + 1j * SQRT2 * state.c_g * Gc
              + 1j * (M @ wG) + 1j * (M.T @ wG)),
        c_gkk=d_gkk,
    )


def _reduced_small_rhs(params: PhysicalParams, config: IntegratorConfig, delayed,
                       step_start: list | None = None):
    """Derivatives of (c_e, c_g, c_ek, c_gk, ∫c_e G*, ∫c_gk).

    ``delayed(ts)`` returns the flat vector [c_e, c_g, c_gk...] at ts − τ.
    When ``step_start`` holds a time t_n, the gate is fixed for the whole step
    by t_n >= τ: steps never straddle τ (dt divides τ), so each step integrates
    one smooth piece and RK4 keeps its order. Otherwise the gate is the
    pointwise Θ(ts − τ) with the configured Θ(0).
    """
    gamma, kappa, tau = params.gamma, params.kappa, params.tau
    rho = 1.0 if config.cg_coupling == "eq9" else 2.0
    ph = np.exp(1j * params.delta0 * tau)
    a_g = 1j * SQRT2 * gamma
    tol = 1e-9 * tau

    def f(stage, ts, y, G, Mv):
        ce, cg, cek, cgk, acc_e, acc_gk = y
        Gc = G.conj()
        dce = a_g * cg - kappa * ce
        dcg = a_g * ce - rho * kappa * cg
        dcgk = -2.0 * kappa * cgk + (1j * SQRT2 * cg) * Gc - gamma * acc_e - gamma ** 2 * acc_gk
        if not config.feedback:
            gate = 0.0
        elif step_start is not None and step_start[0] is not None:
            gate = heaviside(step_start[0] - tau, 1.0, tol)
        else:
            gate = heaviside(ts - tau, config.theta_at_zero, tol)
        if gate:
            d = delayed(ts)
            ce_d, cg_d, cgk_d = d[0], d[1], d[2:]
            dce = dce + kappa * ph * ce_d
            dcg = dcg + rho * kappa * ph * cg_d - (1j * SQRT2 * gamma * kappa * tau * ph) * ce_d
            dcgk = dcgk + (2.0 * kappa * ph) * cgk_d
        return (
            dce,
            dcg,
            (1j * ce) * Gc + (1j * gamma) * cgk,
            dcgk,
            ce * Gc,
            cgk,
        )

    return f


def rhs_reduced(state: AmplitudeState, history: HistoryBuffer | None, grid: ContinuousModeGrid,
                params: PhysicalParams, t: float, *, theta_at_zero: float = 1.0,
                feedback: bool = True, cg_coupling: str = "eq9") -> AmplitudeState:
    """Right-hand side of the delay system at time ``t``.

    Delayed values c_e(t−τ), c_g(t−τ), c_gk(t−τ) are read from ``history``
    only when the Heaviside gate is open.
    """
    state.check_shape(grid.n_k)
    if state.aux is None:
        raise ValueError("reduced model needs the aux accumulators")
    config = IntegratorConfig(dt=1.0, t_end=0.0, theta_at_zero=theta_at_zero,
                              feedback=feedback, cg_coupling=cg_coupling)

    def delayed(ts):
        if history is None:
            raise InsufficientHistoryError("no history supplied for a delayed read")
        return history.query(ts - params.tau)

    f = _reduced_small_rhs(params, config, delayed)
    G = coupling(grid.values, params, t)
    y = (state.c_e, state.c_g, state.c_ek, state.c_gk, state.aux[0], state.aux[1])
    dce, dcg, dcek, dcgk, dacc_e, dacc_gk = f(0, t, y, G, None)
    d_gkk = np.outer(G.conj(), state.c_gk)
    return AmplitudeState(t=t, c_e=dce, c_g=dcg, c_ek=dcek, c_gk=dcgk,
                          c_gkk=1j * (d_gkk + d_gkk.T), aux=np.stack([dacc_e, dacc_gk]))


@dataclass
class _Recorder:
    weights: np.ndarray
    stride: int
    snapshot_times: tuple[float, ...]
    dt: float
    norm_bound: float | None
    rows: list = field(default_factory=list)
    snaps_gkk: dict = field(default_factory=dict)
    snaps_gk: dict = field(default_factory=dict)

    def observe(self, n: int, t: float, small: tuple, M: np.ndarray, last: bool) -> None:
        for ts in self.snapshot_times:
            if ts not in self.snaps_gkk and abs(t - ts) <= 0.5 * self.dt + 1e-12:
                self.snaps_gkk[ts] = M.copy()
                self.snaps_gk[ts] = np.array(small[3], copy=True)
        if n % self.stride and not last:
            return
        w = self.weights
        ce, cg, cek, cgk = small[:4]
        pop_ek = float(w @ np.abs(cek) ** 2)
        pop_gk = float(w @ np.abs(cgk) ** 2)
        pop_gkk = float(w @ (np.abs(M) ** 2) @ w)
        norm = abs(ce) ** 2 + abs(cg) ** 2 + pop_ek + pop_gk + pop_gkk
        self.rows.append((t, ce, cg, pop_ek, pop_gk, pop_gkk, norm))
        if self.norm_bound is not None and abs(norm - 1.0) > self.norm_bound:
            raise NormDriftError(t, norm, self.norm_bound)

    def finish(self, model, params, grid_values, final_state) -> TimeSeriesRecord:
        cols = list(zip(*self.rows))
        return TimeSeriesRecord(
            model=model, params=params,
            t=np.array(cols[0], dtype=float),
            c_e=np.array(cols[1], dtype=complex),
            c_g=np.array(cols[2], dtype=complex),
            pop_ek=np.array(cols[3]), pop_gk=np.array(cols[4]), pop_gkk=np.array(cols[5]),
            norm=np.array(cols[6]),
            mode_values=np.asarray(grid_values), weights=self.weights,
            snapshots_gkk=self.snaps_gkk, snapshots_gk=self.snaps_gk,
            final_state=final_state,
        )


def integrate(model: str, params: PhysicalParams, grid: ContinuousModeGrid,
              config: IntegratorConfig) -> TimeSeriesRecord:
    """Integrate from the initial state (atom excited, one cavity photon) to ``t_end``.

    Raises:
        ValueError: unknown model, or ``dt`` not dividing τ for the reduced model.
        NormDriftError: the norm left ``config.norm_bound``.
    """
    if model not in ("full", "reduced"):
        raise ValueError(f"model must be 'full' or 'reduced', got {model!r}")
    n = grid.n_k
    w = grid.weights
    k = grid.values
    amp = params.g0 * np.sin(k * params.L)
    det = params.c * k - params.delta0

    def G(t):
        return amp * np.exp(-1j * det * t)

    state = initial_state(n, with_aux=(model == "reduced"))
    M = state.c_gkk
    if model == "full":
        small = (state.c_e, state.c_g, state.c_ek, state.c_gk)
        f = _full_small_rhs(params.gamma, w)
        history = None
        m = -1
    else:
        m = config.delay_steps(params.tau)
        small = (state.c_e, state.c_g, state.c_ek, state.c_gk, state.aux[0], state.aux[1])
        history = HistoryBuffer(config.dt, params.tau, n + 2)

        def delayed(ts):
            return history.query(ts - params.tau)

        step_start = [None]
        f = _reduced_small_rhs(params, config, delayed, step_start)

    rec = _Recorder(w, config.sample_stride, config.snapshot_times, config.dt, config.norm_bound)
    kernels = RowBlocks(n, config.workers)
    dt = config.dt
    n_steps = config.n_steps
    try:
        for step in range(n_steps + 1):
            t = step * dt
            rec.observe(step, t, small, M, step == n_steps)
            if step == n_steps:
                break
            if history is not None:
                step_start[0] = t
                f0 = f(0, t, small, G(t), None)
                f_left = None
                if step == m and config.feedback:
                    # the delayed terms switch on here; keep the left derivative too
                    step_start[0] = t - dt
                    fl = f(0, t, small, G(t), None)
                    step_start[0] = t
                    f_left = np.concatenate(([fl[0], fl[1]], fl[3]))
                history.push(np.concatenate(([small[0], small[1]], small[3])),
                             np.concatenate(([f0[0], f0[1]], f0[3])), f_left)
            small, M, _ = lowrank_rk4_step(t, dt, small, M, G, w, f, kernels,
                                           feedback_matvec=(model == "full"))
    finally:
        kernels.close()

    final = AmplitudeState(
        t=n_steps * dt, c_e=complex(small[0]), c_g=complex(small[1]),
        c_ek=small[2], c_gk=small[3], c_gkk=M,
        aux=np.stack([small[4], small[5]]) if model == "reduced" else None)
    return rec.finish(model, params, k, final)


def snapshot_cgkk(record: TimeSeriesRecord, t: float) -> np.ndarray:
    """Stored two-photon grid at a requested snapshot time."""
    for ts, M in record.snapshots_gkk.items():
        if abs(ts - t) <= 1e-9 * max(1.0, abs(t)):
            return M
    raise KeyError(f"no snapshot at t = {t!r}; have {sorted(record.snapshots_gkk)}")
