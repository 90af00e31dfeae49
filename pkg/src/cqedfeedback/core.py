"""Shared containers: physical constants, mode grids, amplitude state and norm bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "PhysicalParams",
    "derive_params",
    "ContinuousModeGrid",
    "DiscreteModeSet",
    "AmplitudeState",
    "TimeSeriesRecord",
    "initial_state",
    "total_norm",
    "symmetrize_check",
]


@dataclass(frozen=True)
class PhysicalParams:
    """Model constants plus the derived rates.

    Use :func:`derive_params` to build one; the derived fields are filled
    there and never recomputed.
    """

    gamma: float
    g0: float
    c: float
    delta0: float
    L: float
    l: float  # noqa: E741
    r: float
    kappa: float
    tau: float
    Gamma: float

    @property
    def kappa_tau(self) -> float:
        return self.kappa * self.tau

    @property
    def phase(self) -> float:
        """Round-trip phase Δ₀τ."""
        return self.delta0 * self.tau

    def with_changes(self, **raw) -> "PhysicalParams":
        """Re-derive with some raw inputs replaced."""
        base = dict(gamma=self.gamma, g0=self.g0, c=self.c, delta0=self.delta0,
                    L=self.L, l=self.l, r=self.r)
        base.update(raw)
        return derive_params(**base)

    def as_dict(self) -> dict:
        return dict(gamma=self.gamma, g0=self.g0, c=self.c, delta0=self.delta0,
                    L=self.L, l=self.l, r=self.r)


def derive_params(gamma: float, g0: float, c: float = 1.0, delta0: float = 50.0,
                  L: float = 0.005, l: float = 0.0, r: float = 1.0) -> PhysicalParams:  # noqa: E741
    """Validate raw constants and compute κ = πG₀²/(2c), τ = 2L/c, Γ = c(1−r)/(2l).

    Γ is left at 0 when no cavity length is given (``l == 0``), which is the
    continuous-coupling setting where it plays no role.
    """
    raw = dict(gamma=gamma, g0=g0, c=c, delta0=delta0, L=L, l=l, r=r)
    for name, value in raw.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")
    for name in ("gamma", "c", "delta0", "L"):
        if raw[name] <= 0:
            raise ValueError(f"{name} must be positive, got {raw[name]!r}")
    if g0 < 0:
        raise ValueError(f"g0 must be non-negative, got {g0!r}")
    if l < 0:
        raise ValueError(f"l must be non-negative, got {l!r}")
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"r must lie in [0, 1], got {r!r}")
    kappa = math.pi * g0 ** 2 / (2.0 * c)
    tau = 2.0 * L / c
    Gamma = c * (1.0 - r) / (2.0 * l) if l > 0 else 0.0
    return PhysicalParams(float(gamma), float(g0), float(c), float(delta0), float(L),
                          float(l), float(r), kappa, tau, Gamma)


@dataclass(frozen=True)
class ContinuousModeGrid:
    """Uniform wavenumber grid with trapezoidal weights."""

    k_min: float
    k_max: float
    n_k: int
    values: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n_k) != self.n_k or self.n_k < 2:
            raise ValueError(f"n_k must be an integer >= 2, got {self.n_k!r}")
        if self.k_min < 0 or not self.k_max > self.k_min:
            raise ValueError(f"need 0 <= k_min < k_max, got [{self.k_min}, {self.k_max}]")
        object.__setattr__(self, "n_k", int(self.n_k))
        values = np.linspace(self.k_min, self.k_max, self.n_k)
        weights = np.full(self.n_k, self.dk)
        weights[0] = weights[-1] = 0.5 * self.dk
        values.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)

    @property
    def dk(self) -> float:
        return (self.k_max - self.k_min) / (self.n_k - 1)

    @classmethod
    def default(cls, params: PhysicalParams, n_k: int = 512) -> "ContinuousModeGrid":
        """Grid over [0, 2Δ₀/c], symmetric about the emission line."""
        return cls(0.0, 2.0 * params.delta0 / params.c, n_k)

    def resolves_delay(self, params: PhysicalParams) -> bool:
        """True when dk·L <= π/8, enough samples per period of sin(kL)."""
        return self.dk * params.L <= math.pi / 8 + 1e-12

    def __len__(self) -> int:
        return self.n_k


@dataclass(frozen=True)
class DiscreteModeSet:
    """Comb k_q = (2q+1)π/(2L) for q_min <= q <= q_max."""

    q_min: int
    q_max: int
    L: float
    q: np.ndarray = field(init=False, repr=False, compare=False)
    values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.q_max < self.q_min:
            raise ValueError(f"empty mode range q in [{self.q_min}, {self.q_max}]")
        if self.L <= 0:
            raise ValueError("L must be positive")
        q = np.arange(self.q_min, self.q_max + 1)
        values = (2 * q + 1) * np.pi / (2.0 * self.L)
        q.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "values", values)

    @property
    def parity(self) -> np.ndarray:
        """(−1)^q, equal to sin(k_q L) on this comb."""
        return np.where(self.q % 2 == 0, 1.0, -1.0)

    @property
    def spacing(self) -> float:
        return math.pi / self.L

    def __len__(self) -> int:
        return len(self.q)


@dataclass(frozen=True)
class AmplitudeState:
    """The five amplitude blocks of the two-excitation sector at time ``t``.

    ``aux`` is only used by the reduced delay model: row 0 accumulates
    ∫c_e G* dt and row 1 accumulates ∫c_gk dt, per mode.
    """

    t: float
    c_e: complex
    c_g: complex
    c_ek: np.ndarray
    c_gk: np.ndarray
    c_gkk: np.ndarray
    aux: np.ndarray | None = None

    @property
    def n_modes(self) -> int:
        return self.c_ek.shape[0]

    def check_shape(self, n: int) -> None:
        if (self.c_ek.shape != (n,) or self.c_gk.shape != (n,)
                or self.c_gkk.shape != (n, n)):
            raise ValueError(
                f"state blocks {self.c_ek.shape}, {self.c_gk.shape}, {self.c_gkk.shape} "
                f"do not match {n} modes")
        if self.aux is not None and self.aux.shape != (2, n):
            raise ValueError(f"aux block {self.aux.shape} does not match {n} modes")

    def populations(self, weights: np.ndarray | None = None) -> dict[str, float]:
        w = np.ones(self.n_modes) if weights is None else weights
        return {
            "pop_e": abs(self.c_e) ** 2,
            "pop_g": abs(self.c_g) ** 2,
            "pop_ek": float(w @ np.abs(self.c_ek) ** 2),
            "pop_gk": float(w @ np.abs(self.c_gk) ** 2),
            "pop_gkk": float(w @ (np.abs(self.c_gkk) ** 2) @ w),
        }

    def replace(self, **changes) -> "AmplitudeState":
        return replace(self, **changes)


def initial_state(n_modes: int, with_aux: bool = False) -> AmplitudeState:
    """Atom excited, one cavity photon, empty waveguide."""
    zeros = np.zeros(n_modes, dtype=complex)
    return AmplitudeState(
        t=0.0, c_e=1.0 + 0j, c_g=0j, c_ek=zeros.copy(), c_gk=zeros.copy(),
        c_gkk=np.zeros((n_modes, n_modes), dtype=complex),
        aux=np.zeros((2, n_modes), dtype=complex) if with_aux else None)


def total_norm(state: AmplitudeState, grid: ContinuousModeGrid | DiscreteModeSet | np.ndarray) -> float:
    """Weighted squared norm with weight 1 on the two-photon double sum.

    ``grid`` may be a continuous grid (trapezoidal weights), a discrete mode
    set (unit weights) or an explicit weight vector.
    """
    if isinstance(grid, ContinuousModeGrid):
        w = grid.weights
    elif isinstance(grid, DiscreteModeSet):
        w = np.ones(len(grid))
    else:
        w = np.asarray(grid, dtype=float)
    state.check_shape(w.shape[0])
    pops = state.populations(w)
    # fixed summation order keeps the result independent of any parallel split
    return (pops["pop_e"] + pops["pop_g"] + pops["pop_ek"] + pops["pop_gk"]
            + pops["pop_gkk"])


def symmetrize_check(c_gkk: np.ndarray) -> float:
    """Largest |c_gkk(i, j) − c_gkk(j, i)|."""
    a = np.asarray(c_gkk)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return float(np.max(np.abs(a - a.T))) if a.size else 0.0


@dataclass
class TimeSeriesRecord:
    """Sampled observables of one run.

    Columns are parallel arrays over ``t``. ``c_e``/``c_g`` keep the complex
    amplitudes so that phases and Laplace transforms can be checked later.
    """

    model: str
    params: PhysicalParams
    t: np.ndarray
    c_e: np.ndarray
    c_g: np.ndarray
    pop_ek: np.ndarray
    pop_gk: np.ndarray
    pop_gkk: np.ndarray
    norm: np.ndarray
    mode_values: np.ndarray
    weights: np.ndarray
    snapshots_gkk: dict[float, np.ndarray] = field(default_factory=dict)
    snapshots_gk: dict[float, np.ndarray] = field(default_factory=dict)
    final_state: AmplitudeState | None = None

    @property
    def pop_e(self) -> np.ndarray:
        return np.abs(self.c_e) ** 2

    @property
    def pop_g(self) -> np.ndarray:
        return np.abs(self.c_g) ** 2

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - 1.0)))

    def columns(self) -> dict[str, np.ndarray]:
        return {
            "t": self.t,
            "pop_e": self.pop_e,
            "pop_g": self.pop_g,
            "pop_ek": self.pop_ek,
            "pop_gk": self.pop_gk,
            "pop_gkk": self.pop_gkk,
            "norm": self.norm,
            "re_c_e": self.c_e.real,
            "im_c_e": self.c_e.imag,
            "re_c_g": self.c_g.real,
            "im_c_g": self.c_g.imag,
        }

    def at(self, t: float) -> int:
        """Index of the sample nearest to ``t``."""
        return int(np.argmin(np.abs(self.t - t)))
