"""Closed-form and Laplace-domain predictions for the continuous feedback scheme.

Everything here is a pure function of :class:`~cqedfeedback.core.PhysicalParams`.
Mode frequencies are ``ω = c k``; ``x = ω − Δ₀`` is the detuning from the
emission line.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .core import PhysicalParams

__all__ = [
    "PoleProximityError",
    "ResonanceError",
    "RegimeError",
    "ResidueCoeffs",
    "RegimeReport",
    "transfer_ce",
    "transfer_cg",
    "transfer_cgk",
    "closed_form_ce_cg",
    "coeffs_defr",
    "coeffs_hijk",
    "cgk_poles",
    "closed_form_cgk_components",
    "closed_form_cgk",
    "long_waveguide_solution",
    "steady_state_cgkk",
    "classify_regime",
    "phase_class",
    "numerical_laplace",
    "laplace_truncation_bound",
    "laplace_horizon",
]

SQRT2 = math.sqrt(2.0)

POLE_RTOL = 1e-12
PI_MULTIPLE_TOL = 1e-9
SMALL_KAPPA_TAU = 0.1
# roots closer than this (relative) are merged into a double pole
DOUBLE_POLE_RTOL = 1e-6


class PoleProximityError(ArithmeticError):
    """Transfer function evaluated on (or numerically at) a pole."""


class ResonanceError(ArithmeticError):
    """A small-τ coefficient denominator vanished at the given frequency."""

    def __init__(self, name: str, omega):
        super().__init__(f"{name}(ω) denominator underflows at ω = {omega!r}")
        self.name = name
        self.omega = omega


class RegimeError(ValueError):
    """The requested prediction is outside the regime where it is defined."""


# ---------------------------------------------------------------------------
# transfer functions


def _transfer_parts(s, params: PhysicalParams):
    s = np.asarray(s, dtype=complex)
    kap, tau = params.kappa, params.tau
    delay = np.exp(1j * params.phase) * np.exp(-s * tau)
    A = s + kap * (1.0 - delay)
    B = 1.0 - kap * tau * delay
    den = A * A + 2.0 * params.gamma ** 2 * B
    return s, A, B, den


def _guard(value, den, s, on_pole: str):
    bad = np.abs(den) < POLE_RTOL * (1.0 + np.abs(s) ** 2)
    if np.any(bad):
        if on_pole == "raise":
            raise PoleProximityError(f"denominator vanishes at s = {s[bad].ravel()[0]!r}")
        value = np.where(bad, np.nan + 1j * np.nan, value)
    return value[()] if value.ndim == 0 else value


def transfer_ce(s, params: PhysicalParams, on_pole: str = "nan"):
    """Laplace transform C_e(s) of the excited-state amplitude.

    C_e = A / (A² + 2γ²B) with A = s + κ(1 − e^{iΔ₀τ}e^{−sτ}) and
    B = 1 − κτ e^{−sτ}e^{iΔ₀τ}. Vectorised over ``s``; near a pole the value
    is NaN, or :class:`PoleProximityError` with ``on_pole="raise"``.
    """
    s, A, _, den = _transfer_parts(s, params)
    with np.errstate(divide="ignore", invalid="ignore"):
        value = A / den
    return _guard(value, den, s, on_pole)


def transfer_cg(s, params: PhysicalParams, on_pole: str = "nan"):
    """Laplace transform C_g(s) = i√2γB / (A² + 2γ²B); see :func:`transfer_ce`."""
    s, _, B, den = _transfer_parts(s, params)
    with np.errstate(divide="ignore", invalid="ignore"):
        value = 1j * SQRT2 * params.gamma * B / den
    return _guard(value, den, s, on_pole)


# ---------------------------------------------------------------------------
# small-τ amplitudes


def closed_form_ce_cg(t, params: PhysicalParams, kappa_phase: bool = False):
    """Small-τ amplitudes c_e(t), c_g(t).

    c_e = e^{−κ(1−cos Δ₀τ)t} e^{i sin(Δ₀τ) t} cos(√2γt) and c_g is the same
    envelope times i sin(√2γt). The default phase rate is sin(Δ₀τ); the
    reduction of the delay equations gives κ sin(Δ₀τ), selectable with
    ``kappa_phase=True``. Populations do not depend on this choice.
    """
    if params.kappa_tau > SMALL_KAPPA_TAU:
        warnings.warn(f"κτ = {params.kappa_tau:.3g} is not small; closed form is unreliable",
                      RuntimeWarning, stacklevel=2)
    t = np.asarray(t, dtype=float)
    kap = params.kappa
    rate = math.sin(params.phase) * (kap if kappa_phase else 1.0)
    env = np.exp(-kap * (1.0 - math.cos(params.phase)) * t + 1j * rate * t)
    w = SQRT2 * params.gamma * t
    ce = env * np.cos(w)
    cg = 1j * env * np.sin(w)
    if ce.ndim == 0:
        return complex(ce), complex(cg)
    return ce, cg


@dataclass(frozen=True)
class ResidueCoeffs:
    """D, E, F, R at one (or an array of) mode frequencies.

    E, F and R depend only on the round-trip phase; D also depends on ω.
    ``M = ω − Δ₀ + F`` is the shifted detuning used by the pole positions.
    """

    D: complex | np.ndarray
    E: float
    F: float
    R: complex
    M: float | np.ndarray
    omega: float | np.ndarray


def coeffs_defr(params: PhysicalParams, omega) -> ResidueCoeffs:
    phase = params.phase
    kap = params.kappa
    cos_p, sin_p = math.cos(phase), math.sin(phase)
    E = kap * (cos_p - 1.0)
    F = sin_p
    R = kap * (np.exp(1j * phase) - 1.0)
    omega = np.asarray(omega, dtype=float)
    D = SQRT2 / 2.0 * (params.delta0 - omega - F + 1j * kap * (cos_p - 1.0))
    M = omega - params.delta0 + F
    if omega.ndim == 0:
        D, M, omega = complex(D), float(M), float(omega)
    return ResidueCoeffs(D=D, E=E, F=F, R=complex(R), M=M, omega=omega)


def coeffs_hijk(params: PhysicalParams, omega, check: bool = True):
    """Small-τ residue weights H, I, J, K at frequency ω.

    With x = ω − Δ₀ and γ the atom-cavity coupling:

        H = (γ + x/3) / (2γ[−(γ + x)² + 2γ²])
        I = (γ − x/3) / (2γ[−(γ − x)² + 2γ²])
        J = (√2γ − 2x/3) / (2√2γ[−(x − √2γ)² + γ²])
        K = (√2γ + 2x/3) / (2√2γ[−(x + √2γ)² + γ²])

    Raises:
        ResonanceError: a denominator is below 1e-12·γ³ at some ω (when
            ``check``).
    """
    g = params.gamma
    x = np.asarray(omega, dtype=float) - params.delta0
    dens = {
        "H": 2 * g * (-(g + x) ** 2 + 2 * g ** 2),
        "I": 2 * g * (-(g - x) ** 2 + 2 * g ** 2),
        "J": 2 * SQRT2 * g * (-(x - SQRT2 * g) ** 2 + g ** 2),
        "K": 2 * SQRT2 * g * (-(x + SQRT2 * g) ** 2 + g ** 2),
    }
    if check:
        for name, den in dens.items():
            bad = np.abs(den) < 1e-12 * g ** 3
            if np.any(bad):
                raise ResonanceError(name, (x + params.delta0)[bad].ravel()[0] if x.ndim else float(x + params.delta0))
    with np.errstate(divide="ignore", invalid="ignore"):
        H = (g + x / 3) / dens["H"]
        I = (g - x / 3) / dens["I"]  # noqa: E741
        J = (SQRT2 * g - 2 * x / 3) / dens["J"]
        K = (SQRT2 * g + 2 * x / 3) / dens["K"]
    if x.ndim == 0:
        return float(H), float(I), float(J), float(K)
    return H, I, J, K


# ---------------------------------------------------------------------------
# c_gk residue form


def _check_cgk_regime(params: PhysicalParams) -> None:
    if params.kappa_tau <= SMALL_KAPPA_TAU:
        return
    if phase_class(params.phase) != "generic":
        return
    raise RegimeError(
        f"c_gk residue form needs κτ <= {SMALL_KAPPA_TAU} or Δ₀τ = nπ "
        f"(got κτ = {params.kappa_tau:.4g}, Δ₀τ/π = {params.phase / math.pi:.6g})")


def transfer_cgk(s, k, params: PhysicalParams):
    """Rational C_gk(s, k) in the residue regimes (no delayed exponentials).

    C_gk = G₀ sin(kL) [2√2iγD − 3γ(s − E − iM)] / {(s² − 2Rs + γ²)[(s − E − iM)² + 2γ²]}.
    """
    co = coeffs_defr(params, params.c * np.asarray(k, dtype=float))
    g = params.gamma
    s = np.asarray(s, dtype=complex)
    u = s - co.E - 1j * co.M
    num = 2 * SQRT2 * 1j * g * co.D - 3 * g * u
    den = (s * s - 2 * co.R * s + g ** 2) * (u * u + 2 * g ** 2)
    return params.g0 * np.sin(np.asarray(k) * params.L) * num / den


def cgk_poles(params: PhysicalParams, omega):
    """The four poles (H, I, J, K order) of C_gk at frequency ω."""
    co = coeffs_defr(params, omega)
    g = params.gamma
    root = np.sqrt(complex(co.R * co.R - g * g))
    M = np.asarray(co.M)
    base = co.E + 1j * M
    return (
        np.full(M.shape, co.R - root),
        np.full(M.shape, co.R + root),
        base - 1j * SQRT2 * g,
        base + 1j * SQRT2 * g,
    )


def closed_form_cgk_components(t, k, params: PhysicalParams):
    """Per-pole terms of c_gk(t, k); their sum is :func:`closed_form_cgk`.

    Returns an array with a leading axis of length 4 (H, I, J, K poles).
    Coincident poles are merged: the confluent term is reported on the first
    pole of the pair and the second is zero.
    """
    _check_cgk_regime(params)
    t = np.asarray(t, dtype=float)
    k = np.asarray(k, dtype=float)
    t, k = np.broadcast_arrays(t, k)
    omega = params.c * k
    co = coeffs_defr(params, omega)
    g = params.gamma
    # numerator N(s) = s − E − iM − i(2√2/3)D, overall factor −3γ G₀ sin(kL)
    shift = co.E + 1j * np.asarray(co.M) + 1j * (2 * SQRT2 / 3) * np.asarray(co.D)
    poles = [np.asarray(p, dtype=complex) for p in cgk_poles(params, omega)]
    pre = -3 * g * params.g0 * np.sin(k * params.L)
    scale = max(g, abs(co.R), 1.0)

    out = np.zeros((4,) + t.shape, dtype=complex)
    done = np.zeros((4,) + t.shape, dtype=bool)
    for i in range(4):
        p = poles[i]
        others = [poles[j] for j in range(4) if j != i]
        partner = np.full(t.shape, -1)
        for j in range(4):
            if j == i:
                continue
            close = np.abs(poles[j] - p) <= DOUBLE_POLE_RTOL * scale
            partner = np.where(close & (partner < 0), j, partner)
        N = p - shift
        simple = partner < 0
        # simple pole: N(p) e^{pt} / Π(p − p_o)
        prod = np.ones(t.shape, dtype=complex)
        for q in others:
            prod = prod * (p - q)
        with np.errstate(divide="ignore", invalid="ignore"):
            val_simple = N * np.exp(p * t) / prod
        # double pole with partner j: d/ds [N e^{st} / Π_rest] at p
        prod2 = np.ones(t.shape, dtype=complex)
        dlog = np.zeros(t.shape, dtype=complex)
        for j in range(4):
            if j == i:
                continue
            keep = partner != j
            d = np.where(keep, p - poles[j], 1.0)
            prod2 = prod2 * d
            with np.errstate(divide="ignore", invalid="ignore"):
                dlog = dlog + np.where(keep, 1.0 / d, 0.0)
        val_double = np.exp(p * t) * (1.0 + t * N - N * dlog) / prod2
        skip = done[i]
        out[i] = np.where(skip, 0.0, np.where(simple, val_simple, val_double))
        for j in range(4):
            done[j] |= (partner == j) & ~skip
    return pre * out


def closed_form_cgk(t, k, params: PhysicalParams):
    """c_gk(t, k) from the four-pole residue form.

    Valid for κτ small or Δ₀τ a multiple of π. The residues are the exact
    ones of the rational transfer function, so c_gk(0, k) = 0.

    Raises:
        RegimeError: outside both regimes.
    """
    comps = closed_form_cgk_components(t, k, params)
    total = comps.sum(axis=0)
    return complex(total) if total.ndim == 0 else total


# ---------------------------------------------------------------------------
# long waveguide


@dataclass(frozen=True)
class RegimeReport:
    omega0: float
    regime: str  # overdamped | critical | underdamped
    phase_label: str  # even-multiple-of-pi | odd-multiple-of-pi | generic
    kappa_tau_label: str  # same classification applied to κτ


def phase_class(x: float, tol: float = PI_MULTIPLE_TOL) -> str:
    """Classify x as an even or odd positive multiple of π, or generic."""
    n = round(x / math.pi)
    if n >= 1 and abs(x / math.pi - n) <= tol:
        return "even-multiple-of-pi" if n % 2 == 0 else "odd-multiple-of-pi"
    return "generic"


def classify_regime(params: PhysicalParams) -> RegimeReport:
    """Damping regime of the no-feedback oscillator and round-trip phase class.

    The oscillator is c̈ + 3κċ + (2γ² + 2κ²)c = 0 with discriminant
    κ²/4 − 2γ²; ``κ = 2√2γ`` is critical (relative tolerance 1e-9).
    """
    kap, g = params.kappa, params.gamma
    omega0 = math.sqrt(abs(kap ** 2 / 4 - 2 * g ** 2))
    edge = 2 * SQRT2 * g
    if abs(kap - edge) <= 1e-9 * edge:
        regime = "critical"
    elif kap > edge:
        regime = "overdamped"
    else:
        regime = "underdamped"
    return RegimeReport(omega0, regime, phase_class(params.phase), phase_class(params.kappa_tau))


def long_waveguide_solution(t, params: PhysicalParams, which: str = "c_e"):
    """Amplitude before the first round trip, from c̈ + 3κċ + (2γ² + 2κ²)c = 0.

    Initial data: c_e(0) = 1, ċ_e(0) = −κ; c_g(0) = 0, ċ_g(0) = i√2γ.
    """
    if which not in ("c_e", "c_g"):
        raise ValueError("which must be 'c_e' or 'c_g'")
    kap, g = params.kappa, params.gamma
    c0, v0 = (1.0 + 0j, -kap + 0j) if which == "c_e" else (0j, 1j * SQRT2 * g)
    t = np.asarray(t, dtype=float)
    rep = classify_regime(params)
    W = rep.omega0
    b = v0 + 1.5 * kap * c0
    decay = np.exp(-1.5 * kap * t)
    if rep.regime == "critical" or W == 0.0:
        val = (c0 + b * t) * decay
    elif rep.regime == "overdamped":
        val = (c0 * np.cosh(W * t) + b / W * np.sinh(W * t)) * decay
    else:
        val = (c0 * np.cos(W * t) + b / W * np.sin(W * t)) * decay
    return complex(val) if val.ndim == 0 else val


# ---------------------------------------------------------------------------
# steady-state two-photon amplitude


def _require_odd_pi(params: PhysicalParams) -> None:
    if phase_class(params.phase) != "odd-multiple-of-pi":
        raise RegimeError(
            f"steady state needs Δ₀τ an odd multiple of π (got Δ₀τ/π = {params.phase / math.pi:.9g})")


def steady_state_cgkk(k1, k2, params: PhysicalParams, form: str = "eight_term"):
    """Long-time two-photon amplitude c_gkk(∞, k₁, k₂) for Δ₀τ an odd multiple of π.

    ``form="eight_term"`` evaluates the eight-term small-τ expression

        −iG₀² sin(k₁L) sin(k₂L) [ H(ω₂)/(R − √(R²−γ²) + iδ₁) + I(ω₂)/(R + √ + iδ₁)
            + (1↔2) + J(ω₂)/(R + i(δ₁+δ₂−√2γ)) + K(ω₂)/(R + i(δ₁+δ₂+√2γ)) + (1↔2) ]

    with R = −2κ and δⱼ = ckⱼ − Δ₀. ``form="laplace"`` instead uses the exact
    rational C_gk: c_gkk(∞) = iG₀[sin(k₁L) C_gk(−iδ₁, k₂) + sin(k₂L) C_gk(−iδ₂, k₁)],
    which tracks simulation far more closely (see ``tests/test_analytic.py``).
    Arguments broadcast elementwise.

    Raises:
        RegimeError: Δ₀τ not an odd multiple of π.
        ResonanceError: an H/I/J/K denominator vanishes (eight-term form).
    """
    _require_odd_pi(params)
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    c, L, g0, g = params.c, params.L, params.g0, params.gamma
    d1 = c * k1 - params.delta0
    d2 = c * k2 - params.delta0
    s1, s2 = np.sin(k1 * L), np.sin(k2 * L)
    if form == "eight_term":
        R = -2.0 * params.kappa + 0j
        sq = np.sqrt(R * R - g * g)
        H1, I1, J1, K1 = coeffs_hijk(params, c * k1)
        H2, I2, J2, K2 = coeffs_hijk(params, c * k2)
        S = d1 + d2
        bracket = (H2 / (R - sq + 1j * d1) + I2 / (R + sq + 1j * d1)
                   + H1 / (R - sq + 1j * d2) + I1 / (R + sq + 1j * d2)
                   + J2 / (R + 1j * (S - SQRT2 * g)) + K2 / (R + 1j * (S + SQRT2 * g))
                   + J1 / (R + 1j * (S - SQRT2 * g)) + K1 / (R + 1j * (S + SQRT2 * g)))
        val = -1j * g0 ** 2 * s1 * s2 * bracket
    elif form == "laplace":
        val = 1j * g0 * (s1 * transfer_cgk(-1j * d1, k2, params)
                         + s2 * transfer_cgk(-1j * d2, k1, params))
    else:
        raise ValueError(f"form must be 'eight_term' or 'laplace', got {form!r}")
    return complex(val) if np.ndim(val) == 0 else val


# ---------------------------------------------------------------------------
# numerical Laplace transform of sampled trajectories


def numerical_laplace(t: np.ndarray, f: np.ndarray, s) -> np.ndarray:
    """Truncated transform ∫₀^T e^{−st} f(t) dt by Simpson's rule on the samples.

    The neglected tail is bounded by :func:`laplace_truncation_bound`.
    """
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=complex)
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    vals = np.array([simpson(np.exp(-sj * t) * f, x=t) for sj in s])
    return vals if np.ndim(s) else vals[0]


def laplace_truncation_bound(s, T: float, f_max: float = 1.0) -> float:
    """|∫_T^∞ e^{−st} f dt| <= f_max e^{−Re(s) T} / Re(s) for |f| <= f_max."""
    sr = float(np.real(s))
    if sr <= 0:
        return math.inf
    return f_max * math.exp(-sr * T) / sr


def laplace_horizon(s_re: float, eps: float, f_max: float = 1.0) -> float:
    """Smallest T with truncation bound <= eps at Re s = s_re."""
    if s_re <= 0 or eps <= 0:
        raise ValueError("need Re s > 0 and eps > 0")
    return max(0.0, math.log(f_max / (s_re * eps)) / s_re)
