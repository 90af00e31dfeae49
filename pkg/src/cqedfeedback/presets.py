"""Scenario presets and their plain-text / JSON config forms.

A config file has one section per concern::

    [scenario]
    name = fig2
    scheme = continuous
    models = full, reduced
    checks = norm, antidiagonal, full_vs_reduced

    [params]
    gamma = 0.7853981633974483
    g0 = 0.5
    ...

    [grid]          ; continuous scheme
    k_min = 0.0
    k_max = 100.0
    n_k = 512

    [modes]         ; discrete scheme
    q_min = 1
    q_max = 39

    [integrator]
    dt = 0.0005
    t_end = 0.8
    ...

Floats are written with ``repr`` so a preset survives the round trip bit for
bit.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .continuous import IntegratorConfig
from .core import ContinuousModeGrid, DiscreteModeSet, PhysicalParams, derive_params

__all__ = [
    "ConfigError",
    "ScenarioPreset",
    "PRESETS",
    "GROUPS",
    "get_preset",
    "expand",
    "preset_to_dict",
    "preset_from_dict",
    "preset_to_ini",
    "preset_from_ini",
    "load_config",
]


class ConfigError(ValueError):
    """Unknown preset or malformed configuration."""


@dataclass(frozen=True)
class ScenarioPreset:
    """Everything needed to reproduce one simulated scenario."""

    name: str
    description: str
    scheme: str  # continuous | discrete
    params: PhysicalParams
    models: tuple[str, ...]
    dt: float
    t_end: float
    k_min: float = 0.0
    k_max: float = 0.0
    n_k: int = 0
    q_min: int = 0
    q_max: int = 0
    sample_stride: int = 1
    snapshot_times: tuple[float, ...] = ()
    cg_coupling: str = "eq9"
    theta_at_zero: float = 1.0
    feedback: bool = True
    norm_bound: float | None = None
    checks: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.scheme not in ("continuous", "discrete"):
            raise ConfigError(f"scheme must be continuous or discrete, got {self.scheme!r}")
        allowed = ("full", "reduced") if self.scheme == "continuous" else ("discrete",)
        if not self.models or any(m not in allowed for m in self.models):
            raise ConfigError(f"models {self.models} not valid for the {self.scheme} scheme")

    def grid(self) -> ContinuousModeGrid:
        return ContinuousModeGrid(self.k_min, self.k_max, self.n_k)

    def modes(self) -> DiscreteModeSet:
        return DiscreteModeSet(self.q_min, self.q_max, self.params.L)

    def integrator(self, workers: int = 1) -> IntegratorConfig:
        return IntegratorConfig(
            dt=self.dt, t_end=self.t_end, sample_stride=self.sample_stride,
            snapshot_times=self.snapshot_times, theta_at_zero=self.theta_at_zero,
            feedback=self.feedback, norm_bound=self.norm_bound,
            cg_coupling=self.cg_coupling, workers=workers)

    def with_overrides(self, dt: float | None = None, n_k: int | None = None,
                       q_max: int | None = None) -> "ScenarioPreset":
        changes = {}
        if dt is not None:
            changes["dt"] = float(dt)
        if n_k is not None:
            if self.scheme != "continuous":
                raise ConfigError("--nk applies to continuous scenarios only")
            changes["n_k"] = int(n_k)
        if q_max is not None:
            if self.scheme != "discrete":
                raise ConfigError("--qmax applies to discrete scenarios only")
            changes["q_max"] = int(q_max)
        return dataclasses.replace(self, **changes)


# ---------------------------------------------------------------------------
# built-in scenarios

_G0 = 0.5
_KAPPA = math.pi * _G0 ** 2 / 2.0  # c = 1


def _continuous(name, description, *, gamma, L, models, n_tau=80, steps_per_tau=20,
                k_min=0.0, k_max=100.0, n_k=512, checks=(), **kw):
    p = derive_params(gamma=gamma, g0=_G0, c=1.0, delta0=50.0, L=L)
    t_end = n_tau * p.tau
    return ScenarioPreset(
        name=name, description=description, scheme="continuous", params=p,
        models=tuple(models), dt=p.tau / steps_per_tau, t_end=t_end,
        k_min=k_min, k_max=k_max, n_k=n_k, snapshot_times=(t_end,),
        checks=tuple(checks), **kw)


def _fig4(name, label, gamma):
    p = derive_params(gamma=gamma, g0=_G0, c=1.0, delta0=50.0, L=5.0)
    return ScenarioPreset(
        name=name, scheme="continuous", params=p,
        description=f"long loop L = 5, {label} atom-cavity exchange, up to the first return",
        models=("reduced",), dt=0.01, t_end=p.tau, k_min=40.0, k_max=60.0, n_k=512,
        snapshot_times=(p.tau,), cg_coupling="eq8", checks=("regime", "two_photon_at_tau"))


def _fig5(name, description, gamma):
    p = derive_params(gamma=gamma, g0=0.05, c=1.0, delta0=50.0, L=0.1, l=0.01, r=0.999)
    return ScenarioPreset(
        name=name, description=description, scheme="discrete", params=p,
        models=("discrete",), dt=2e-4, t_end=10.0 / gamma, q_min=1, q_max=39,
        sample_stride=10, snapshot_times=(5.0 / gamma,),
        checks=("norm", "rabi", "two_photon_low", "damping", "mode_peak"))


PRESETS: dict[str, ScenarioPreset] = {
    p.name: p for p in (
        _continuous("fig2", "short loop L = 0.005, γ = 2κ, full and reduced models to 80τ",
                    gamma=2 * _KAPPA, L=0.005, models=("full", "reduced"),
                    checks=("norm", "antidiagonal", "full_vs_reduced", "closed_form")),
        _continuous("fig3a", "round-trip phase Δ₀τ = π: both photons leave into the waveguide",
                    gamma=2 * _KAPPA, L=math.pi / 100, models=("full",),
                    checks=("norm", "antidiagonal", "two_photon_high", "schmidt")),
        _continuous("fig3b", "round-trip phase Δ₀τ = 2π: trapped Rabi oscillation",
                    gamma=2 * _KAPPA, L=math.pi / 50, models=("full",),
                    checks=("norm", "two_photon_low", "envelope")),
        _fig4("fig4_over", "overdamped (κ = 4√2γ)", _KAPPA / (4 * math.sqrt(2))),
        _fig4("fig4_critical", "critically damped (κ = 2√2γ)", _KAPPA / (2 * math.sqrt(2))),
        _fig4("fig4_under", "underdamped (κ = √2γ/2)", _KAPPA * math.sqrt(2)),
        _fig5("fig5", "discrete comb L = 0.1, q = 1..39, strong atom-cavity coupling", 1.0),
        _fig5("fig5_weak", "discrete comb L = 0.1, q = 1..39, weak atom-cavity coupling", 0.2),
    )
}

GROUPS: dict[str, tuple[str, ...]] = {
    "fig4": ("fig4_over", "fig4_critical", "fig4_under"),
}


def get_preset(name: str) -> ScenarioPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}") from None


def expand(name: str) -> list[ScenarioPreset]:
    """A preset name or a group name, as a list of presets."""
    if name in GROUPS:
        return [PRESETS[n] for n in GROUPS[name]]
    return [get_preset(name)]


# ---------------------------------------------------------------------------
# serialization

_RAW_PARAMS = ("gamma", "g0", "c", "delta0", "L", "l", "r")


def preset_to_dict(p: ScenarioPreset) -> dict:
    out = {
        "scenario": {
            "name": p.name, "description": p.description, "scheme": p.scheme,
            "models": list(p.models), "checks": list(p.checks),
        },
        "params": p.params.as_dict(),
        "integrator": {
            "dt": p.dt, "t_end": p.t_end, "sample_stride": p.sample_stride,
            "snapshot_times": list(p.snapshot_times), "cg_coupling": p.cg_coupling,
            "theta_at_zero": p.theta_at_zero, "feedback": p.feedback,
            "norm_bound": p.norm_bound,
        },
    }
    if p.scheme == "continuous":
        out["grid"] = {"k_min": p.k_min, "k_max": p.k_max, "n_k": p.n_k}
    else:
        out["modes"] = {"q_min": p.q_min, "q_max": p.q_max}
    return out


def _num(section: dict, key: str, kind=float, default=None):
    if key not in section:
        if default is not None or kind is None:
            return default
        raise ConfigError(f"missing key {key!r}")
    value = section[key]
    try:
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key!r} must be {kind.__name__}, got {value!r}") from None


def _bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def _list(value) -> list:
    if isinstance(value, (list, tuple)):
        return list(value)
    return [v.strip() for v in str(value).split(",") if v.strip()]


def preset_from_dict(d: dict) -> ScenarioPreset:
    """Inverse of :func:`preset_to_dict`.

    Raises:
        ConfigError: missing sections/keys or invalid values.
    """
    try:
        sc, pa, it = d["scenario"], d["params"], d["integrator"]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"missing config section {exc}") from None
    try:
        params = derive_params(**{k: _num(pa, k) for k in _RAW_PARAMS})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    nb = it.get("norm_bound")
    kw = dict(
        name=str(sc.get("name", "custom")),
        description=str(sc.get("description", "")),
        scheme=str(sc.get("scheme", "continuous")),
        params=params,
        models=tuple(_list(sc.get("models", ""))),
        checks=tuple(_list(sc.get("checks", ""))),
        dt=_num(it, "dt"), t_end=_num(it, "t_end"),
        sample_stride=_num(it, "sample_stride", int, 1),
        snapshot_times=tuple(float(x) for x in _list(it.get("snapshot_times", []))),
        cg_coupling=str(it.get("cg_coupling", "eq9")),
        theta_at_zero=_num(it, "theta_at_zero", float, 1.0),
        feedback=_bool(it.get("feedback", True)),
        norm_bound=None if nb in (None, "", "none", "None") else float(nb),
    )
    if kw["scheme"] == "continuous":
        g = d.get("grid")
        if not g:
            raise ConfigError("continuous scheme needs a [grid] section")
        kw.update(k_min=_num(g, "k_min"), k_max=_num(g, "k_max"), n_k=_num(g, "n_k", int))
    else:
        m = d.get("modes")
        if not m:
            raise ConfigError("discrete scheme needs a [modes] section")
        kw.update(q_min=_num(m, "q_min", int), q_max=_num(m, "q_max", int))
    preset = ScenarioPreset(**kw)
    try:  # validate the derived objects eagerly so errors surface as config errors
        preset.integrator()
        preset.grid() if preset.scheme == "continuous" else preset.modes()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return preset


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_fmt(v) for v in value)
    if value is None:
        return "none"
    return str(value)


def preset_to_ini(p: ScenarioPreset) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep case: L and l are different keys
    for section, values in preset_to_dict(p).items():
        cp[section] = {k: _fmt(v) for k, v in values.items()}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def preset_from_ini(text: str) -> ScenarioPreset:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unparsable config: {exc}") from None
    return preset_from_dict({s: dict(cp[s]) for s in cp.sections()})


def load_config(path: str | Path) -> ScenarioPreset:
    """Read a ``.json`` or INI-style config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if path.suffix.lower() == ".json":
        try:
            return preset_from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"unparsable JSON config: {exc}") from None
    return preset_from_ini(text)
