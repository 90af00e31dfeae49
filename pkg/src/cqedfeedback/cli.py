"""Command-line driver: run presets or config files and write CSV/JSON artifacts.

Exit codes: 0 success, 2 configuration error, 3 numerical abort, 4 a
theorem check failed under ``--assert``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analytic, checks
from .analytic import PoleProximityError, RegimeError, ResonanceError
from .continuous import NormDriftError, integrate
from .discrete import (coupling_ratio_exact, coupling_ratio_lorentzian, integrate_discrete,
                       comb_phase_sum, lorentzian_profile, mode_spectrum_peak)
from .entanglement import entanglement_vs_kappa, schmidt_decompose
from .presets import (GROUPS, PRESETS, ConfigError, ScenarioPreset, expand, load_config,
                      preset_to_dict)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ASSERT = 0, 2, 3, 4

TS_UNITS = {
    "t": "time", "pop_e": "1", "pop_g": "1", "pop_ek": "1", "pop_gk": "1", "pop_gkk": "1",
    "norm": "1", "re_c_e": "1", "im_c_e": "1", "re_c_g": "1", "im_c_g": "1",
}

# thresholds for the summary checks
NORM_TOL = 1e-3
ANTIDIAG_TOL = 0.05
EQUIV_TOL = 5e-2
CLOSED_FORM_TOL = 1e-2
TWO_PHOTON_HIGH = 0.9
ATOM_CAVITY_LOW = 0.01
TWO_PHOTON_LOW = 0.05
ENVELOPE_TOL = 0.05
TWO_PHOTON_AT_TAU = 0.95
RABI_TOL = 0.05
DAMPING_TOL = 0.02
CONCENTRATION_MIN = 5.0
COMB_SUM_TOL = 0.05


# ---------------------------------------------------------------------------
# file helpers


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, columns: dict[str, np.ndarray], units: dict[str, str]) -> None:
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{n} [{units.get(n, '1')}]" for n in names])
        for row in zip(*arrays):
            w.writerow([repr(float(v)) if not isinstance(v, (np.integer, int)) else str(int(v))
                        for v in row])


def write_matrix(path: Path, a: np.ndarray) -> None:
    np.savetxt(path, a, fmt="%.17e", delimiter=",")


# ---------------------------------------------------------------------------
# simulate


def _model_summary(rec) -> dict:
    return {
        "final": {"t": rec.t[-1], "pop_e": rec.pop_e[-1], "pop_g": rec.pop_g[-1],
                  "pop_ek": rec.pop_ek[-1], "pop_gk": rec.pop_gk[-1],
                  "pop_gkk": rec.pop_gkk[-1], "norm": rec.norm[-1]},
        "norm_drift": rec.norm_drift,
    }


def _write_record(out: Path, model: str, rec) -> dict:
    write_csv(out / f"{model}_timeseries.csv", rec.columns(), TS_UNITS)
    write_csv(out / f"{model}_modes.csv",
              {"k": rec.mode_values, "weight": rec.weights}, {"k": "1/length", "weight": "1/length"})
    index = []
    for n, ts in enumerate(sorted(rec.snapshots_gkk)):
        stem = f"{model}_snap{n:03d}"
        write_matrix(out / f"{stem}_cgkk_re.csv", rec.snapshots_gkk[ts].real)
        write_matrix(out / f"{stem}_cgkk_im.csv", rec.snapshots_gkk[ts].imag)
        gk = rec.snapshots_gk[ts]
        write_csv(out / f"{stem}_cgk.csv", {"k": rec.mode_values, "re_c_gk": gk.real,
                                            "im_c_gk": gk.imag}, {"k": "1/length"})
        index.append({"t": ts, "cgkk_re": f"{stem}_cgkk_re.csv",
                      "cgkk_im": f"{stem}_cgkk_im.csv", "cgk": f"{stem}_cgk.csv",
                      "modes": f"{model}_modes.csv"})
    write_json(out / f"{model}_snapshots.json", index)
    return _model_summary(rec)


def _last_snapshot(rec):
    ts = max(rec.snapshots_gkk)
    return ts, rec.snapshots_gkk[ts], rec.snapshots_gk[ts]


def evaluate_checks(preset: ScenarioPreset, records: dict) -> dict:
    """Theorem-check statistics and pass flags for a finished run."""
    p = preset.params
    first = records[preset.models[0]]
    res: dict[str, dict] = {}
    for name in preset.checks:
        if name == "norm":
            drift = max(records[m].norm_drift for m in records if m != "reduced")
            res[name] = {"value": drift, "passed": drift <= NORM_TOL}
        elif name == "antidiagonal":
            _, M, _ = _last_snapshot(first)
            r = checks.antidiagonal_ratio(M, first.mode_values, p)
            res[name] = {"value": r, "passed": r <= ANTIDIAG_TOL}
        elif name == "full_vs_reduced":
            a, b = records["full"], records["reduced"]
            de = float(np.max(np.abs(a.pop_e - b.pop_e)))
            dg = float(np.max(np.abs(a.pop_g - b.pop_g)))
            res[name] = {"pop_e": de, "pop_g": dg, "passed": max(de, dg) <= EQUIV_TOL}
        elif name == "closed_form":
            rec = records.get("reduced", first)
            ce, cg = analytic.closed_form_ce_cg(rec.t, p)
            de = float(np.max(np.abs(np.abs(ce) ** 2 - rec.pop_e)))
            dg = float(np.max(np.abs(np.abs(cg) ** 2 - rec.pop_g)))
            res[name] = {"pop_e": de, "pop_g": dg, "passed": max(de, dg) <= CLOSED_FORM_TOL}
        elif name == "two_photon_high":
            two = first.pop_gkk[-1]
            ac = first.pop_e[-1] + first.pop_g[-1]
            res[name] = {"pop_gkk": two, "pop_e_plus_g": ac,
                         "passed": two >= TWO_PHOTON_HIGH and ac <= ATOM_CAVITY_LOW}
        elif name == "two_photon_low":
            peak = float(np.max(first.pop_gkk))
            res[name] = {"value": peak, "passed": peak <= TWO_PHOTON_LOW}
        elif name == "envelope":
            drop = checks.envelope_drop(first.t, first.pop_e, 0.5)
            res[name] = {"value": drop, "passed": bool(drop <= ENVELOPE_TOL)}
        elif name == "schmidt":
            _, M, _ = _last_snapshot(first)
            rep = schmidt_decompose(M, first.weights)
            res[name] = {"entropy": rep.entropy, "schmidt_number": rep.schmidt_number,
                         "rank": rep.rank, "passed": rep.schmidt_number > 1.0 + 1e-3}
        elif name == "regime":
            rep = analytic.classify_regime(p)
            entry = {"regime": rep.regime, "omega0": rep.omega0, "phase_label": rep.phase_label}
            ok = True
            if rep.regime == "overdamped":
                entry["monotone_abs_ce"] = checks.monotone_abs_ce(first, p.tau)
                ok = entry["monotone_abs_ce"]
            elif rep.regime == "underdamped":
                entry["maxima_before_tau"] = checks.count_maxima_before(first.t, first.pop_e, p.tau)
                ok = entry["maxima_before_tau"] >= 2
            entry["passed"] = ok
            res[name] = entry
        elif name == "two_photon_at_tau":
            two = first.pop_gkk[first.at(p.tau)]
            res[name] = {"value": two, "passed": two >= TWO_PHOTON_AT_TAU}
        elif name == "rabi":
            err = checks.rabi_error(first)
            res[name] = {"value": err, "passed": err <= RABI_TOL}
        elif name == "damping":
            rate = checks.damping_rate(first)
            res[name] = {"value": rate, "relative": rate / p.gamma,
                         "passed": bool(rate <= DAMPING_TOL * p.gamma)}
        elif name == "mode_peak":
            ts, _, gk = _last_snapshot(first)
            modes = preset.modes()
            pk = mode_spectrum_peak(gk, modes, p)
            lem = abs(comb_phase_sum(gk, modes, p, ts)) / float(np.max(np.abs(gk)))
            res[name] = {"t": ts, "q_star": pk.q_star, "q_resonant": pk.q_resonant,
                         "concentration": pk.concentration, "comb_sum_ratio": lem,
                         "passed": pk.at_resonance and pk.concentration >= CONCENTRATION_MIN
                         and lem <= COMB_SUM_TOL}
        else:
            raise ConfigError(f"unknown check {name!r}")
    return res


def simulate(preset: ScenarioPreset, out: Path, workers: int = 1) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(_clean(preset_to_dict(preset)), indent=2,
                                                sort_keys=True) + "\n")
    cfg = preset.integrator(workers)
    records = {}
    summary: dict = {"scenario": preset.name, "models": {}}
    for model in preset.models:
        if preset.scheme == "discrete":
            rec = integrate_discrete(preset.params, preset.modes(), cfg)
        else:
            rec = integrate(model, preset.params, preset.grid(), cfg)
        records[model] = rec
        summary["models"][model] = _write_record(out, model, rec)
    rep = analytic.classify_regime(preset.params)
    summary["regime"] = {"regime": rep.regime, "omega0": rep.omega0,
                         "phase_label": rep.phase_label, "kappa_tau_label": rep.kappa_tau_label}
    summary["derived"] = {"kappa": preset.params.kappa, "tau": preset.params.tau,
                          "Gamma": preset.params.Gamma}
    summary["checks"] = evaluate_checks(preset, records)
    summary["all_passed"] = all(c["passed"] for c in summary["checks"].values())
    write_json(out / "summary.json", summary)
    return summary


# ---------------------------------------------------------------------------
# analytic / schmidt / modes


def analytic_report(preset: ScenarioPreset, out: Path, n_points: int = 801) -> dict:
    if preset.scheme != "continuous":
        raise ConfigError("analytic predictions cover the continuous scheme only")
    out.mkdir(parents=True, exist_ok=True)
    p = preset.params
    t = np.linspace(0.0, preset.t_end, n_points)
    ce, cg = analytic.closed_form_ce_cg(t, p)
    cols = {"t": t, "pop_e": np.abs(ce) ** 2, "pop_g": np.abs(cg) ** 2,
            "re_c_e": ce.real, "im_c_e": ce.imag, "re_c_g": cg.real, "im_c_g": cg.imag}
    tw = np.minimum(t, p.tau)
    le = analytic.long_waveguide_solution(tw, p, "c_e")
    lg = analytic.long_waveguide_solution(tw, p, "c_g")
    cols.update({"pop_e_long": np.abs(le) ** 2, "pop_g_long": np.abs(lg) ** 2})
    write_csv(out / "analytic_timeseries.csv", cols, TS_UNITS)
    s = np.array([0.5, 1.0, 1.5, 2.0, 1.0 + 1.0j])
    Ce = analytic.transfer_ce(s, p)
    Cg = analytic.transfer_cg(s, p)
    write_csv(out / "transfer.csv", {"re_s": s.real, "im_s": s.imag, "re_C_e": Ce.real,
                                     "im_C_e": Ce.imag, "re_C_g": Cg.real, "im_C_g": Cg.imag},
              {"re_s": "rad/time", "im_s": "rad/time", "re_C_e": "time", "im_C_e": "time",
               "re_C_g": "time", "im_C_g": "time"})
    rep = analytic.classify_regime(p)
    co = analytic.coeffs_defr(p, p.delta0)
    summary = {
        "scenario": preset.name,
        "regime": {"regime": rep.regime, "omega0": rep.omega0, "phase_label": rep.phase_label,
                   "kappa_tau_label": rep.kappa_tau_label},
        "coefficients": {"E": co.E, "F": co.F, "re_R": co.R.real, "im_R": co.R.imag},
        "kappa_tau": p.kappa_tau,
    }
    write_json(out / "analytic_summary.json", summary)
    return summary


def schmidt_report(preset: ScenarioPreset, out: Path, form: str = "eight_term") -> dict:
    if preset.scheme != "continuous":
        raise ConfigError("steady-state Schmidt analysis covers the continuous scheme only")
    out.mkdir(parents=True, exist_ok=True)
    p = preset.params
    grid = preset.grid()
    k = grid.values
    M = analytic.steady_state_cgkk(k[:, None], k[None, :], p, form=form)
    rep = schmidt_decompose(M, grid)
    write_csv(out / "schmidt_spectrum.csv",
              {"n": np.arange(len(rep.singular_values)), "sigma": rep.singular_values,
               "p": rep.probabilities}, {"n": "1", "sigma": "1", "p": "1"})
    rows, monotone = entanglement_vs_kappa(p, [p.kappa / 4, p.kappa], grid, form=form)
    summary = {
        "scenario": preset.name, "form": form,
        "entropy": rep.entropy, "schmidt_number": rep.schmidt_number, "rank": rep.rank,
        "kappa_sweep": [{"kappa": r.kappa, "entropy": r.entropy,
                         "schmidt_number": r.schmidt_number, "error": r.error} for r in rows],
        "entropy_nonincreasing_in_kappa": monotone,
    }
    summary["checks"] = {
        "entangled": {"value": rep.schmidt_number, "passed": rep.schmidt_number > 1.0 + 1e-3},
        "smaller_kappa_more_entangled": {"passed": monotone},
    }
    write_json(out / "schmidt_summary.json", summary)
    return summary


def modes_report(preset: ScenarioPreset, out: Path) -> dict:
    if preset.scheme != "discrete":
        raise ConfigError("mode tables cover the discrete scheme only")
    out.mkdir(parents=True, exist_ok=True)
    p = preset.params
    modes = preset.modes()
    k = modes.values
    cols = {"q": modes.q, "k": k, "detuning": p.c * k - p.delta0,
            "ratio_exact": coupling_ratio_exact(k, p.l, p.L)}
    units = {"q": "1", "k": "1/length", "detuning": "rad/time", "ratio_exact": "1"}
    if p.Gamma > 0:
        cols["ratio_lorentzian"] = coupling_ratio_lorentzian(k, p)
        cols["profile"] = lorentzian_profile(modes, p)
        units.update(ratio_lorentzian="1", profile="time")
    write_csv(out / "modes.csv", cols, units)
    pk = mode_spectrum_peak(lorentzian_profile(modes, p), modes, p) if p.Gamma > 0 else None
    summary = {"scenario": preset.name, "n_modes": len(modes), "Gamma": p.Gamma,
               "profile_peak_q": pk.q_star if pk else None,
               "profile_concentration": pk.concentration if pk else None}
    write_json(out / "modes_summary.json", summary)
    return summary


def list_scenarios(as_json: bool = False) -> str:
    if as_json:
        items = [{"name": n, "description": PRESETS[n].description, "scheme": PRESETS[n].scheme}
                 for n in PRESETS]
        items += [{"name": g, "description": "group: " + ", ".join(m), "scheme": "group"}
                  for g, m in GROUPS.items()]
        return json.dumps(items, indent=2, sort_keys=True)
    lines = [f"{n:<14} {p.description}" for n, p in PRESETS.items()]
    lines += [f"{g:<14} group of {', '.join(m)}" for g, m in GROUPS.items()]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# argument parsing


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--preset", help="built-in scenario or group name (see `list`)")
    src.add_argument("--config", type=Path, help="INI-style or .json scenario file")
    common.add_argument("--out-dir", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--assert", dest="do_assert", action="store_true",
                        help="exit 4 when a theorem check fails")
    common.add_argument("--dt", type=float, help="override the time step")
    common.add_argument("--nk", type=int, help="override the continuous grid size")
    common.add_argument("--qmax", type=int, help="override the highest discrete mode index")
    common.add_argument("--json", action="store_true", help="print the summary as JSON")
    common.add_argument("--workers", type=int, default=1, help="threads for the dense kernels")

    ap = argparse.ArgumentParser(prog="cqedfb", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="integrate a scenario")
    a = sub.add_parser("analytic", parents=[common], help="closed-form predictions")
    a.add_argument("--points", type=int, default=801)
    s = sub.add_parser("schmidt", parents=[common], help="steady-state Schmidt analysis")
    s.add_argument("--form", choices=("eight_term", "laplace"), default="eight_term")
    sub.add_parser("modes", parents=[common], help="discrete mode coupling table")
    lst = sub.add_parser("list", help="list built-in scenarios")
    lst.add_argument("--json", action="store_true")
    return ap


def _resolve(args) -> list[ScenarioPreset]:
    if args.config is not None:
        presets = [load_config(args.config)]
    elif args.preset:
        presets = expand(args.preset)
    else:
        raise ConfigError("give --preset or --config")
    return [p.with_overrides(dt=args.dt, n_k=args.nk, q_max=args.qmax) for p in presets]


def _report(summary: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(_clean(summary), indent=2, sort_keys=True))
        return
    print(f"[{summary.get('scenario')}]")
    for name, c in summary.get("checks", {}).items():
        detail = ", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                           for k, v in c.items() if k != "passed")
        print(f"  {'PASS' if c['passed'] else 'FAIL'}  {name}: {detail}")


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list":
        print(list_scenarios(args.json))
        return EXIT_OK
    failed = False
    try:
        presets = _resolve(args)
        multi = len(presets) > 1
        for preset in presets:
            out = args.out_dir / preset.name if multi else args.out_dir
            if args.command == "simulate":
                summary = simulate(preset, out, args.workers)
            elif args.command == "analytic":
                summary = analytic_report(preset, out, args.points)
            elif args.command == "schmidt":
                summary = schmidt_report(preset, out, args.form)
            else:
                summary = modes_report(preset, out)
            _report(summary, args.json)
            failed |= not all(c["passed"] for c in summary.get("checks", {}).values())
    except (ConfigError, RegimeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NormDriftError, PoleProximityError, ResonanceError, FloatingPointError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if failed and args.do_assert:
        return EXIT_ASSERT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
