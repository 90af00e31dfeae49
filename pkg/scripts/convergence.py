#!/usr/bin/env python3
"""Time-step convergence of the full and reduced continuous models.

Integrates the fig2 scenario at dt = τ/f for a ladder of f and reports the
max |c_e|² error against the finest run and the successive error ratios
(16 for a fourth-order scheme).
"""

import argparse
import dataclasses

import numpy as np

from cqedfeedback.continuous import integrate
from cqedfeedback.presets import get_preset


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="fig2")
    ap.add_argument("--model", choices=("full", "reduced"), default="full")
    ap.add_argument("--nk", type=int, default=64)
    ap.add_argument("--factors", type=int, nargs="+", default=[10, 20, 40, 80])
    args = ap.parse_args()

    preset = dataclasses.replace(get_preset(args.preset), n_k=args.nk, snapshot_times=())
    tau = preset.params.tau
    f0 = args.factors[0]
    runs = {}
    for f in args.factors:
        cfg = dataclasses.replace(preset.integrator(), dt=tau / f, sample_stride=f // f0)
        runs[f] = integrate(args.model, preset.params, preset.grid(), cfg).pop_e
    ref = runs[args.factors[-1]]
    errs = [float(np.max(np.abs(runs[f] - ref))) for f in args.factors[:-1]]
    for f, e in zip(args.factors, errs):
        print(f"dt = tau/{f:<4d} max |c_e|^2 error {e:.3e}")
    for (fa, ea), (fb, eb) in zip(zip(args.factors, errs), zip(args.factors[1:], errs[1:])):
        print(f"ratio tau/{fa} -> tau/{fb}: {ea / eb:.2f}")


if __name__ == "__main__":
    main()
