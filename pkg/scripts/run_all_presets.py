#!/usr/bin/env python3
"""Run every built-in scenario through the CLI and print a pass/fail table.

Usage: python3 scripts/run_all_presets.py [--out-dir out] [--workers N]
"""

import argparse
import json
import time
from pathlib import Path

from cqedfeedback import cli
from cqedfeedback.presets import PRESETS


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", type=Path, default=Path("out"))
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--only", nargs="*", help="subset of preset names")
    args = ap.parse_args()

    names = args.only or list(PRESETS)
    for name in names:
        out = args.out_dir / name
        t0 = time.perf_counter()
        code = cli.main(["simulate", "--preset", name, "--out-dir", str(out),
                         "--workers", str(args.workers)])
        elapsed = time.perf_counter() - t0
        if code != 0:
            print(f"{name:<14} exit {code}")
            continue
        summary = json.loads((out / "summary.json").read_text())
        verdict = "PASS" if summary["all_passed"] else "FAIL"
        print(f"{name:<14} {verdict}  {elapsed:7.1f}s  regime={summary['regime']['regime']}")


if __name__ == "__main__":
    main()
