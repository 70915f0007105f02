#!/usr/bin/env python3
"""Sweep every fixture: extract the recognized set and differential-test it.

For each ``fixtures/*.spec`` the script extracts the ultimately periodic set
via the formula pipeline, then compares membership against the ground-truth
simulator for every input length up to ``--n-max``.  Prints one row per
fixture with the extracted set and wall-clock timings.

Usage:
    python3 scripts/verify_fixtures.py [--n-max 300] [--fixtures DIR]
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from multiauto import construction, sim
from multiauto.cli import load_spec


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-max", type=int, default=300, help="largest input length checked")
    ap.add_argument(
        "--fixtures",
        default=str(Path(__file__).resolve().parents[1] / "fixtures"),
        help="directory of .spec files",
    )
    args = ap.parse_args(argv)

    paths = sorted(Path(args.fixtures).glob("*.spec"))
    if not paths:
        print(f"no .spec files under {args.fixtures}", file=sys.stderr)
        return 2

    failures = 0
    print(f"{'fixture':<20} {'extract':>8} {'check':>8}  recognized set")
    for path in paths:
        system = load_spec(str(path))
        t0 = time.perf_counter()
        ups = construction.recognized_set(system)
        t1 = time.perf_counter()
        bad = [
            n
            for n in range(args.n_max + 1)
            if ups.member(n) != sim.accepts(system, n)
        ]
        t2 = time.perf_counter()
        tag = f"MISMATCH at N={bad[0]}" if bad else str(ups)
        if bad:
            failures += 1
        print(f"{path.stem:<20} {t1 - t0:>7.2f}s {t2 - t1:>7.2f}s  {tag}")

    if failures:
        print(f"\n{failures} fixture(s) disagree with the simulator", file=sys.stderr)
        return 1
    print(f"\nall {len(paths)} fixtures agree with the simulator on [0, {args.n_max}]")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
