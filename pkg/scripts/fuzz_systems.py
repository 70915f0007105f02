#!/usr/bin/env python3
"""Random-system fuzz driver for the extraction pipeline.

Generates seeded random multiautomata systems, extracts each one's
recognized set, and differential-tests membership against the simulator.
Failing systems (mismatch or budget blow-up) are written to ``--dump-dir``
as replayable .spec files.

Usage:
    python3 scripts/fuzz_systems.py --count 50 --seed 7 --dump-dir /tmp/bad
"""

import argparse
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from multiauto import construction, sim
from multiauto.cli import dump_spec, generate_system
from multiauto.presburger import BudgetExceeded


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-states", type=int, default=4)
    ap.add_argument("--max-automata", type=int, default=3)
    ap.add_argument("--max-messages", type=int, default=3)
    ap.add_argument("--n-max", type=int, default=200, help="largest input length checked")
    ap.add_argument("--dump-dir", default=None, help="write failing specs here")
    args = ap.parse_args(argv)

    rng = random.Random(args.seed)
    failures = []
    t0 = time.perf_counter()
    for i in range(args.count):
        system = generate_system(
            rng,
            max_states=args.max_states,
            max_automata=args.max_automata,
            max_messages=args.max_messages,
        )
        try:
            ups = construction.recognized_set(system)
            bad = [
                n
                for n in range(args.n_max + 1)
                if ups.member(n) != sim.accepts(system, n)
            ]
            verdict = None if not bad else f"mismatch at N={bad[0]} (got {ups})"
        except BudgetExceeded as exc:
            verdict = f"budget exceeded in stage {exc.stage}"
        if verdict is None:
            continue
        failures.append((i, verdict))
        print(f"[{i}] {verdict}")
        if args.dump_dir:
            out = Path(args.dump_dir)
            out.mkdir(parents=True, exist_ok=True)
            (out / f"fail-{args.seed}-{i}.spec").write_text(dump_spec(system))

    elapsed = time.perf_counter() - t0
    ok = args.count - len(failures)
    print(f"{ok}/{args.count} OK in {elapsed:.1f}s (seed={args.seed}, n_max={args.n_max})")
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
