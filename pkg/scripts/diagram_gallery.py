#!/usr/bin/env python3
"""Render space-time diagrams for every fixture at a few input lengths.

Writes one SVG per (fixture, N) pair into ``--out-dir`` plus an index.html
so the gallery can be browsed in one page.

Usage:
    python3 scripts/diagram_gallery.py --out-dir /tmp/gallery --lengths 3 6 10
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from multiauto import sim
from multiauto.cli import load_spec, render_diagram


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="gallery")
    ap.add_argument("--lengths", type=int, nargs="+", default=[3, 6, 10])
    ap.add_argument(
        "--fixtures",
        default=str(Path(__file__).resolve().parents[1] / "fixtures"),
        help="directory of .spec files",
    )
    args = ap.parse_args(argv)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = []
    for path in sorted(Path(args.fixtures).glob("*.spec")):
        system = load_spec(str(path))
        for n in args.lengths:
            trace = sim.run(system, n)
            name = f"{path.stem}-N{n}.svg"
            (out / name).write_text(render_diagram(trace))
            cells.append(
                f'<figure><img src="{name}" alt="{name}">'
                f"<figcaption>{path.stem} N={n} "
                f"{type(trace.outcome).__name__}</figcaption></figure>"
            )
            print(f"wrote {out / name}")

    index = (
        "<!doctype html><title>multiauto gallery</title>"
        "<style>figure{display:inline-block;margin:8px;font-family:monospace}</style>\n"
        + "\n".join(cells)
        + "\n"
    )
    (out / "index.html").write_text(index)
    print(f"wrote {out / 'index.html'} ({len(cells)} diagrams)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
