#!/usr/bin/env python3
"""Run every bundled scenario preset and collect the outputs in one place.

Each preset writes its CSV table plus a JSON metadata sidecar into
``<out>/<name>/``.  Outputs are deterministic, so re-running into the same
directory reproduces identical bytes.

Usage:
    python3 scripts/reproduce_all.py --out runs
    python3 scripts/reproduce_all.py --out runs --only fig3 fig8 --jobs 2

The full set takes roughly half an hour on one core; fig4 and fig6 (the two
sweeps) dominate.  Use ``--only`` for a quick pass over the cheap scenarios.
"""

import argparse
import sys
import time
from pathlib import Path

from rabimod.harness.cli import EXIT_OK, main
from rabimod.harness.experiments import PRESETS


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs", help="output root directory")
    parser.add_argument("--only", nargs="*", metavar="NAME",
                        help="subset of scenario names (default: all)")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker processes per scenario")
    args = parser.parse_args(argv)

    names = args.only if args.only else sorted(PRESETS)
    unknown = [n for n in names if n not in PRESETS]
    if unknown:
        parser.error(f"unknown scenario(s): {', '.join(unknown)} "
                     f"(available: {', '.join(sorted(PRESETS))})")

    root = Path(args.out)
    failures = []
    timings = []
    for name in names:
        target = root / name
        started = time.perf_counter()
        code = main(["reproduce", name, "--out", str(target),
                     "--jobs", str(args.jobs)])
        elapsed = time.perf_counter() - started
        timings.append((name, elapsed, code))
        status = "ok" if code == EXIT_OK else f"exit {code}"
        print(f"[{name}] {status} in {elapsed:.1f}s -> {target}/",
              file=sys.stderr)
        if code != EXIT_OK:
            failures.append(name)

    print("\nscenario  seconds  exit", file=sys.stderr)
    for name, elapsed, code in timings:
        print(f"{name:<9} {elapsed:8.1f}  {code}", file=sys.stderr)
    if failures:
        print(f"\nfailed: {', '.join(failures)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(run())
