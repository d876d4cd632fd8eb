"""Trace the FHN fast-pulse branch over a list of eps values.

For each eps the pulse is continued from the singular orbit; past the fold
the solver reports the largest eps it reached.

    python3 scripts/fold_scan.py --a 0.25 --eps 2e-4 4e-4 6e-4 8e-4 1e-3 2e-3
"""
from __future__ import annotations

import argparse
import time

from wavemaslov.fhn import FhnParams, nagumo_front
from wavemaslov.fhn_case import fhn_wave
from wavemaslov.pipeline import PipelineError


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--a", type=float, default=0.25)
    ap.add_argument("--gamma", type=float, default=0.0)
    ap.add_argument("--eps", type=float, nargs="+", default=[2e-4, 4e-4, 6e-4, 8e-4, 1e-3, 2e-3])
    args = ap.parse_args()
    c_star = nagumo_front(args.a)[0]
    print(f"a={args.a} gamma={args.gamma}  Nagumo speed c*={c_star:.10f}")
    print(f"{'eps':>10} {'c':>16} {'(c-c*)/eps':>12} {'nodes':>7} {'sec':>6}")
    for eps in sorted(args.eps):
        t0 = time.perf_counter()
        try:
            wave, c = fhn_wave(FhnParams(args.a, eps, args.gamma))
        except PipelineError as err:
            print(f"{eps:10.3g}  no pulse: {err}")
            continue
        print(f"{eps:10.3g} {c:16.10f} {(c - c_star) / eps:12.4f} {wave.grid.size:7d} "
              f"{time.perf_counter() - t0:6.1f}")


if __name__ == "__main__":
    main()
