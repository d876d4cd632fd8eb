"""Run the parity regression corpus and write one summary row per wave.

    python3 scripts/corpus.py --out corpus_out [--save-profiles]
"""
from __future__ import annotations

import argparse
from pathlib import Path

from wavemaslov import io as wio
from wavemaslov.fhn import FhnParams
from wavemaslov.fhn_case import run_fhn
from wavemaslov.profile import save_profile

CORPUS = [
    (0.25, 0.0005, 0.0),
    (0.25, 0.00025, 0.0),
    (0.2, 0.0005, 0.0),
    (0.3, 0.0003, 0.0),
    (0.25, 0.0004, 0.5),
    (0.15, 0.001, 0.0),
]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="corpus_out")
    ap.add_argument("--save-profiles", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    rows = []
    for a, eps, gamma in CORPUS:
        rep = run_fhn(FhnParams(a, eps, gamma))
        d = rep.analysis.derivative
        row = {
            "a": a, "eps": eps, "gamma": gamma, "c": rep.c,
            "signatures": rep.crossings.signatures(), "index": rep.crossings.index,
            "lt": rep.lt, "melnikov": rep.melnikov, "dPrime0": rep.dPrime0,
            "fdCheck": d.fdCheck, "relGap": d.relGap, "consistent": rep.consistent,
        }
        rows.append(row)
        print(f"a={a} eps={eps} gamma={gamma}: index {row['index']} {row['signatures']} "
              f"lt>0 {rep.lt > 0} consistent {rep.consistent} relGap {d.relGap:.2e}", flush=True)
        if args.save_profiles:
            save_profile(rep.wave, out / f"profile_a{a}_eps{eps}_g{gamma}.json")
    wio.atomic_write(out / "corpus.json", wio.dumps({"runs": rows}) + "\n")


if __name__ == "__main__":
    main()
