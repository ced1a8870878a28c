"""Null calibration: equal hashjacking rates on both sides, so the true odds ratio is 1.

    python3 scripts/null_calibration.py --seeds 50 --rate 0.05
"""
from __future__ import annotations

import argparse
import dataclasses

from hashjack.validation import NULL_CONFIG, sweep


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=50)
    parser.add_argument("--first-seed", type=int, default=0)
    parser.add_argument("--rate", type=float, default=0.05)
    parser.add_argument("--level", type=float, default=0.99)
    parser.add_argument("--universe", choices=("labeled", "pair"), default="pair")
    args = parser.parse_args()

    synth = dataclasses.replace(NULL_CONFIG, hashjack_matrix={("afd", "csu"): args.rate},
                                contra_hashjack={("afd", "csu"): args.rate})
    summary = sweep(synth, range(args.first_seed, args.first_seed + args.seeds), target=1.0,
                    level=args.level, universe=args.universe)
    print("seed,odds,ci_low,ci_high,covers")
    for r in summary.runs:
        print(f"{r.seed},{r.odds:.4f},{r.ci_low:.4f},{r.ci_high:.4f},{int(r.covers)}")
    print(f"# covered {summary.covered}/{len(summary.runs)} at level {args.level}; "
          f"median {summary.median_odds:.4f}; total {summary.seconds:.1f} s")


if __name__ == "__main__":
    main()
