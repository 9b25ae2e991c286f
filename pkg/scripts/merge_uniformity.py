#!/usr/bin/env python3
"""How uniform are seeded (4,4)-merges over the 70 possibilities?

Runs the chi-square experiment behind the merge-uniformity acceptance suite
at a configurable key count and prints the histogram extremes alongside the
test statistic.
"""

import argparse
import itertools

import numpy as np
from scipy.stats import chi2

from ossprim import merge, prng


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--keys", type=int, default=70_000)
    ap.add_argument("--alpha", type=float, default=0.001)
    ap.add_argument("--seed", default="00")
    args = ap.parse_args()

    root = prng.key_from_hex(args.seed, b"merge-uniformity")
    combos = {c: i for i, c in enumerate(itertools.combinations(range(8), 4))}
    counts = np.zeros(len(combos), dtype=np.int64)
    for i in range(args.keys):
        k = merge.make_merge_key(prng.prf_eval(root, i.to_bytes(8, "big"), 32), 4, 4)
        ones = tuple(merge.merge_forward(k, 1, x) for x in range(4))
        counts[combos[ones]] += 1

    expected = args.keys / len(combos)
    stat = float(np.sum((counts - expected) ** 2 / expected))
    threshold = float(chi2.ppf(1 - args.alpha, len(combos) - 1))
    print(f"keys={args.keys} classes={len(combos)} expected/class={expected:.1f}")
    print(f"min count={counts.min()} max count={counts.max()}")
    print(f"chi2={stat:.2f} threshold(alpha={args.alpha})={threshold:.2f} "
          f"=> {'uniform' if stat < threshold else 'NOT uniform'}")


if __name__ == "__main__":
    main()
