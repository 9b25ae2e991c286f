#!/usr/bin/env python3
"""Throughput of the full-domain permutation at scale (INSECURE-DEMO keys).

Times batched forward/inverse sweeps of the 2^bits permutation and verifies
the round trip pointwise.
"""

import argparse
import time

import numpy as np

from ossprim import nsprp
from ossprim.prng import key_from_hex


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bits", type=int, default=64)
    ap.add_argument("--points", type=int, default=10_000)
    ap.add_argument("--seed", default="0c")
    args = ap.parse_args()

    k = nsprp.make_scale_prp_key(key_from_hex(args.seed).seed, args.bits)
    rng = np.random.default_rng(0)
    xs = rng.integers(0, 1 << min(args.bits, 63), size=args.points, dtype=np.uint64)
    nsprp.prp_forward_batch(k, xs[:4])  # warm numpy dispatch

    t0 = time.monotonic()
    ys = nsprp.prp_forward_batch(k, xs)
    t_fwd = time.monotonic() - t0
    t0 = time.monotonic()
    back = nsprp.prp_inverse_batch(k, ys)
    t_inv = time.monotonic() - t0
    assert (back == xs).all(), "round trip failed"

    print(f"bits={args.bits} points={args.points}")
    print(f"forward: {t_fwd:.2f}s ({args.points / t_fwd:.0f}/s)")
    print(f"inverse: {t_inv:.2f}s ({args.points / t_inv:.0f}/s)")
    print("round trip: OK")


if __name__ == "__main__":
    main()
