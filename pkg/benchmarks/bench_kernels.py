#!/usr/bin/env python3
"""Side-by-side timing of the numba and numpy kernel flavours.

Both flavours are called directly (the DDPMINE_BACKEND flag only picks the
default), outputs are checked for equality, and JIT compile time is paid in a
warmup call before timing.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from ddpmine import _accel, kernels


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(rng):
    # one masking pass of an owner with 20 neighbours over 500 entries, 1000 owners
    n_owners, length, degree = 1000, 500, 20
    base = rng.integers(0, 2**64, size=(n_owners, length), dtype=np.uint64)
    seeds = rng.integers(0, 2**64, size=(n_owners, degree), dtype=np.uint64)
    signs = rng.choice(np.array([-1, 1], dtype=np.int8), size=(n_owners, degree))

    def masks(impl):
        def run():
            out = base.copy()
            for o in range(n_owners):
                impl.apply_masks(out[o], seeds[o], signs[o])
            return out
        return run

    # 50k owners over a 64-item universe, 2000 candidate itemsets
    owners = rng.integers(0, 2**64, size=(50_000, 1), dtype=np.uint64) & rng.integers(
        0, 2**64, size=(50_000, 1), dtype=np.uint64
    )
    cands = np.zeros((2000, 1), dtype=np.uint64)
    for i in range(2000):
        for b in rng.choice(64, size=2, replace=False):
            cands[i, 0] |= np.uint64(1) << np.uint64(b)

    # 20k sequences of mean length 8 over 10 symbols, 300 runs of length <= 3
    lens = rng.poisson(8, size=20_000)
    offsets = np.concatenate(([0], np.cumsum(lens))).astype(np.int64)
    flat = rng.integers(0, 10, size=int(offsets[-1])).astype(np.int64)
    cand_len = rng.integers(1, 4, size=300).astype(np.int64)
    runs = np.full((300, 3), -1, dtype=np.int64)
    for i, k in enumerate(cand_len):
        runs[i, :k] = rng.integers(0, 10, size=k)

    return [
        ("prg_expand (10^6 words)", lambda impl: lambda: impl.prg_expand(np.uint64(12345), 1_000_000)),
        ("apply_masks (1000 x 500, deg 20)", masks),
        ("itemset_support (50k x 2000)", lambda impl: lambda: impl.itemset_support(owners, cands)),
        ("sequence_support (20k x 300)", lambda impl: lambda: impl.sequence_support(flat, offsets, runs, cand_len)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"default backend: {_accel.BACKEND} (numba importable: {_accel.HAVE_NUMBA})")
    if not _accel.HAVE_NUMBA:
        print("numba missing; nothing to compare")
        return
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<36} {'numpy (s)':>10} {'numba (s)':>10} {'speedup':>8}")
    print("-" * 68)
    for name, make in cases(rng):
        t0 = time.perf_counter()
        make(kernels.NUMBA)()  # compile
        jit = time.perf_counter() - t0
        t_np, out_np = _best(make(kernels.NUMPY), args.repeat)
        t_nb, out_nb = _best(make(kernels.NUMBA), args.repeat)
        assert np.array_equal(out_np, out_nb), f"{name}: flavours disagree"
        print(f"{name:<36} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>7.1f}x   (first call {jit:.2f}s)")


if __name__ == "__main__":
    main()
