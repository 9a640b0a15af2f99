"""Compare the compiled and numpy kernels with the dictionary oracle.

    python benchmarks/bench_kernels.py [--m 512] [--r 4] [--queries 2000]
"""

import argparse
import time

import numpy as np

from dcpv import kernels
from dcpv.cancelable import CancelableTemplate
from dcpv.ndb import IntervalSet, generate_ndb, match_dictionary, pack_bits
from dcpv.security import _entry_arrays


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--m", type=int, default=512)
    ap.add_argument("--r", type=int, default=4)
    ap.add_argument("--queries", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    b = CancelableTemplate(rng.integers(0, 2, args.m, dtype=np.uint8))
    ndb = generate_ndb(b, args.seed, args.r, IntervalSet((0.8, 0.1, 0.1)))
    values, masks = ndb.packed()
    q_bits = rng.integers(0, 2, (args.queries, args.m), dtype=np.uint8)
    q_words = pack_bits(q_bits)
    q0 = CancelableTemplate(q_bits[0])

    backends = [("python", kernels.python_backend)]
    if kernels.compiled_backend is not None:
        backends.append(("cython", kernels.compiled_backend))

    t_dict = best_of(lambda: match_dictionary(ndb, q0), 3)
    print(f"m={args.m} N={ndb.N} queries={args.queries}")
    print(f"{'route':<22}{'per query':>14}{'vs dictionary':>16}")
    print(f"{'dictionary':<22}{t_dict * 1e6:>11.1f} us{1.0:>15.1f}x")
    expected = kernels.python_backend.packed_raw_many(values, masks, q_words)
    for name, be in backends:
        assert np.array_equal(be.packed_raw_many(values, masks, q_words), expected)
        single = best_of(lambda: be.packed_raw(values, masks, q_words[0]), 200)
        batch = best_of(lambda: be.packed_raw_many(values, masks, q_words), 5) / args.queries
        print(f"{name + ' single':<22}{single * 1e6:>11.1f} us{t_dict / single:>15.1f}x")
        print(f"{name + ' batch':<22}{batch * 1e6:>11.1f} us{t_dict / batch:>15.1f}x")

    pos, val, m = _entry_arrays(ndb)
    starts = rng.integers(0, 2, (5, m), dtype=np.uint8)
    print(f"\nlocal search, {len(starts)} restarts x 1000 iterations")
    ref = None
    for name, be in backends:
        out = [be.local_search(pos, val, s, 1000, m) for s in starts]
        summary = [(int(o[1]), int(o[2])) for o in out]
        ref = summary if ref is None else ref
        assert summary == ref
        t = best_of(lambda: [be.local_search(pos, val, s, 1000, m) for s in starts], 3)
        print(f"{name:<22}{t * 1e3:>11.1f} ms")


if __name__ == "__main__":
    main()
