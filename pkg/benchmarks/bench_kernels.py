"""Time the hot kernels with numba and with the pure Python/numpy fallback.

Each backend runs in its own interpreter because the choice is fixed at import time
(INFOTESTS_NO_NUMBA=1 selects the fallback).

    python3 benchmarks/bench_kernels.py [--n-bits 200000] [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from infotests import _jit, processes as pr, ranking as rk, compression as cp
from infotests.bitstream import BitSequence, to_blocks

n_bits, repeat = int(sys.argv[1]), int(sys.argv[2])
rng = np.random.default_rng(0)
bits = BitSequence(rng.integers(0, 2, n_bits, dtype=np.uint8))
words = to_blocks(bits, 16).ordinals
spec = pr.MarkovSpec(8, "T", 0.2)

cases = {
    "randu_bytes": lambda: pr.randu_bytes(n_bits // 8),
    "two_faced_sample": lambda: pr.two_faced_sample(spec, n_bits, np.random.default_rng(1)),
    "book_stack_positions": lambda: rk.book_stack_positions(words),
    "order_test_positions": lambda: rk.order_test_positions(words),
    "kt_code_length_k8": lambda: cp.kt_code_length(bits, 8),
}
out = {"numba": _jit.USE_NUMBA}
for name, fn in cases.items():
    fn()  # warm-up / compile
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out[name] = best
print(json.dumps(out))
"""


def run(flag, n_bits, repeat):
    env = dict(os.environ, INFOTESTS_NO_NUMBA=flag)
    res = subprocess.run([sys.executable, "-c", CHILD, str(n_bits), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-bits", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    jit, fallback = run("0", args.n_bits, args.repeat), run("1", args.n_bits, args.repeat)
    if not jit.pop("numba"):
        print("warning: numba unavailable, both columns use the fallback")
    fallback.pop("numba")
    print(f"n_bits = {args.n_bits}, best of {args.repeat}")
    print(f"{'kernel':24s} {'numba (s)':>11s} {'fallback (s)':>13s} {'speedup':>9s}")
    for name, t in jit.items():
        f = fallback[name]
        print(f"{name:24s} {t:11.5f} {f:13.5f} {f / t:8.1f}x")


if __name__ == "__main__":
    main()
