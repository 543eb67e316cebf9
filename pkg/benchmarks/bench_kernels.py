"""Compiled kernels against the pure-Python fallback.

Times toy encode, toy decode and a Lanczos downscale on a synthetic clip with
each backend, checks the outputs are identical, and prints one row per case.

    python benchmarks/bench_kernels.py [--width 640 --height 360 --frames 8 --repeat 3]
"""

import argparse
import time

from codecbench._core import compiled
from codecbench.codecs import toy_decode, toy_encode
from codecbench.resample import resize_sequence
from codecbench.synthetic import make_synthetic_sequence


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--width", type=int, default=640)
    ap.add_argument("--height", type=int, default=360)
    ap.add_argument("--frames", type=int, default=8)
    ap.add_argument("--qp", type=int, default=30)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if compiled is None:
        raise SystemExit("compiled extension is not built; run pip install -e . --no-build-isolation")

    seq = make_synthetic_sequence(args.width, args.height, args.frames, "local_motion", seed=1)
    bitstream, _ = toy_encode(seq, args.qp)
    target = (args.width // 2, args.height // 2)
    cases = {
        "toy_encode": lambda b: toy_encode(seq, args.qp, backend=b),
        "toy_decode": lambda b: toy_decode(bitstream, backend=b),
        "resize 1/2": lambda b: resize_sequence(seq, target, backend=b),
    }
    print(f"{args.width}x{args.height}, {args.frames} frames, best of {args.repeat}")
    print(f"{'case':<12} {'python s':>10} {'compiled s':>11} {'speedup':>8}  same")
    for name, fn in cases.items():
        tp, op = best_of(lambda: fn("python"), args.repeat)
        tc, oc = best_of(lambda: fn("compiled"), args.repeat)
        print(f"{name:<12} {tp:>10.4f} {tc:>11.4f} {tp / tc:>7.1f}x  {op == oc}")


if __name__ == "__main__":
    main()
