"""Compare the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 20]

Each row reports the median wall time per call for both backends and the
largest absolute difference between their outputs.
"""

import argparse
import timeit

import numpy as np

from scbd.ndcore import _fallback

try:
    from scbd.ndcore import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases(rng):
    x = rng.standard_normal((64, 32, 16, 16)).astype(np.float32)
    cols = _fallback.im2col(x, 3, 3, 1, 1)
    v = rng.standard_normal(1 << 20).astype(np.float32)
    g = rng.standard_normal(1 << 20).astype(np.float32)
    return [
        ("im2col 64x32x16x16 k3", "im2col", (x, 3, 3, 1, 1)),
        ("im2col stride2", "im2col", (x, 3, 3, 2, 1)),
        ("col2im 64x32x16x16 k3", "col2im", (cols, 64, 32, 16, 16, 3, 3, 1, 1)),
        ("gelu_forward 1M", "gelu_forward", (v,)),
        ("gelu_backward 1M", "gelu_backward", (v, g)),
    ]


def median_time(fn, args, repeat):
    return float(np.median(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat)))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not available; build with `pip install --no-build-isolation -e .`")
        return 1
    print(f"{'kernel':<24}{'compiled ms':>13}{'fallback ms':>13}{'speedup':>9}{'max |diff|':>12}")
    for name, op, fargs in cases(np.random.default_rng(args.seed)):
        fast, slow = getattr(_kernels, op), getattr(_fallback, op)
        diff = float(np.max(np.abs(np.asarray(fast(*fargs), np.float64) - np.asarray(slow(*fargs), np.float64))))
        tc, tf = median_time(fast, fargs, args.repeat), median_time(slow, fargs, args.repeat)
        print(f"{name:<24}{tc * 1e3:>13.3f}{tf * 1e3:>13.3f}{tf / tc:>8.2f}x{diff:>12.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
