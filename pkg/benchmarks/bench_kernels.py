"""Compare the compiled and numpy convolution kernels across shapes.

The hybrid backend dispatches on the channel contraction in_ch * out_ch
(<= 128 goes to the C loops, larger goes to the per-tap BLAS products).
This script measures both implementations on the shapes the models
actually use, plus the surrounding grid, so the crossover constant can
be re-checked on new hardware:

    python3 benchmarks/bench_kernels.py [--batch 50] [--repeats 7]

Timings are min-of-N wall clock for one forward plus one backward pass.
"""

import argparse
import time

import numpy as np

from flowcast.numcore.kernels import SMALL_CONTRACTION, _pykernels

try:
    from flowcast.numcore.kernels import _convkernels
except ImportError:
    _convkernels = None

# (c_in, c_out, H, W): the 12x24 image matches R=12 over 24 stations
CONV2D_SHAPES = [
    (1, 4, 12, 24),
    (1, 16, 12, 24),  # CNN first layer
    (4, 8, 12, 24),
    (8, 16, 12, 24),
    (16, 32, 12, 24),  # CNN second layer
    (32, 64, 12, 24),
]

# (c_in, c_out, L): CNN-LSTM runs its conv over station rows, L = N
CONV1D_SHAPES = [
    (1, 1, 24),
    (1, 8, 24),  # CNN-LSTM front conv
    (8, 16, 24),
    (16, 32, 24),
]


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - started)
    return best


def _bench_conv2d(mod, batch, shape, repeats, rng):
    c_in, c_out, h, w_ = shape
    x = rng.standard_normal((batch, c_in, h, w_))
    w = rng.standard_normal((c_out, c_in, 3, 3))
    b = rng.standard_normal(c_out)
    dout = rng.standard_normal((batch, c_out, h, w_))

    def run():
        mod.conv2d_forward(x, w, b)
        mod.conv2d_backward(dout, x, w)

    run()  # warm up
    return _time(run, repeats)


def _bench_conv1d(mod, batch, shape, repeats, rng):
    c_in, c_out, length = shape
    x = rng.standard_normal((batch, c_in, length))
    w = rng.standard_normal((c_out, c_in, 3))
    b = rng.standard_normal(c_out)
    dout = rng.standard_normal((batch, c_out, length))

    def run():
        mod.conv1d_forward(x, w, b)
        mod.conv1d_backward(dout, x, w)

    run()
    return _time(run, repeats)


def _report(title, shapes, bench, batch, repeats):
    print(f"\n{title} (batch {batch}, forward + backward, min of {repeats})")
    print(f"{'shape':>18} {'contraction':>11} {'numpy':>10} {'compiled':>10} {'ratio':>7}  hybrid picks")
    rng = np.random.default_rng(0)
    for shape in shapes:
        contraction = shape[0] * shape[1]
        py = bench(_pykernels, batch, shape, repeats, rng)
        if _convkernels is None:
            print(f"{str(shape):>18} {contraction:>11} {py * 1e3:>9.2f}ms {'-':>10} {'-':>7}")
            continue
        cc = bench(_convkernels, batch, shape, repeats, rng)
        pick = "compiled" if contraction <= SMALL_CONTRACTION else "numpy"
        print(
            f"{str(shape):>18} {contraction:>11} {py * 1e3:>9.2f}ms {cc * 1e3:>8.2f}ms "
            f"{py / cc:>6.2f}x  {pick}"
        )


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--batch", type=int, default=50)
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()

    if _convkernels is None:
        print("compiled extension not built; showing numpy timings only")
    print(f"dispatch threshold: in_ch * out_ch <= {SMALL_CONTRACTION} -> compiled")
    _report("conv2d", CONV2D_SHAPES, _bench_conv2d, args.batch, args.repeats)
    _report("conv1d", CONV1D_SHAPES, _bench_conv1d, args.batch * 12, args.repeats)


if __name__ == "__main__":
    main()
