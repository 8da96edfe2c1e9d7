#!/usr/bin/env python3
"""Compare the compiled recurrence kernels against the numpy fallback.

Runs the full loss and gradient computation for a seq2point model on the
same random batch under both backends, verifies they agree, and reports
per-call timings.  Usage:

    python3 benchmarks/compare_backends.py
    python3 benchmarks/compare_backends.py --windows 512 --hidden 96
"""

import argparse
import time

import numpy as np

from fedwatt.model import Batch, ModelSpec, core, init_params
from fedwatt.model import _kernels_np

try:
    from fedwatt.model import _kernels as _compiled
except ImportError:
    _compiled = None


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def run(spec, w, batch, kernels, repeats):
    previous = core.kernels
    core.kernels = kernels
    try:
        core.loss(spec, w, batch)  # warm-up
        t_loss = time_call(lambda: core.loss(spec, w, batch), repeats)
        t_grad = time_call(lambda: core.grad(spec, w, batch), repeats)
        g = core.grad(spec, w, batch)
    finally:
        core.kernels = previous
    return t_loss, t_grad, g


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--windows", type=int, default=256, help="batch size")
    parser.add_argument("--input-len", type=int, default=120, help="window length (2T)")
    parser.add_argument("--hidden", type=int, default=64, help="recurrent width")
    parser.add_argument("--dense", type=int, default=128, help="dense layer width")
    parser.add_argument("--appliances", type=int, default=3)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    spec = ModelSpec(
        input_len=args.input_len,
        output_len=args.appliances,
        recurrent_hidden=args.hidden,
        dense_widths=(args.dense,),
    )
    w = init_params(spec, seed=args.seed)
    rng = np.random.default_rng(args.seed)
    batch = Batch(
        inputs=rng.normal(0.0, 1.0, (args.windows, args.input_len)),
        targets=rng.uniform(0.0, 1.0, (args.windows, args.appliances)),
    )
    print(
        f"model: input_len={args.input_len} hidden={args.hidden} "
        f"dense=({args.dense},) appliances={args.appliances} "
        f"params={len(w)}  batch: {args.windows} windows"
    )

    py_loss, py_grad, g_py = run(spec, w, batch, _kernels_np, args.repeats)
    print(f"python    loss {py_loss * 1e3:8.2f} ms   grad {py_grad * 1e3:8.2f} ms")

    if _compiled is None:
        print("compiled  (extension not built; install with the C toolchain available)")
        return

    c_loss, c_grad, g_c = run(spec, w, batch, _compiled, args.repeats)
    print(f"compiled  loss {c_loss * 1e3:8.2f} ms   grad {c_grad * 1e3:8.2f} ms")
    print(f"speedup   loss {py_loss / c_loss:7.1f}x   grad {py_grad / c_grad:7.1f}x")
    print(f"max |grad difference| between backends: {np.max(np.abs(g_py - g_c)):.3e}")


if __name__ == "__main__":
    main()
