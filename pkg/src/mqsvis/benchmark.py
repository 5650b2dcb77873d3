"""Timing comparison of the compiled and pure-numpy kernel backends.

Runs each hot kernel (lossless grid, beam-splitter grid, Gaussian blur)
on one representative block per backend and reports best-of-N wall times
together with the maximal cross-backend deviation, so a speedup claim and
an agreement check come from the same run.

    python3 -m mqsvis.benchmark --edge 256 --repeat 5
"""

from __future__ import annotations

import argparse
import math
import os
import time
from typing import Callable

import numpy as np

from .kernels import HAS_NUMBA, blur_block, bs_log_grid, th_log_grid
from .preselect import theory_shell_threshold
from .series import PrecisionConfig
from .terms import gain_from_mean, splitter_from_reflectivity


def _best_time(fn: Callable[[], np.ndarray], repeat: int) -> tuple[float, np.ndarray]:
    out = fn()
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _with_backend(name: str, fn: Callable[[], np.ndarray],
                  repeat: int) -> tuple[float, np.ndarray]:
    previous = os.environ.get("MQSVIS_BACKEND")
    os.environ["MQSVIS_BACKEND"] = name
    try:
        return _best_time(fn, repeat)
    finally:
        if previous is None:
            del os.environ["MQSVIS_BACKEND"]
        else:
            os.environ["MQSVIS_BACKEND"] = previous


def run(edge: int, repeat: int, mean: float, sigma: int, sigma_prime: int,
        reflectivity: float, sigma_bar: float) -> None:
    gain = gain_from_mean(mean)
    bs = splitter_from_reflectivity(reflectivity)
    prec = PrecisionConfig()
    s0 = theory_shell_threshold(sigma)

    window = math.floor(3.0 * sigma_bar)
    d = np.arange(-window, window + 1, dtype=np.float64)
    weights = np.exp(-d * d / (2.0 * sigma_bar * sigma_bar))
    prefactor = 1.0 / (2.0 * math.pi * sigma_bar * sigma_bar)
    rng = np.random.default_rng(2718)
    ext = rng.random((edge + 2 * window, edge + 2 * window)) / edge**2

    cases = [
        (f"theory grid {edge}x{edge}",
         lambda: th_log_grid(0, edge, 0, edge, s0, gain)),
        (f"splitter grid {edge}x{edge}",
         lambda: bs_log_grid(0, edge, 0, edge, sigma_prime, gain, bs, prec)),
        (f"blur {edge}x{edge} (3sigma={3.0 * sigma_bar:g})",
         lambda: blur_block(ext, weights, edge, edge, prefactor)),
    ]

    backends = ["numpy"] + (["numba"] if HAS_NUMBA else [])
    if not HAS_NUMBA:
        print("numba not importable: timing the numpy backend only")
    header = f"{'kernel':34s}" + "".join(f"{b + ' [s]':>12s}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>9s}{'max |diff|':>12s}"
    print(header)
    for label, fn in cases:
        times = {}
        outs = {}
        for backend in backends:
            times[backend], outs[backend] = _with_backend(backend, fn, repeat)
        row = f"{label:34s}" + "".join(f"{times[b]:12.4f}" for b in backends)
        if len(backends) == 2:
            a, b = outs["numba"], outs["numpy"]
            finite = np.isfinite(a)
            if not np.array_equal(finite, np.isfinite(b)):
                diff = math.inf
            elif finite.any():
                diff = float(np.max(np.abs(a[finite] - b[finite])))
            else:
                diff = 0.0
            row += f"{times['numpy'] / times['numba']:9.1f}x{diff:12.3g}"
        print(row)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mqsvis.benchmark", description=__doc__.splitlines()[0])
    parser.add_argument("--edge", type=int, default=256,
                        help="block edge length (default 256)")
    parser.add_argument("--repeat", type=int, default=5,
                        help="timed repetitions, best is kept (default 5)")
    parser.add_argument("--mean", type=float, default=5.0,
                        help="mean photon number m (default 5)")
    parser.add_argument("--sigma", type=int, default=2,
                        help="lossless preselection threshold (default 2)")
    parser.add_argument("--sigma-prime", type=int, default=4,
                        help="splitter preselection threshold (default 4)")
    parser.add_argument("--reflectivity", type=float, default=0.1,
                        help="splitter reflectivity R (default 0.1)")
    parser.add_argument("--blur-3sigma", type=float, default=15.0,
                        help="blur window radius 3*sigma_bar (default 15)")
    args = parser.parse_args(argv)
    if args.edge < 1 or args.repeat < 1:
        parser.error("edge and repeat must be >= 1")
    run(args.edge, args.repeat, args.mean, args.sigma, args.sigma_prime,
        args.reflectivity, args.blur_3sigma / 3.0)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
