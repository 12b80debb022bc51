"""Throughput of the audit kernel on each available backend.

Usage: python benchmarks/bench_backends.py [--trials N] [--n N] [--threads T]
"""

import argparse
import time

from dpaudit import _backend, _kernels


def measure(backend, kind, n, trials, threads):
    _kernels.tally_side(kind, n, 10.0, 0, 0, 1000, backend=backend)  # warm up / compile
    t0 = time.perf_counter()
    _kernels.tally_side(kind, n, 10.0, 1, 0, trials, backend=backend, threads=threads)
    return time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=1_000_000)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    kinds = {"laplace": _kernels.KIND_LAPLACE, "dptext-resample": _kernels.KIND_DPTEXT_RESAMPLE}
    print(f"{'backend':8} {'mechanism':16} {'seconds':>8} {'ns/coord':>9}")
    for name, kind in kinds.items():
        for backend in _backend.BACKENDS:
            sec = measure(backend, kind, args.n, args.trials, args.threads)
            print(f"{backend:8} {name:16} {sec:8.3f} {1e9 * sec / (args.trials * args.n):9.1f}")


if __name__ == "__main__":
    main()
