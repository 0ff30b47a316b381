"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]

Prints one line per (kernel, workload, backend) with the best wall time and
the speedup of the compiled backend over numpy.
"""

import argparse
import timeit

import numpy as np

from fei_lab.kernels import available_backends

WORKLOADS = [
    # (kernel, batch, arity)
    ("transform_batch", 1, 20),
    ("transform_batch", 2000, 10),
    ("transform_batch", 100_000, 4),
    ("sweep_batch", 65_536, 4),
    ("sweep_batch", 20_000, 6),
]


def make(B, n, seed=0):
    rng = np.random.default_rng(seed)
    values = np.where(rng.random((B, 1 << n)) < 0.5, -1.0, 1.0)
    mu = rng.uniform(-0.9, 0.9, size=(B, n))
    return values, mu


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = available_backends()
    if "cython" not in backends:
        print("compiled backend not built; timing numpy only")
    print(f"{'kernel':<16}{'batch':>8}{'n':>4}  " + "".join(f"{b:>12}" for b in sorted(backends)) + "     speedup")
    for kernel, B, n in WORKLOADS:
        values, mu = make(B, n)
        times = {}
        for name, mod in sorted(backends.items()):
            fn = getattr(mod, kernel)
            call = (lambda: fn(values, mu, 1e-13)) if kernel == "sweep_batch" else (lambda: fn(values, mu))
            call()
            times[name] = min(timeit.repeat(call, number=1, repeat=args.repeat))
        speed = f"{times['python'] / times['cython']:10.1f}x" if "cython" in times else ""
        cols = "".join(f"{times[b] * 1e3:10.1f}ms" for b in sorted(times))
        print(f"{kernel:<16}{B:>8}{n:>4}  {cols}{speed}")


if __name__ == "__main__":
    main()
