"""Time series multiplication with the compiled and the numpy kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each case multiplies two random dense matrix series and reports the best
wall time per backend, the speedup, and whether the products agree bitwise.
"""

import argparse
import time

import numpy as np

from torikam import kernels
from torikam.series import MatrixSeries, TruncationSpec, mul

CASES = [
    ("n=1 d=1 K=0 m=64", TruncationSpec(0, 64), 2),
    ("n=1 d=1 K=8 m=16", TruncationSpec(8, 16), 2),
    ("n=1 d=2 K=4 m=8", TruncationSpec(4, 8, d=2), 2),
    ("n=2 d=1 K=4 m=6", TruncationSpec(4, 6, n=2), 2),
]


def random_matrix(spec, ell, rng):
    data = rng.normal(size=(2, ell, ell) + spec.shape)
    return MatrixSeries(spec, (data[0] + 1j * data[1]) * spec.mask)


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = list(kernels.available_backends())
    if "cython" not in backends:
        print("compiled kernels not built; timing the numpy fallback only")
    rng = np.random.default_rng(0)
    print(f"{'case':<20}" + "".join(f"{b + ' [ms]':>16}" for b in backends)
          + f"{'speedup':>10}{'bitwise':>9}")
    prev = kernels.BACKEND
    try:
        for label, spec, ell in CASES:
            A, B = random_matrix(spec, ell, rng), random_matrix(spec, ell, rng)
            row, outs = {}, {}
            for b in backends:
                kernels.set_backend(b)
                row[b], outs[b] = best_time(lambda: mul(A, B)[0], args.repeat)
            line = f"{label:<20}" + "".join(f"{row[b] * 1e3:>16.2f}" for b in backends)
            if "cython" in row:
                same = outs["cython"].data.tobytes() == outs["python"].data.tobytes()
                line += f"{row['python'] / row['cython']:>9.1f}x{str(same):>9}"
            print(line)
    finally:
        kernels.set_backend(prev)


if __name__ == "__main__":
    main()
