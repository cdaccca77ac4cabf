"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py --repeat 20 --size 20000
"""

import argparse
import time

import numpy as np

from tgextrap._kernels import numba_backend, numpy_backend


def _cases(size, width, n, rank, rng):
    rows = rng.standard_normal((width + 1, size))
    V = rng.standard_normal((n, rank))
    idx = rng.integers(0, n, (max(1, n ** 3 // 3), 3))
    vals = rng.standard_normal(len(idx))
    return {
        "mgs_qr": lambda b: b.mgs_qr(rows, 1e-12),
        "arnoldi_orth": lambda b: b.arnoldi_orth(rows, 1e-12),
        "cp_sym_eval": lambda b: b.cp_sym_eval(V),
        "completion_loss_grad": lambda b: b.completion_loss_grad(V, idx, vals),
    }


def _best(fn, backend, repeat):
    fn(backend)  # warm-up, includes jit compilation
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=10)
    ap.add_argument("--size", type=int, default=10000, help="entries per difference tensor")
    ap.add_argument("--width", type=int, default=5)
    ap.add_argument("--n", type=int, default=30, help="completion tensor side")
    ap.add_argument("--rank", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if numba_backend is None:
        raise SystemExit("numba is not importable")
    cases = _cases(args.size, args.width, args.n, args.rank, np.random.default_rng(args.seed))
    print(f"{'kernel':<22}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, fn in cases.items():
        t_np = _best(fn, numpy_backend, args.repeat)
        t_nb = _best(fn, numba_backend, args.repeat)
        print(f"{name:<22}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.2f}")


if __name__ == "__main__":
    main()
