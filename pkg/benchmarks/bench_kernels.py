"""Time the compiled kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from blocktoep import _backend
from blocktoep import _kernels_py as py


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_fill(repeat):
    rng = np.random.default_rng(0)
    rows = []
    for n, s in ((500, 1), (1000, 1), (400, 2)):
        coef = rng.standard_normal((7, s, s)) + 0j
        args = (coef, -3, n, n)
        rows.append((f"block_toeplitz_fill n={n} s={s}", _best(lambda: py.block_toeplitz_fill(*args), repeat),
                     _run_compiled("block_toeplitz_fill", args, repeat)))
    return rows


def bench_mgs(repeat):
    rng = np.random.default_rng(1)
    rows = []
    for n, j in ((2000, 50), (20000, 100)):
        V = np.ascontiguousarray(np.linalg.qr(rng.standard_normal((n, j + 2)))[0].T)
        w = rng.standard_normal(n)
        rows.append((f"mgs_orthogonalize n={n} j={j}",
                     _best(lambda: py.mgs_orthogonalize(V, w.copy(), j), repeat),
                     _run_compiled("mgs_orthogonalize", None, repeat, lambda k: k.mgs_orthogonalize(V, w.copy(), j))))
    return rows


def _run_compiled(name, args, repeat, call=None):
    k = _backend.compiled_kernels
    if k is None:
        return float("nan")
    fn = (lambda: call(k)) if call else (lambda: getattr(k, name)(*args))
    return _best(fn, repeat)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args()
    print(f"backend: {_backend.BACKEND}")
    print(f"{'kernel':40s} {'python [ms]':>12s} {'compiled [ms]':>14s} {'speedup':>8s}")
    for name, tp, tc in bench_fill(a.repeat) + bench_mgs(a.repeat):
        print(f"{name:40s} {1e3 * tp:12.3f} {1e3 * tc:14.3f} {tp / tc:8.2f}")


if __name__ == "__main__":
    main()
