"""Compare the compiled RBF kernels against the NumPy fallback.

Usage::

    python benchmarks/bench_core.py [--sizes 500 1000 2000] [--dim 2] [--repeat 5]

Each row reports the best-of-``repeat`` wall time of both backends and the
max absolute difference between their outputs.
"""
import argparse
import timeit

import numpy as np

from iwnystrom import _pure

try:
    from iwnystrom import _core
except ImportError:  # extension not built
    _core = None


def best_time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench(sizes, dim, repeat, gamma=0.5, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for n in sizes:
        X = rng.normal(size=(n, dim))
        Z = rng.normal(size=(n, dim))
        coef = rng.normal(size=n)
        cases = {
            "gram": (lambda m: m.rbf_gram(X, Z, gamma)),
            "predict": (lambda m: m.rbf_predict(X, Z, coef, gamma)),
        }
        for op, call in cases.items():
            t_np = best_time(lambda: call(_pure), repeat)
            row = {"op": op, "n": n, "numpy_s": t_np, "cython_s": np.nan, "speedup": np.nan,
                   "max_abs_diff": np.nan}
            if _core is not None:
                t_cy = best_time(lambda: call(_core), repeat)
                diff = np.max(np.abs(np.asarray(call(_core)) - call(_pure)))
                row.update(cython_s=t_cy, speedup=t_np / t_cy, max_abs_diff=diff)
            rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[500, 1000, 2000, 4000])
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _core is None:
        print("compiled extension not available; timing the NumPy fallback only")
    print(f"{'op':<8}{'n':>7}{'numpy [s]':>12}{'cython [s]':>12}{'speedup':>9}{'max diff':>11}")
    for r in bench(args.sizes, args.dim, args.repeat):
        print(f"{r['op']:<8}{r['n']:>7}{r['numpy_s']:>12.4f}{r['cython_s']:>12.4f}"
              f"{r['speedup']:>9.2f}{r['max_abs_diff']:>11.1e}")


if __name__ == "__main__":
    main()
