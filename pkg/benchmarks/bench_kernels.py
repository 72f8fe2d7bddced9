"""Compare the compiled and pure-Python kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from forgesat import _pykernels
from forgesat.cnf import flatten, gen_random_ksat

try:
    from forgesat import _ckernels
except ImportError:
    _ckernels = None


def dpll_case(impl, formulas):
    def run():
        for lits, offs, n in formulas:
            impl.dpll_flat(lits, offs, n, 200_000)
    return run


def segment_case(impl, indptr, indices, h, n_out):
    return lambda: impl.segment_mean(indptr, indices, h, n_out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    formulas = []
    for s in range(20):
        f = gen_random_ksat(30, 129, 3, s)
        lits, offs = flatten(f.clauses)
        formulas.append((lits, offs, f.num_vars))
    g = np.random.default_rng(0)
    n_out, n_src = 2000, 500
    deg = g.integers(1, 8, size=n_out)
    indptr = np.concatenate([[0], np.cumsum(deg)]).astype(np.int64)
    indices = g.integers(0, n_src, size=indptr[-1]).astype(np.int64)
    h = g.normal(size=(n_src, 64))

    cases = {
        "dpll 20x random-3sat n=30 m=129": lambda impl: dpll_case(impl, formulas),
        "segment_mean 2000 rows x 64": lambda impl: segment_case(impl, indptr, indices, h, n_out),
    }
    impls = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    print(f"{'case':36s} " + " ".join(f"{name:>12s}" for name, _ in impls) + ("   speedup" if len(impls) > 1 else ""))
    for label, make in cases.items():
        times = [min(timeit.repeat(make(impl), number=1, repeat=args.repeat)) for _, impl in impls]
        row = f"{label:36s} " + " ".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(times) > 1:
            row += f"   {times[0] / times[1]:7.1f}x"
        print(row)
    if _ckernels is None:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
