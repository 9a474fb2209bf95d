"""Time the compiled kernels against the pure-Python fallback.

Run with ``python benchmarks/bench_kernels.py``.
"""

import timeit

import numpy as np

from wildrefit import _pykernels

try:
    from wildrefit import _ckernels
except ImportError:
    _ckernels = None


def cases(n, rng):
    y = rng.standard_normal(n)
    c = 0.5 * n
    diag = np.full(n, 1 + 2 * c)
    diag[0] = diag[-1] = 1 + c
    off = np.full(n - 1, -c)
    return {
        "tv1d_denoise": lambda mod: mod.tv1d_denoise(y, 0.05 * n),
        "pav_increasing": lambda mod: mod.pav_increasing(y),
        "tridiag_solve": lambda mod: mod.tridiag_solve(off, diag, off, y),
    }


def best_of(fn, repeat=5):
    number, _ = timeit.Timer(fn).autorange()
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'n':>7}{'python [us]':>14}{'cython [us]':>14}{'speedup':>10}")
    for n in (301, 3001, 30001):
        for name, call in cases(n, rng).items():
            t_py = best_of(lambda: call(_pykernels)) * 1e6
            if _ckernels is None:
                print(f"{name:<16}{n:>7}{t_py:>14.1f}{'n/a':>14}{'n/a':>10}")
                continue
            t_c = best_of(lambda: call(_ckernels)) * 1e6
            print(f"{name:<16}{n:>7}{t_py:>14.1f}{t_c:>14.1f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
