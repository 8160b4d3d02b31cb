"""Time the numba and numpy kernel backends on the two hot paths.

    python3 benchmarks/bench_kernels.py [--series 2000] [--length 80] [--n 20000]

The order-selection grid fit dominates PIP scoring; the CSR matvec drives
the Lanczos solver. Each timing is the best of ``--repeat`` runs after one
warm-up call (which also triggers numba compilation).
"""

import argparse
import time

import numpy as np
import scipy.sparse as sp

from rdpglink import _accel
from rdpglink.forecast import SariBounds, _spec_array


def best_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--series", type=int, default=2000, help="number of series in the grid fit")
    ap.add_argument("--length", type=int, default=80)
    ap.add_argument("--s", type=int, default=7)
    ap.add_argument("--n", type=int, default=20000, help="matrix size for the matvec")
    ap.add_argument("--density", type=float, default=1e-3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    Z = rng.standard_normal((args.series, args.length)).cumsum(axis=1)
    bounds = SariBounds()
    specs = _spec_array(bounds.grid(args.s))
    A = sp.random(args.n, args.n, density=args.density, format="csr", random_state=1)
    x = rng.standard_normal(args.n)

    rows = []
    for name in _accel.BACKENDS:
        k = _accel.kernels(name)
        t_fit = best_time(lambda: k.fit_grid(Z, specs, args.s, bounds.p, bounds.P), args.repeat)
        t_mv = best_time(lambda: k.csr_matvec(A.indptr, A.indices, A.data, x), args.repeat)
        rows.append((name, t_fit, t_mv))

    print(f"fit_grid: {args.series} series x {args.length} points, {len(specs)} specs")
    print(f"csr_matvec: n={args.n}, nnz={A.nnz}")
    print(f"{'backend':<8} {'fit_grid s':>12} {'csr_matvec ms':>14}")
    for name, t_fit, t_mv in rows:
        print(f"{name:<8} {t_fit:>12.3f} {1e3 * t_mv:>14.3f}")
    base = dict((r[0], r) for r in rows)
    if "numba" in base and "numpy" in base:
        print(f"speed-up numba/numpy: fit_grid {base['numpy'][1] / base['numba'][1]:.1f}x, "
              f"matvec {base['numpy'][2] / base['numba'][2]:.1f}x")


if __name__ == "__main__":
    main()
