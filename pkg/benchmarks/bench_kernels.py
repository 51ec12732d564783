"""Numba vs numpy timings for the hot kernels.

    python benchmarks/bench_kernels.py [--repeat 5] [--sizes 1000,4000]

The first numba call includes compilation and is reported separately.
Outputs of both backends are compared before timing.
"""
import argparse
import time

import numpy as np

from projdual import _kernels as K
from projdual.projective import canonicalize_rows


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, rng):
    x = canonicalize_rows(rng.standard_normal((n, 4)))
    labels = rng.integers(0, 16, n)
    side = int(np.sqrt(n)) + 1
    u, v = np.meshgrid(np.linspace(0, 2 * np.pi, side, endpoint=False),
                       np.linspace(0, 2 * np.pi, side, endpoint=False), indexing="ij")
    h = np.cos(u) * np.sin(2 * v) + 0.1
    return {
        "nearest_sq": ((x, x[::-1].copy(), True), {}),
        "knn": ((x, 12, True), {}),
        "knn_grouped": ((x, labels, 12, 3, True), {}),
        "ms_segments": ((h >= 0, h >= 0, True, True), {}),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--sizes", default="1000,4000")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if not K.HAVE_NUMBA:
        print("numba not importable; nothing to compare")
        return 1
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<12} {'n':>6} {'numpy s':>10} {'numba s':>10} {'speedup':>8} {'jit s':>8}")
    for n in [int(x) for x in args.sizes.split(",")]:
        for name, (a, kw) in cases(n, rng).items():
            f_np = getattr(K, f"{name}_numpy")
            f_nb = getattr(K, f"{name}_numba")
            t0 = time.perf_counter()
            r_nb = f_nb(*a, **kw)
            jit = time.perf_counter() - t0
            r_np = f_np(*a, **kw)
            for x, y in zip(np.atleast_1d(r_np) if not isinstance(r_np, tuple) else r_np,
                            np.atleast_1d(r_nb) if not isinstance(r_nb, tuple) else r_nb):
                assert np.allclose(x, y), f"{name}: backends disagree"
            t_np = best_of(lambda: f_np(*a, **kw), args.repeat)
            t_nb = best_of(lambda: f_nb(*a, **kw), args.repeat)
            print(f"{name:<12} {n:>6} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>7.1f}x {jit:>8.2f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
