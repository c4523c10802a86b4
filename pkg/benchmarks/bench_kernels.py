"""Compare the compiled kernels with the numpy fallback.

Two measurements per backend: the bookkeeping kernels alone on synthetic
interval trees, and whole integrals where they run inside the integrator.

    python3 benchmarks/bench_kernels.py --repeat 5
"""

import argparse
import timeit

import numpy as np

from gauge_measure import _backend, hk
from gauge_measure.domain import MeasurableSet
from gauge_measure.measures import ScalarMeasure


def _subtree(rng, depth, idx, n, out):
    if n == 1:
        out.append((depth, idx))
        return
    k = int(np.clip(n // 2 + rng.integers(-n // 4, n // 4 + 1), 1, n - 1))
    _subtree(rng, depth + 1, 2 * idx, k, out)
    _subtree(rng, depth + 1, 2 * idx + 1, n - k, out)


def synthetic_tree(rng, n_leaves: int, n_segments: int = 4):
    """Leaf arrays (segment, depth, index) of random full dyadic refinements."""
    seg, leaves = [], []
    per = max(2, n_leaves // n_segments)
    for s in range(n_segments):
        out = []
        _subtree(rng, 1, 0, per // 2, out)
        _subtree(rng, 1, 1, per - per // 2, out)
        seg += [s] * len(out)
        leaves += out
    depth, idx = zip(*leaves)
    return np.array(seg, dtype=np.int32), np.array(depth, dtype=np.int32), np.array(idx, dtype=np.int64)


def kernel_case(k, rng, n_leaves):
    seg, depth, idx = synthetic_tree(rng, n_leaves)
    n = seg.size
    d = np.abs(rng.normal(scale=1e-9, size=n))
    widths = np.ones(4)
    v, cl, cr = rng.normal(size=(3, n))
    split = rng.integers(0, 3, n).astype(np.int8)

    def run():
        k.accept_marks(seg, depth, idx, d, widths, 1e-9)
        k.rebuild(split, seg, depth, idx, v, cl, cr)

    return run


def chirp(t):
    t = np.asarray(t, dtype=float)
    with np.errstate(all="ignore"):
        u = 1.0 / (t * t)
        out = 2 * t * np.sin(u) - 2 / t * np.cos(u)
    return np.where(t == 0, 0.0, out)


INTEGRALS = {
    "sqrt kink": (lambda t: np.sqrt(np.abs(t - 0.3)), 1e-10),
    "hidden jumps": (lambda t: np.floor(7.3 * t) + np.sin(5 * t), 1e-9),
    "oscillating derivative": (chirp, 1e-6),
}


def best_of(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--leaves", type=int, nargs="+", default=[1_000, 10_000, 100_000])
    p.add_argument("--skip-integrals", action="store_true")
    args = p.parse_args(argv)

    try:
        backends = {"compiled": _backend.get_kernels("compiled"), "python": _backend.get_kernels("python")}
    except ImportError:
        print("compiled kernels are not built; only the numpy fallback is available")
        return 1

    print(f"{'case':<28}{'compiled s':>12}{'python s':>12}{'speedup':>10}")
    for n in args.leaves:
        times = {name: best_of(kernel_case(k, np.random.default_rng(0), n), args.repeat)
                 for name, k in backends.items()}
        print(f"{f'kernels, {n} leaves':<28}{times['compiled']:>12.5f}{times['python']:>12.5f}"
              f"{times['python'] / times['compiled']:>10.1f}")

    if not args.skip_integrals:
        A, m = MeasurableSet.interval(0, 1), ScalarMeasure.polynomial([1.0], 0, 1)
        saved = hk.kernels
        try:
            for label, (f, tol) in INTEGRALS.items():
                times, values = {}, {}
                for name, k in backends.items():
                    hk.kernels = k
                    values[name] = hk.hk_integrate(f, A, m, tol).value
                    times[name] = best_of(lambda: hk.hk_integrate(f, A, m, tol), args.repeat)
                same = "same value" if values["compiled"] == values["python"] else "VALUES DIFFER"
                print(f"{label:<28}{times['compiled']:>12.4f}{times['python']:>12.4f}"
                      f"{times['python'] / times['compiled']:>10.2f}  {same}")
        finally:
            hk.kernels = saved
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
