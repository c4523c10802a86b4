import numpy as np
import pytest

from gauge_measure import _backend
from gauge_measure._kernels_py import accept_marks as py_accept
from gauge_measure._kernels_py import rebuild as py_rebuild

compiled = pytest.importorskip("gauge_measure._kernels")


def _random_tree(rng, nseg=3, splits=40):
    seg = np.repeat(np.arange(nseg, dtype=np.int32), 2)
    depth = np.ones(seg.size, dtype=np.int32)
    idx = np.tile(np.arange(2, dtype=np.int64), nseg)
    for _ in range(splits):
        i = int(rng.integers(seg.size))
        seg = np.concatenate([seg[:i], [seg[i]] * 2, seg[i + 1:]]).astype(np.int32)
        depth = np.concatenate([depth[:i], [depth[i] + 1] * 2, depth[i + 1:]]).astype(np.int32)
        idx = np.concatenate([idx[:i], [2 * idx[i], 2 * idx[i] + 1], idx[i + 1:]]).astype(np.int64)
    return seg, depth, idx


def test_accept_marks_parity(rng):
    for _ in range(20):
        seg, depth, idx = _random_tree(rng)
        d = rng.normal(scale=1e-3, size=seg.size)
        widths = rng.uniform(0.5, 2.0, 3)
        share = float(rng.uniform(1e-4, 1e-2))
        a = compiled.accept_marks(seg, depth, idx, np.abs(d), widths, share)
        b = py_accept(seg, depth, idx, np.abs(d), widths, share)
        assert np.array_equal(np.asarray(a), np.asarray(b))


def test_rebuild_parity(rng):
    seg, depth, idx = _random_tree(rng)
    n = seg.size
    v, cl, cr = rng.normal(size=n), rng.normal(size=n), rng.normal(size=n)
    split = rng.integers(0, 3, n).astype(np.int8)
    out_c = compiled.rebuild(split, seg, depth, idx, v, cl, cr)
    out_p = py_rebuild(split, seg, depth, idx, v, cl, cr)
    for x, y in zip(out_c, out_p):
        assert np.array_equal(np.asarray(x), np.asarray(y), equal_nan=True)


def test_integrals_identical_across_backends(monkeypatch):
    from gauge_measure import hk
    from gauge_measure.domain import MeasurableSet
    from gauge_measure.measures import ScalarMeasure

    f = lambda t: np.sqrt(np.abs(t - 0.3)) + (t > 0.61)  # noqa: E731
    m = ScalarMeasure.polynomial([1.0, 1.0], 0, 1)
    results = []
    for name in ("compiled", "python"):
        monkeypatch.setattr(hk, "kernels", _backend.get_kernels(name))
        results.append(hk.hk_integrate(f, MeasurableSet.interval(0, 1), m, 1e-10))
    assert results[0] == results[1]


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.get_kernels("fortran")
