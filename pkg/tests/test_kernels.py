"""Backend parity: the numba kernels and the numpy fallback must agree bitwise."""

import numpy as np
import pytest

from reclab import _kernels
from reclab._kernels import numba_backend, numpy_backend
from reclab._kernels.numpy_backend import digit_depth

CAT = np.array([[2, 1], [1, 1]], dtype=np.uint64)


@pytest.fixture(autouse=True)
def _restore_backend():
    yield
    _kernels.reset_backend()


def test_toral_orbit_positions_bitwise_equal():
    rng = np.random.default_rng(17)
    for n in (0, 1, 5, 5000):  # crosses the block boundary
        v0 = rng.integers(0, 1 << 64, size=2, dtype=np.uint64)
        a = numpy_backend.toral_orbit_positions(v0, CAT, n)
        b = numba_backend.toral_orbit_positions(v0, CAT, n)
        assert a.dtype == b.dtype == np.uint64
        assert np.array_equal(a, b)


def test_toral_return_time_agrees_including_censoring():
    rng = np.random.default_rng(23)
    for _ in range(10):
        v0 = rng.integers(0, 1 << 64, size=2, dtype=np.uint64)
        for thr in (np.uint64(1) << np.uint64(55), np.uint64(1) << np.uint64(40)):
            a = numpy_backend.toral_return_time(v0, CAT, thr, 20_000)
            b = numba_backend.toral_return_time(v0, CAT, thr, 20_000)
            assert a == b
    # tiny cap forces the censored sentinel on both paths
    v0 = rng.integers(0, 1 << 64, size=2, dtype=np.uint64)
    thr = np.uint64(1)
    assert numpy_backend.toral_return_time(v0, CAT, thr, 3) == -1
    assert numba_backend.toral_return_time(v0, CAT, thr, 3) == -1


def test_shift_orbit_positions_bitwise_equal():
    rng = np.random.default_rng(31)
    for base in (2, 3, 10):
        depth = digit_depth(base)
        queue = rng.integers(0, base, size=depth, dtype=np.uint64)
        fresh = rng.integers(0, base, size=500, dtype=np.uint64)
        pa, qa = numpy_backend.shift_orbit_positions(queue.copy(), fresh, base)
        pb, qb = numba_backend.shift_orbit_positions(queue.copy(), fresh, base)
        assert np.array_equal(pa, pb)
        assert np.array_equal(qa, qb)


def test_shift_return_scan_agrees():
    rng = np.random.default_rng(37)
    for base in (2, 3):
        depth = digit_depth(base)
        queue = rng.integers(0, base, size=depth, dtype=np.uint64)
        fresh = rng.integers(0, base, size=2000, dtype=np.uint64)
        start = numpy_backend.window_sweep(queue, base)[0]
        for thr in (np.uint64(1) << np.uint64(58), np.uint64(1) << np.uint64(20)):
            ka, qa = numpy_backend.shift_return_scan(
                queue.copy(), fresh.copy(), thr, 0, start, base
            )
            kb, qb = numba_backend.shift_return_scan(
                queue.copy(), fresh.copy(), thr, 0, start, base
            )
            assert ka == kb
            assert np.array_equal(qa, qb)


def test_env_flag_selects_backend(monkeypatch):
    monkeypatch.setenv("RECLAB_BACKEND", "numpy")
    _kernels.reset_backend()
    assert _kernels.backend_name() == "numpy"
    monkeypatch.setenv("RECLAB_BACKEND", "numba")
    _kernels.reset_backend()
    assert _kernels.backend_name() == "numba"
    monkeypatch.setenv("RECLAB_BACKEND", "garbage")
    _kernels.reset_backend()
    with pytest.raises(ValueError):
        _kernels.backend_name()


def test_dispatch_is_cached_until_reset(monkeypatch):
    monkeypatch.setenv("RECLAB_BACKEND", "numpy")
    _kernels.reset_backend()
    assert _kernels.backend_name() == "numpy"
    monkeypatch.setenv("RECLAB_BACKEND", "numba")
    assert _kernels.backend_name() == "numpy"  # still cached
    _kernels.reset_backend()
    assert _kernels.backend_name() == "numba"
