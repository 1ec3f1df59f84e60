"""Vectorized pure-numpy kernels.

All arithmetic is on uint64 arrays (silent mod-2**64 wraparound, which is the
torus quotient).  Toral orbits use blocked matrix powers so a length-n orbit
costs O(n/B) vector operations; shift-map windows come from a digit-sweep
Horner evaluation shared bit-for-bit with the numba backend.
"""

from __future__ import annotations

import numpy as np

_BLOCK = 4096
_U64 = np.uint64


def digit_depth(m: int) -> int:
    """Smallest D with m**D >= 2**64: digits needed to pin a 64-bit window."""
    d, p = 0, 1
    while p < 2 ** 64:
        p *= m
        d += 1
    return d


def window_sweep(digits: np.ndarray, m: int) -> np.ndarray:
    """64-bit windows of every length-D digit run.

    digits has length D + n; entry k of the result is the fixed-point value
    of 0.d[k] d[k+1] ... d[k+D-1] in base m, truncated to the 2**-64 grid
    (exact when m is a power of two with period dividing 64, otherwise within
    2 ulps, deterministically).
    """
    m = int(m)
    depth = digit_depth(m)
    n = digits.shape[0] - depth
    if n < 0:
        raise ValueError("digit array shorter than the window depth")
    big_q = _U64((2 ** 64) // m)
    big_r = _U64((2 ** 64) % m)
    mm = _U64(m)
    z = np.zeros(n + 1, dtype=np.uint64)
    for i in range(depth - 1, -1, -1):
        d = digits[i : i + n + 1]
        z = d * big_q + z // mm + (d * big_r + z % mm) // mm
    return z


def shift_orbit_positions(queue: np.ndarray, fresh: np.ndarray, m: int):
    """Windows after steps 1..len(fresh); returns (positions, new_queue)."""
    depth = queue.shape[0]
    n = fresh.shape[0]
    allq = np.concatenate([queue, fresh])
    z = window_sweep(allq, m)
    return z[1:], allq[n : n + depth].copy()


def shift_return_scan(queue, fresh, thr, k_offset, start_view, m):
    """Scan steps k_offset+1 .. k_offset+len(fresh) for a return.

    Returns (k, new_queue) with k = first step whose window lies within the
    open threshold of start_view, or -1 if the chunk has none.
    """
    depth = queue.shape[0]
    n = fresh.shape[0]
    allq = np.concatenate([queue, fresh])
    pos = window_sweep(allq, m)[1:]
    delta = pos - _U64(start_view)
    dmin = np.minimum(delta, np.zeros_like(delta) - delta)
    hits = dmin < _U64(thr)
    if hits.any():
        idx = int(np.argmax(hits))
        return int(k_offset) + 1 + idx, allq[idx + 1 : idx + 1 + depth].copy()
    return -1, allq[n : n + depth].copy()


def _power_block(amat: np.ndarray, count: int) -> np.ndarray:
    pows = np.empty((count, amat.shape[0], amat.shape[1]), dtype=np.uint64)
    pows[0] = amat
    for k in range(1, count):
        pows[k] = pows[k - 1] @ amat
    return pows


def toral_orbit_positions(v0: np.ndarray, amat: np.ndarray, n: int) -> np.ndarray:
    """(n, N) uint64 positions A^k v0 mod 2**64 for k = 1..n."""
    n = int(n)
    dim = v0.shape[0]
    out = np.empty((n, dim), dtype=np.uint64)
    blen = min(n, _BLOCK) if n else 0
    if n == 0:
        return out
    pows = _power_block(amat, blen)
    v = v0
    done = 0
    while done < n:
        b = min(blen, n - done)
        out[done : done + b] = pows[:b] @ v
        v = out[done + b - 1]
        done += b
    return out


def toral_return_time(v0: np.ndarray, amat: np.ndarray, thr, cap: int) -> int:
    """First k <= cap with wrapped chebyshev delta(A^k v0, v0) < thr, else -1."""
    cap = int(cap)
    if cap <= 0:
        return -1
    blen = min(cap, _BLOCK)
    pows = _power_block(amat, blen)
    thr = _U64(thr)
    v = v0
    done = 0
    while done < cap:
        b = min(blen, cap - done)
        pos = pows[:b] @ v
        delta = pos - v0[None, :]
        dmin = np.minimum(delta, np.zeros_like(delta) - delta)
        hits = dmin.max(axis=1) < thr
        if hits.any():
            return done + 1 + int(np.argmax(hits))
        v = pos[b - 1]
        done += b
    return -1
