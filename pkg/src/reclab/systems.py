"""Measure-preserving torus maps with exact grid arithmetic.

Supported maps and their arithmetic:

* toral_automorphism: integer matrix with |det| = 1 acting on fixed-point
  coordinates mod 2**64.  The map is an exact bijection of the coordinate
  grid, so long orbits are free of rounding drift (float iteration of an
  expanding map collapses onto short cycles and is kept only as a cross-check
  mode).
* shift_map: base-m digit shift.  The orbit state holds the next D digits
  (m**D >= 2**64, so at least 64 bits are always queued); each step drops the
  leading digit and appends a fresh one drawn from the orbit's seeded stream.
  Orbits of Lebesgue-typical points are therefore sampled distributionally
  exactly instead of being truncated to one 64-bit seed.
* rotation: adds a grid-rounded angle, exact on the grid.
* identity: control map, never mixes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._kernels.numpy_backend import digit_depth, window_sweep
from .errors import DimensionMismatchError, RejectedInputError
from .phase import Point, SpaceSpec, floats_to_fixed

__all__ = [
    "SystemSpec",
    "OrbitState",
    "toral_automorphism",
    "shift_map",
    "rotation",
    "identity",
    "make_orbit",
    "step",
    "orbit_distances",
    "digits_of_fixed_batch",
    "window_from_digits",
    "bulk_positions_after",
]

TORAL = "toral_automorphism"
SHIFT = "shift_map"
ROTATION = "rotation"
IDENTITY = "identity"
_KINDS = (TORAL, SHIFT, ROTATION, IDENTITY)

EXACT_GRID = "exact_grid"
BIT_STREAM = "bit_stream"
FLOAT = "float"

# fresh shift digits are drawn from the orbit stream in fixed-size blocks so
# that one-at-a-time stepping and bulk orbit generation consume the stream
# identically
DIGIT_CHUNK = 4096


def _int_det(rows: tuple[tuple[int, ...], ...]) -> int:
    """Exact integer determinant by cofactor expansion (matrices are small)."""
    n = len(rows)
    if n == 1:
        return rows[0][0]
    total = 0
    for j in range(n):
        minor = tuple(r[:j] + r[j + 1 :] for r in rows[1:])
        sign = -1 if j % 2 else 1
        total += sign * rows[0][j] * _int_det(minor)
    return total


@dataclass(frozen=True)
class SystemSpec:
    kind: str
    matrix: tuple[tuple[int, ...], ...] | None = None
    base: int | None = None
    angle: float | None = None
    arithmetic: str = EXACT_GRID

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise RejectedInputError(f"unknown system kind {self.kind!r}")
        if self.kind == TORAL:
            if self.matrix is None:
                raise RejectedInputError("toral_automorphism requires a matrix")
            rows = tuple(tuple(int(e) for e in row) for row in self.matrix)
            n = len(rows)
            if n < 1 or any(len(r) != n for r in rows):
                raise RejectedInputError("matrix must be square")
            if abs(_int_det(rows)) != 1:
                raise RejectedInputError("matrix must have determinant +-1 to preserve volume")
            object.__setattr__(self, "matrix", rows)
            if self.arithmetic not in (EXACT_GRID, FLOAT):
                raise RejectedInputError("toral_automorphism supports exact_grid or float arithmetic")
        elif self.kind == SHIFT:
            if self.base is None or int(self.base) < 2:
                raise RejectedInputError("shift_map requires an integer base >= 2")
            object.__setattr__(self, "base", int(self.base))
            if self.arithmetic != BIT_STREAM:
                raise RejectedInputError("shift_map runs on bit_stream arithmetic only")
        elif self.kind == ROTATION:
            if self.angle is None:
                raise RejectedInputError("rotation requires an angle")
            if self.arithmetic != EXACT_GRID:
                raise RejectedInputError("rotation runs on exact_grid arithmetic (grid-rounded angle)")
        else:
            if self.arithmetic != EXACT_GRID:
                raise RejectedInputError("identity runs on exact_grid arithmetic")

    @property
    def dimension(self) -> int | None:
        """Dimension the system forces on its space, or None if any fits."""
        if self.kind == TORAL:
            return len(self.matrix)
        if self.kind in (SHIFT, ROTATION):
            return 1
        return None


def toral_automorphism(matrix, arithmetic: str = EXACT_GRID) -> SystemSpec:
    rows = tuple(tuple(int(e) for e in row) for row in matrix)
    return SystemSpec(kind=TORAL, matrix=rows, arithmetic=arithmetic)


def shift_map(base: int = 2) -> SystemSpec:
    return SystemSpec(kind=SHIFT, base=base, arithmetic=BIT_STREAM)


def rotation(angle: float) -> SystemSpec:
    return SystemSpec(kind=ROTATION, angle=float(angle))


def identity() -> SystemSpec:
    return SystemSpec(kind=IDENTITY)


def matrix_mod64(system: SystemSpec) -> np.ndarray:
    """System matrix reduced mod 2**64 (two's complement for negatives)."""
    rows = [[e % (2 ** 64) for e in row] for row in system.matrix]
    return np.array(rows, dtype=np.uint64)


def matrix_power_mod64(amat: np.ndarray, n: int) -> np.ndarray:
    """amat**n mod 2**64 by square-and-multiply."""
    if n < 0:
        raise RejectedInputError("matrix power wants n >= 0")
    result = np.eye(amat.shape[0], dtype=np.uint64)
    base = amat.copy()
    while n:
        if n & 1:
            result = result @ base
        base = base @ base
        n >>= 1
    return result


def angle_fixed(system: SystemSpec) -> np.uint64:
    return floats_to_fixed([system.angle])[0]


def digits_of_fixed(value: int, base: int, depth: int) -> np.ndarray:
    """Leading base-m digits of the fraction value/2**64, exactly."""
    t = int(value)
    out = np.empty(depth, dtype=np.uint64)
    mask = (1 << 64) - 1
    for i in range(depth):
        t *= base
        out[i] = t >> 64
        t &= mask
    return out


def digits_of_fixed_batch(values: np.ndarray, base: int, depth: int) -> np.ndarray:
    """(S, depth) leading digits per value, exact 128-bit arithmetic via
    32-bit limb splitting (digit = high word of value * base)."""
    if base > (1 << 32):
        raise RejectedInputError("digit extraction supports bases up to 2**32")
    x = values.astype(np.uint64).copy()
    m = np.uint64(base)
    lo_mask = np.uint64(0xFFFFFFFF)
    out = np.empty((x.shape[0], depth), dtype=np.uint64)
    for i in range(depth):
        lo = x & lo_mask
        hi = x >> np.uint64(32)
        out[:, i] = (hi * m + ((lo * m) >> np.uint64(32))) >> np.uint64(32)
        x = x * m
    return out


def window_from_digits(digits: np.ndarray, base: int) -> np.ndarray:
    """(S,) fixed-point windows from (S, D) digit rows: the truncating Horner
    floor(sum d_i m^-i * 2**64), built from the deepest digit up."""
    m = np.uint64(base)
    big_q = np.uint64((1 << 64) // base)
    big_r = np.uint64((1 << 64) % base)
    z = np.zeros(digits.shape[0], dtype=np.uint64)
    for i in range(digits.shape[1] - 1, -1, -1):
        d = digits[:, i]
        z = d * big_q + z // m + (d * big_r + z % m) // m
    return z


def bulk_positions_after(
    system: SystemSpec,
    space: SpaceSpec,
    coords: np.ndarray,
    steps,
    rng: np.random.Generator | None = None,
) -> dict[int, np.ndarray]:
    """Positions of T**n applied rowwise to (S, N) coords, for each n in steps.

    Matrix systems use one exact mod-2**64 matrix power per step count; shift
    maps build each row's digit tape (its own leading digits, then fresh ones
    from rng) and evaluate the truncating Horner window at every requested
    offset.  Shift rows are returned windowed, i.e. position 0 is the window
    of the row's own leading digits, matching the sequential orbit machinery
    bit for bit.
    """
    _check_dim(system, space)
    steps = sorted(set(int(n) for n in steps))
    if steps and steps[0] < 0:
        raise RejectedInputError("steps must be >= 0")
    out: dict[int, np.ndarray] = {}
    if system.kind == TORAL:
        amat = matrix_mod64(system)
        for n in steps:
            pn = matrix_power_mod64(amat, n)
            out[n] = coords @ pn.T
    elif system.kind == ROTATION:
        ang = int(angle_fixed(system))
        for n in steps:
            out[n] = coords + np.uint64((n * ang) % (1 << 64))
    elif system.kind == IDENTITY:
        for n in steps:
            out[n] = coords.copy()
    elif system.kind == SHIFT:
        if rng is None:
            raise RejectedInputError("shift bulk stepping needs an rng for fresh digits")
        depth = digit_depth(system.base)
        n_top = steps[-1]
        tape = np.empty((coords.shape[0], depth + n_top), dtype=np.uint64)
        tape[:, :depth] = digits_of_fixed_batch(coords[:, 0], system.base, depth)
        if n_top:
            tape[:, depth:] = rng.integers(
                0, system.base, size=(coords.shape[0], n_top), dtype=np.uint64
            )
        for n in steps:
            out[n] = window_from_digits(tape[:, n : n + depth], system.base)[:, None]
    else:
        raise RejectedInputError(f"unsupported system kind {system.kind!r}")
    return out


@dataclass
class OrbitState:
    """Single-owner mutable orbit cursor.

    `coords` is the current position; for shift maps `queue` always holds the
    next `depth` digits (at least 64 bits of future), and fresh digits come
    from the state's own stream in fixed-size blocks.
    """

    system: SystemSpec
    space: SpaceSpec
    coords: np.ndarray
    step_count: int = 0
    queue: np.ndarray | None = None
    rng: np.random.Generator | None = None
    _buf: np.ndarray | None = field(default=None, repr=False)
    _buf_pos: int = field(default=0, repr=False)

    @property
    def point(self) -> Point:
        return Point(self.coords.copy())

    def draw_digits(self, count: int) -> np.ndarray:
        """Next `count` fresh digits, consuming the stream in DIGIT_CHUNK blocks."""
        m = self.system.base
        parts = []
        need = count
        while need > 0:
            if self._buf is None or self._buf_pos >= self._buf.shape[0]:
                self._buf = self.rng.integers(0, m, size=DIGIT_CHUNK, dtype=np.uint64)
                self._buf_pos = 0
            take = min(need, self._buf.shape[0] - self._buf_pos)
            parts.append(self._buf[self._buf_pos : self._buf_pos + take])
            self._buf_pos += take
            need -= take
        return parts[0].copy() if len(parts) == 1 else np.concatenate(parts)


def _check_dim(system: SystemSpec, space: SpaceSpec) -> None:
    want = system.dimension
    if want is not None and want != space.dimension:
        raise DimensionMismatchError(
            f"system needs dimension {want}, space has {space.dimension}"
        )


def make_orbit(
    system: SystemSpec, space: SpaceSpec, x: Point, rng: np.random.Generator | None = None
) -> OrbitState:
    _check_dim(system, space)
    if x.dimension != space.dimension:
        raise DimensionMismatchError("point dimension does not match space")
    if system.kind == SHIFT:
        if rng is None:
            raise RejectedInputError("shift_map orbits need an rng for fresh digits")
        depth = digit_depth(system.base)
        queue = digits_of_fixed(int(x.coords[0]), system.base, depth)
        view = window_sweep(queue, system.base)  # canonical start window
        return OrbitState(system, space, view.astype(np.uint64), 0, queue, rng)
    return OrbitState(system, space, x.coords.copy(), 0, None, rng)


def make_orbit_from_queue(
    system: SystemSpec, space: SpaceSpec, queue: np.ndarray, rng: np.random.Generator
) -> OrbitState:
    """Shift orbit started from an explicit digit queue (sampling path)."""
    _check_dim(system, space)
    depth = digit_depth(system.base)
    if queue.shape != (depth,):
        raise RejectedInputError(f"queue must hold exactly {depth} digits")
    view = window_sweep(queue.astype(np.uint64), system.base)
    return OrbitState(system, space, view.astype(np.uint64), 0, queue.astype(np.uint64), rng)


def step(state: OrbitState) -> OrbitState:
    """Apply the map once, in place."""
    sys_ = state.system
    if sys_.kind == TORAL:
        amat = matrix_mod64(sys_)
        state.coords = amat @ state.coords
    elif sys_.kind == SHIFT:
        fresh = state.draw_digits(1)
        pos, newq = _kernels.shift_orbit_positions(state.queue, fresh, sys_.base)
        state.coords = pos.astype(np.uint64)
        state.queue = newq
    elif sys_.kind == ROTATION:
        state.coords = state.coords + np.full(1, angle_fixed(sys_), dtype=np.uint64)
    # identity: nothing moves
    state.step_count += 1
    return state


def orbit_positions(
    system: SystemSpec,
    space: SpaceSpec,
    state_or_point,
    n_max: int,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """(n_max, N) fixed-point positions T^k x for k = 1..n_max."""
    if isinstance(state_or_point, OrbitState):
        state = state_or_point
    else:
        state = make_orbit(system, space, state_or_point, rng)
    n_max = int(n_max)
    if n_max < 0:
        raise RejectedInputError("n_max must be nonnegative")
    kind = system.kind
    if kind == TORAL:
        pos = _kernels.toral_orbit_positions(state.coords, matrix_mod64(system), n_max)
        if n_max:
            state.coords = pos[-1].copy()
        state.step_count += n_max
        return pos
    if kind == SHIFT:
        fresh = state.draw_digits(n_max)
        pos, newq = _kernels.shift_orbit_positions(state.queue, fresh, system.base)
        state.queue = newq
        if n_max:
            state.coords = pos[-1:].astype(np.uint64).copy()
        state.step_count += n_max
        return pos.reshape(n_max, 1)
    if kind == ROTATION:
        ks = np.arange(1, n_max + 1, dtype=np.uint64)
        pos = (state.coords[0] + ks * angle_fixed(system)).reshape(n_max, 1)
        if n_max:
            state.coords = pos[-1].copy()
        state.step_count += n_max
        return pos
    # identity
    state.step_count += n_max
    return np.broadcast_to(state.coords, (n_max, space.dimension)).copy()


def orbit_distances(
    system: SystemSpec,
    space: SpaceSpec,
    x: Point,
    n_max: int,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """d(T^k x, x) for k = 1..n_max, deterministic given the stream."""
    from .phase import distances_fixed

    state = make_orbit(system, space, x, rng)
    start = state.coords.copy()
    pos = orbit_positions(system, space, state, n_max)
    return distances_fixed(space, pos, start[None, :])
