"""Flat torus phase spaces with exact fixed-point coordinates.

Coordinates are 64-bit fixed-point fractions: a uint64 value v encodes the
real number v * 2**-64 in [0, 1).  Addition and integer matrix action wrap
mod 2**64, which is exactly the torus quotient, so orbits of the supported
maps never leave the representable grid and never accumulate rounding error.
Distances are computed from wrapped integer deltas and only converted to
float at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, InexactRegimeError, RejectedInputError

__all__ = [
    "CHEBYSHEV",
    "EUCLIDEAN",
    "FIXED_SCALE",
    "SpaceSpec",
    "Point",
    "distance",
    "ball_volume",
    "sample_uniform",
    "floats_to_fixed",
    "fixed_to_floats",
    "wrapped_deltas",
    "distances_fixed",
    "fixed_threshold",
    "fixed_thresholds",
]

CHEBYSHEV = "chebyshev-quotient"
EUCLIDEAN = "euclidean-quotient"
_METRICS = (CHEBYSHEV, EUCLIDEAN)

# value of one fixed-point ulp
FIXED_SCALE = 2.0 ** -64
_U64_FULL = np.uint64(0xFFFFFFFFFFFFFFFF)


def floats_to_fixed(values) -> np.ndarray:
    """Wrap real coordinates into [0,1) and quantize to the 2**-64 grid."""
    f = np.asarray(values, dtype=np.float64) % 1.0
    # float mod can round up to exactly 1.0 for tiny negatives
    f = np.where(f >= 1.0, 0.0, f)
    return (f * 2.0 ** 64).astype(np.uint64)


def fixed_to_floats(coords: np.ndarray) -> np.ndarray:
    return coords.astype(np.float64) * FIXED_SCALE


@dataclass(frozen=True)
class SpaceSpec:
    """N-dimensional flat torus with a quotient metric."""

    dimension: int
    metric: str = CHEBYSHEV

    def __post_init__(self):
        if self.dimension < 1 or self.dimension != int(self.dimension):
            raise RejectedInputError(f"dimension must be a positive integer, got {self.dimension}")
        if self.metric not in _METRICS:
            raise RejectedInputError(f"unknown metric {self.metric!r}; expected one of {_METRICS}")
        if self.metric == EUCLIDEAN and self.dimension > 2:
            raise RejectedInputError("euclidean-quotient metric is supported for dimension 1 and 2 only")

    @property
    def diameter(self) -> float:
        if self.metric == CHEBYSHEV:
            return 0.5
        return math.sqrt(self.dimension) / 2.0


@dataclass(frozen=True, eq=False)
class Point:
    """A point of the torus: one uint64 fixed-point fraction per axis."""

    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.ascontiguousarray(self.coords, dtype=np.uint64)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @classmethod
    def from_floats(cls, values) -> "Point":
        return cls(floats_to_fixed(values))

    @property
    def dimension(self) -> int:
        return self.coords.shape[0]

    @property
    def floats(self) -> np.ndarray:
        return fixed_to_floats(self.coords)

    def __eq__(self, other):
        return isinstance(other, Point) and np.array_equal(self.coords, other.coords)

    def __repr__(self):
        vals = ", ".join(f"{v:.12g}" for v in self.floats)
        return f"Point({vals})"


def _check_point(space: SpaceSpec, x: Point) -> None:
    if x.dimension != space.dimension:
        raise DimensionMismatchError(
            f"point has dimension {x.dimension}, space has {space.dimension}"
        )


def wrapped_deltas(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-axis wrapped |a-b| on the fixed grid, as uint64 in [0, 2**63]."""
    d = np.subtract(a, b, dtype=np.uint64)
    return np.minimum(d, np.zeros_like(d) - d)


def distances_fixed(space: SpaceSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized distance between fixed-point coordinate arrays.

    `a` and `b` broadcast against each other; the last axis is the coordinate
    axis and must have length space.dimension.
    """
    d = wrapped_deltas(a, b)
    if space.metric == CHEBYSHEV:
        return d.max(axis=-1).astype(np.float64) * FIXED_SCALE
    f = d.astype(np.float64) * FIXED_SCALE
    return np.sqrt(np.sum(f * f, axis=-1))


def distance(space: SpaceSpec, x: Point, y: Point) -> float:
    """Quotient distance between two points of `space`."""
    _check_point(space, x)
    _check_point(space, y)
    return float(distances_fixed(space, x.coords, y.coords))


def ball_volume(space: SpaceSpec, r: float) -> float:
    """Lebesgue volume of an open metric ball of radius r.

    Chebyshev balls are axis cubes, so the volume is min((2r)^N, 1) at every
    radius.  Euclidean balls on the 2-torus are round only while they embed,
    hence the exact value pi*r^2 holds for r <= 1/2; past that the ball
    overlaps itself and only the full-cover value 1 (r >= diameter) stays
    exact.
    """
    if r < 0 or not math.isfinite(r):
        raise RejectedInputError(f"radius must be finite and nonnegative, got {r}")
    if r >= space.diameter:
        return 1.0
    if space.metric == CHEBYSHEV or space.dimension == 1:
        return min((2.0 * r) ** space.dimension, 1.0)
    if r <= 0.5:
        return math.pi * r * r
    raise InexactRegimeError(
        f"euclidean ball volume has no closed form for 1/2 < r < diameter (r={r})"
    )


def fixed_threshold(r: float) -> np.uint64:
    """Exact strict-inequality threshold: d < r iff d_fixed < fixed_threshold(r).

    Fixed distances are integers d_fixed = d * 2**64, so the real comparison
    d < r is equivalent to d_fixed < ceil(r * 2**64), computed without float
    rounding via exact rational arithmetic on the float's bits.
    """
    if r <= 0.0:
        return np.uint64(0)
    if r >= 1.0:
        return _U64_FULL
    from fractions import Fraction

    scaled = Fraction(r) * (1 << 64)
    thr = -((-scaled.numerator) // scaled.denominator)  # ceil
    return np.uint64(min(thr, int(_U64_FULL)))


def fixed_thresholds(rs) -> np.ndarray:
    """Vectorized fixed_threshold: exact ceil(r * 2**64) from the float bits.

    A float r in (0,1) is m * 2**e with a 53-bit mantissa, so r * 2**64 is
    the exact integer m << (e+11) when e >= -11 and a rounding-free shifted
    ceil otherwise; no float product is ever formed.
    """
    rs = np.asarray(rs, dtype=np.float64)
    mant, expo = np.frexp(rs)  # r = mant * 2**expo, mant in [0.5, 1)
    mi = (mant * 2.0 ** 53).astype(np.uint64)  # exact: mant has 53 bits
    shift = expo + 11
    up = np.clip(shift, 0, 63).astype(np.uint64)
    down = np.clip(-shift, 0, 63).astype(np.uint64)
    left = mi << up
    add = (np.uint64(1) << down) - np.uint64(1)
    right = (mi + add) >> down  # ceil for negative shifts
    out = np.where(shift >= 0, left, right)
    out = np.where(shift < -63, np.uint64(1), out)  # subnormal-small radii
    out = np.where(rs <= 0.0, np.uint64(0), out)
    out = np.where(rs >= 1.0, _U64_FULL, out)
    return out.astype(np.uint64)


def sample_uniform(space: SpaceSpec, rng: np.random.Generator) -> Point:
    """Uniform point: fixed-point bits drawn directly, no float rounding."""
    coords = rng.integers(0, _U64_FULL, size=space.dimension, dtype=np.uint64, endpoint=True)
    return Point(coords)


def sample_uniform_batch(space: SpaceSpec, rng: np.random.Generator, count: int) -> np.ndarray:
    """(count, N) uint64 array of uniform fixed-point coordinates."""
    return rng.integers(0, _U64_FULL, size=(count, space.dimension), dtype=np.uint64, endpoint=True)
