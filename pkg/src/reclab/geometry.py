"""Packings, greedy first-match partitions, and boundary mollifiers.

A packing is a set of centers with pairwise distance >= 2*epsilon (disjoint
open epsilon-balls), built greedily: an aligned grid pass first (which is
already maximal for chebyshev tori), then a Kronecker low-discrepancy probe
stream until a run of probe_budget consecutive rejections certifies
saturation.  The partition assigns each point to the first center within
2*epsilon; cell k is the ball of center k minus the balls of centers before
it, so cells are disjoint, cover everything the packing covers, and have
diameter below 4*epsilon.

On chebyshev tori every cell is a finite union of axis boxes, computed once
as an exact arrangement decomposition in a per-cell chart.  Box geometry then
gives exact cell volumes, exact widened-cell membership, and a closed-form
mollifier ramp.  The mollifier value is min{1, depth/delta} where depth is
the largest per-box interior depth of the point in the delta-widened cell;
inside seams where widened boxes overlap this undershoots the true boundary
distance, which keeps it a valid lower envelope: it is still exactly 1 on
the cell, exactly 0 off the widened cell, and delta^-1 Lipschitz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RejectedInputError, UnsupportedPairingError
from .measures import LEBESGUE, MeasureSpec, sample_measure_batch
from .phase import (
    CHEBYSHEV,
    Point,
    SpaceSpec,
    distances_fixed,
    fixed_to_floats,
    floats_to_fixed,
    sample_uniform_batch,
)

__all__ = [
    "Packing",
    "Partition",
    "MollifierSet",
    "PackingExponentFit",
    "ExcessReport",
    "maximal_packing",
    "packing_exponent",
    "build_partition",
    "cell_of",
    "cells_of",
    "mollifier_eval",
    "mollifier_eval_batch",
    "in_widened_cell",
    "cell_volume",
    "widened_cell_volume",
    "neighbourhood_excess",
]

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19)


@dataclass(frozen=True)
class Packing:
    space: SpaceSpec
    epsilon: float
    centers: np.ndarray  # (L, N) fixed-point coordinates, insertion order
    degenerate: bool = False

    @property
    def count(self) -> int:
        return self.centers.shape[0]

    @property
    def points(self) -> list[Point]:
        return [Point(row) for row in self.centers]


def _min_distance_to(space: SpaceSpec, centers: np.ndarray, probe: np.ndarray) -> float:
    d = distances_fixed(space, centers, probe[None, :])
    return float(d.min())


def maximal_packing(
    space: SpaceSpec,
    epsilon: float,
    probe_budget: int = 2000,
    rng: np.random.Generator | None = None,
) -> Packing:
    """Greedy packing over a grid-first deterministic probe stream.

    A probe joins the packing iff its distance to every existing center is
    >= 2*epsilon.  The stream starts with a randomly offset aligned grid of
    spacing 2**64 // m cells (m = floor(1/(2 epsilon))), which is accepted
    wholesale and already attains the chebyshev-torus maximum m**N, then
    continues with Kronecker rotation probes until probe_budget consecutive
    rejections.  Identical seed, identical packing, bitwise.
    """
    if rng is None:
        raise RejectedInputError("maximal_packing needs an explicit rng")
    if epsilon <= 0:
        raise RejectedInputError("epsilon must be > 0")
    if probe_budget < 1:
        raise RejectedInputError("probe_budget must be >= 1")
    n = space.dimension
    if epsilon >= space.diameter:
        center = sample_uniform_batch(space, rng, 1)
        return Packing(space, float(epsilon), center, degenerate=True)

    sep = 2.0 * epsilon
    m = int(math.floor(1.0 / sep))
    offset = sample_uniform_batch(space, rng, 1)[0]
    if m >= 2:
        spacing = np.uint64((1 << 64) // m)
        idx = np.stack(np.meshgrid(*([np.arange(m, dtype=np.uint64)] * n), indexing="ij"), -1)
        centers = idx.reshape(-1, n) * spacing + offset
    else:
        centers = offset[None, :]
    center_list = list(centers)

    # Kronecker fill: x_j = start + j * alpha, exact fixed-point rotation
    alpha = floats_to_fixed([math.sqrt(p) % 1.0 for p in _PRIMES[:n]])
    probe = sample_uniform_batch(space, rng, 1)[0]
    rejections = 0
    arr = np.asarray(center_list, dtype=np.uint64)
    while rejections < probe_budget:
        probe = probe + alpha
        if _min_distance_to(space, arr, probe) >= sep:
            center_list.append(probe.copy())
            arr = np.asarray(center_list, dtype=np.uint64)
            rejections = 0
        else:
            rejections += 1
    return Packing(space, float(epsilon), arr)


@dataclass(frozen=True)
class PackingExponentFit:
    k_hat: float
    c_hat: float
    counts: dict[float, int]
    eps_grid: tuple[float, ...]


def packing_exponent(
    space: SpaceSpec,
    eps_grid,
    probe_budget: int = 2000,
    rng: np.random.Generator | None = None,
) -> PackingExponentFit:
    """Log-log slope of packing count against 1/epsilon across scales."""
    eps = [float(e) for e in eps_grid]
    if len(set(eps)) < 2:
        raise RejectedInputError("need >= 2 scales to fit a packing exponent")
    if any(eps[i] <= eps[i + 1] for i in range(len(eps) - 1)):
        raise RejectedInputError("eps_grid must be sorted descending")
    counts = {e: maximal_packing(space, e, probe_budget, rng).count for e in eps}
    logx = np.log([1.0 / e for e in eps])
    logy = np.log([counts[e] for e in eps])
    xm, ym = logx.mean(), logy.mean()
    k_hat = float(((logx - xm) * (logy - ym)).sum() / ((logx - xm) ** 2).sum())
    c_hat = float(np.exp((logy - k_hat * logx).max()))
    return PackingExponentFit(k_hat, c_hat, counts, tuple(eps))


# ---------------------------------------------------------------------------
# partition cells as exact box unions (chebyshev)


def _axis_pieces(center: float, half: float) -> list[tuple[float, float]]:
    """Chart intervals of the arc [center-half, center+half] within [0,1]."""
    if half >= 0.5:
        return [(0.0, 1.0)]
    lo, hi = center - half, center + half
    pieces = [(max(lo, 0.0), min(hi, 1.0))]
    if lo < 0.0:
        pieces.append((lo + 1.0, 1.0))
    if hi > 1.0:
        pieces.append((0.0, hi - 1.0))
    return [(a, b) for a, b in pieces if b > a]


def _decompose_cell(
    centers_f: np.ndarray, k: int, half: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Disjoint chart boxes covering cell k: own ball minus earlier balls.

    Chart coordinates are (x - origin) mod 1 with origin = center_k - 1/2,
    so the cell's own ball is the box [1/2 - half, 1/2 + half]^N (clamped to
    the full axis when the ball wraps).  Earlier balls enter as up to 2^N
    chart boxes each; an arrangement grid over all breakpoints classifies
    elementary boxes as kept or removed.
    """
    n = centers_f.shape[1]
    origin = (centers_f[k] - 0.5) % 1.0
    w = min(half, 0.5)
    own = [(0.5 - w, 0.5 + w) if half < 0.5 else (0.0, 1.0) for _ in range(n)]

    # earlier balls -> product boxes of chart axis pieces, clipped to the cell
    blockers: list[list[tuple[float, float]]] = []
    for i in range(k):
        c = (centers_f[i] - origin) % 1.0
        per_axis = []
        for a in range(n):
            clipped = [
                (max(lo, own[a][0]), min(hi, own[a][1]))
                for lo, hi in _axis_pieces(c[a], half)
            ]
            per_axis.append([(lo, hi) for lo, hi in clipped if hi > lo])
        if all(per_axis):
            stack = [[]]
            for a in range(n):
                stack = [box + [iv] for box in stack for iv in per_axis[a]]
            blockers.extend(stack)

    cuts = []
    for a in range(n):
        pts = {own[a][0], own[a][1]}
        for box in blockers:
            pts.update(box[a])
        cuts.append(np.array(sorted(pts)))
    shape = tuple(len(c) - 1 for c in cuts)
    removed = np.zeros(shape, dtype=bool)
    for box in blockers:
        sl = tuple(
            slice(
                int(np.searchsorted(cuts[a], box[a][0], side="left")),
                int(np.searchsorted(cuts[a], box[a][1], side="left")),
            )
            for a in range(n)
        )
        removed[sl] = True
    keep = ~removed
    idx = np.argwhere(keep)
    los = np.stack([cuts[a][idx[:, a]] for a in range(n)], axis=1)
    his = np.stack([cuts[a][idx[:, a] + 1] for a in range(n)], axis=1)
    return origin, los, his


@dataclass(frozen=True)
class Partition:
    packing: Packing
    # per cell: (origin (N,), box los (B,N), box his (B,N)); None for metrics
    # without box cells
    boxes: list[tuple[np.ndarray, np.ndarray, np.ndarray]] | None = field(
        default=None, repr=False
    )

    @property
    def radius(self) -> float:
        return 2.0 * self.packing.epsilon


def build_partition(packing: Packing) -> Partition:
    if packing.space.metric != CHEBYSHEV:
        return Partition(packing, None)
    centers_f = fixed_to_floats(packing.centers)
    half = 2.0 * packing.epsilon
    boxes = [
        _decompose_cell(centers_f, k, half) for k in range(packing.count)
    ]
    return Partition(packing, boxes)


def cells_of(partition: Partition, coords: np.ndarray) -> np.ndarray:
    """First-match cell index per row of fixed-point coords; -1 if uncovered."""
    packing = partition.packing
    space = packing.space
    out = np.empty(coords.shape[0], dtype=np.int64)
    radius = partition.radius
    chunk = max(1, (1 << 22) // max(1, packing.count * space.dimension))
    for lo in range(0, coords.shape[0], chunk):
        block = coords[lo : lo + chunk]
        d = distances_fixed(space, block[:, None, :], packing.centers[None, :, :])
        hit = d < radius
        first = hit.argmax(axis=1)
        first[~hit.any(axis=1)] = -1
        out[lo : lo + block.shape[0]] = first
    return out


def cell_of(partition: Partition, x: Point) -> int | None:
    k = int(cells_of(partition, x.coords[None, :])[0])
    return None if k < 0 else k


def _signed_margins(
    partition: Partition, k: int, coords_f: np.ndarray, delta: float
) -> np.ndarray:
    """(S,) largest per-box interior depth within the delta-widened cell k.

    Positive values are exact box depths, negative values are (minus) the
    chebyshev distance to the nearest box of the widened cell.
    """
    origin, los, his = partition.boxes[k]
    if los.shape[0] == 0:  # fully covered by earlier cells: empty cell
        return np.full(coords_f.shape[0], -np.inf)
    x = (coords_f - origin) % 1.0
    best = None
    for a in range(origin.shape[0]):
        xa = x[:, a][:, None]
        lo = los[None, :, a] - delta
        hi = his[None, :, a] + delta
        m = np.minimum(xa - lo, hi - xa)
        for lift in (-1.0, 1.0):
            m = np.maximum(m, np.minimum(xa + lift - lo, hi - (xa + lift)))
        if delta > 0:
            m = np.where((his[None, :, a] - los[None, :, a]) + 2 * delta >= 1.0, delta, m)
        best = m if best is None else np.minimum(best, m)
    return best.max(axis=1)


@dataclass(frozen=True)
class MollifierSet:
    partition: Partition
    delta: float

    def __post_init__(self):
        if not 0 < self.delta < self.partition.radius:
            raise RejectedInputError("delta must satisfy 0 < delta < 2*epsilon")


def mollifier_eval_batch(ms: MollifierSet, k: int, coords_f: np.ndarray) -> np.ndarray:
    """Ramp min{1, depth/delta} into the delta-widened cell k, vectorized."""
    if not 0 <= k < ms.partition.packing.count:
        raise RejectedInputError(f"cell index {k} out of range")
    if ms.partition.boxes is None:
        return _mollifier_probe_batch(ms, k, coords_f)
    depth = _signed_margins(ms.partition, k, coords_f, ms.delta)
    return np.clip(depth / ms.delta, 0.0, 1.0)


def mollifier_eval(ms: MollifierSet, k: int, x: Point) -> float:
    return float(mollifier_eval_batch(ms, k, x.floats[None, :])[0])


def _mollifier_probe_batch(ms: MollifierSet, k: int, coords_f: np.ndarray) -> np.ndarray:
    """Probe estimate for metrics without box cells: ramp of the distance to
    in-cell sample points, a coarse stand-in documented as such."""
    packing = ms.partition.packing
    space = packing.space
    rng = np.random.default_rng(12345)  # fixed cloud, deterministic evals
    cloud = sample_uniform_batch(space, rng, 1 << 14)
    cloud = cloud[cells_of(ms.partition, cloud) == k]
    if cloud.shape[0] == 0:
        return np.zeros(coords_f.shape[0])
    d = distances_fixed(space, floats_to_fixed(coords_f)[:, None, :], cloud[None, :, :])
    near = d.min(axis=1)
    return np.clip(1.0 - near / ms.delta, 0.0, 1.0)


def in_widened_cell(partition: Partition, k: int, coords: np.ndarray, delta: float) -> np.ndarray:
    """Exact membership in the delta-widened cell (chebyshev box cells)."""
    if partition.boxes is None:
        raise UnsupportedPairingError("widened-cell membership needs box cells (chebyshev)")
    return _signed_margins(partition, k, fixed_to_floats(coords), 0.0) > -delta


def cell_volume(partition: Partition, k: int) -> float:
    """Exact Lebesgue volume of cell k from its disjoint box decomposition."""
    if partition.boxes is None:
        raise UnsupportedPairingError("exact cell volume needs box cells (chebyshev)")
    _, los, his = partition.boxes[k]
    return float(np.prod(his - los, axis=1).sum())


def widened_cell_volume(partition: Partition, k: int, delta: float) -> float:
    """Exact Lebesgue volume of the delta-widened cell k.

    The widened boxes overlap, so they are re-decomposed on a fresh
    arrangement grid (wrap-aware) before summing.
    """
    if partition.boxes is None:
        raise UnsupportedPairingError("exact widened volume needs box cells (chebyshev)")
    origin, los, his = partition.boxes[k]
    n = origin.shape[0]
    axis_pieces: list[list[list[tuple[float, float]]]] = []  # [box][axis] -> intervals
    for b in range(los.shape[0]):
        per_axis = []
        for a in range(n):
            lo, hi = los[b, a] - delta, his[b, a] + delta
            if hi - lo >= 1.0:
                per_axis.append([(0.0, 1.0)])
            else:
                c, h = 0.5 * (lo + hi) % 1.0, 0.5 * (hi - lo)
                per_axis.append(_axis_pieces(c, h))
        axis_pieces.append(per_axis)
    cuts = []
    for a in range(n):
        pts = {0.0, 1.0}
        for per_axis in axis_pieces:
            for lo, hi in per_axis[a]:
                pts.update((lo, hi))
        cuts.append(np.array(sorted(pts)))
    shape = tuple(len(c) - 1 for c in cuts)
    covered = np.zeros(shape, dtype=bool)
    for per_axis in axis_pieces:
        stack = [[]]
        for a in range(n):
            stack = [box + [iv] for box in stack for iv in per_axis[a]]
        for box in stack:
            sl = tuple(
                slice(
                    int(np.searchsorted(cuts[a], box[a][0], side="left")),
                    int(np.searchsorted(cuts[a], box[a][1], side="left")),
                )
                for a in range(n)
            )
            covered[sl] = True
    vol = 0.0
    for idx in np.argwhere(covered):
        vol += float(np.prod([cuts[a][idx[a] + 1] - cuts[a][idx[a]] for a in range(n)]))
    return vol


@dataclass(frozen=True)
class ExcessReport:
    per_cell: np.ndarray  # estimated measure of widened-cell minus cell
    std_errors: np.ndarray
    max_excess: float
    max_cell: int
    n_samples: int
    delta: float
    bound_value: float | None = None


def neighbourhood_excess(
    measure: MeasureSpec,
    partition: Partition,
    delta: float,
    n_samples: int,
    rng: np.random.Generator,
    bound_constants: tuple[float, float, float] | None = None,
) -> ExcessReport:
    """Monte Carlo measure of each widened cell's overhang beyond the cell.

    Samples from the measure; for each cell k estimates mu(widened_k \\ cell_k)
    as a frequency with its binomial standard error.  bound_constants, when
    given as (c, K, alpha0), are evaluated to c * (2 eps)^-K * delta^alpha0
    for comparison against the max excess.
    """
    if n_samples < 1000:
        raise RejectedInputError("n_samples below the 10^3 noise floor")
    if not 0 < delta < partition.radius:
        raise RejectedInputError("delta must satisfy 0 < delta < 2*epsilon")
    if partition.boxes is None:
        raise UnsupportedPairingError("neighbourhood excess needs box cells (chebyshev)")
    space = partition.packing.space
    samples = sample_measure_batch(measure, space, rng, n_samples)
    owner = cells_of(partition, samples)
    L = partition.packing.count
    est = np.empty(L)
    ses = np.empty(L)
    for k in range(L):
        inside = in_widened_cell(partition, k, samples, delta)
        excess = inside & (owner != k)
        p = float(excess.mean())
        est[k] = p
        ses[k] = math.sqrt(p * (1.0 - p) / n_samples)
    top = int(est.argmax())
    bound = None
    if bound_constants is not None:
        c, kexp, alpha0 = bound_constants
        bound = c * partition.radius ** (-kexp) * delta ** alpha0
    return ExcessReport(est, ses, float(est[top]), top, n_samples, float(delta), bound)
