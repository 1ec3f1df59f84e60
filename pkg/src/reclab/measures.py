"""Reference measures on the torus and their ball/annulus geometry.

Two kinds are supported: the Lebesgue measure (closed-form ball volumes) and
piecewise-constant densities on a regular G^N cell grid.  Grid densities pair
with the chebyshev-quotient metric only, where a ball is an axis cube and the
ball mass is an exact product-of-overlaps integral; no Monte Carlo enters the
measure side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSupportError,
    RejectedInputError,
    UnsupportedPairingError,
)
from .phase import CHEBYSHEV, Point, SpaceSpec, ball_volume

__all__ = [
    "MeasureSpec",
    "lebesgue",
    "grid_density",
    "grid_density_from_csv",
    "ball_measure",
    "annulus_measure",
    "sample_measure",
    "sample_measure_batch",
    "BallScalingFit",
    "AnnulusFit",
    "fit_ball_scaling",
    "fit_annulus_regularity",
]

LEBESGUE = "lebesgue"
GRID = "grid_density"

_INTEGRAL_TOL = 1e-12


@dataclass(frozen=True)
class MeasureSpec:
    kind: str
    grid: np.ndarray | None = None  # (G,)*N density values, row-major origin

    def __post_init__(self):
        if self.kind not in (LEBESGUE, GRID):
            raise RejectedInputError(f"unknown measure kind {self.kind!r}")
        if self.kind == GRID:
            g = self.grid
            if g is None or g.ndim < 1:
                raise RejectedInputError("grid_density requires a density array")
            if g.shape.count(g.shape[0]) != g.ndim:
                raise RejectedInputError("density grid must be G^N with equal G per axis")
            if np.any(g < 0) or not np.all(np.isfinite(g)):
                raise RejectedInputError("density values must be finite and nonnegative")
            integral = float(g.mean())
            if abs(integral - 1.0) > _INTEGRAL_TOL:
                raise RejectedInputError(
                    f"density must integrate to 1 within {_INTEGRAL_TOL}, got {integral!r}"
                )

    @property
    def resolution(self) -> int | None:
        return None if self.grid is None else self.grid.shape[0]

    @property
    def dimension(self) -> int | None:
        return None if self.grid is None else self.grid.ndim


def lebesgue() -> MeasureSpec:
    return MeasureSpec(LEBESGUE)


def grid_density(values, dimension: int) -> MeasureSpec:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1 and dimension > 1:
        g = round(arr.shape[0] ** (1.0 / dimension))
        if g ** dimension != arr.shape[0]:
            raise RejectedInputError(
                f"flat density of length {arr.shape[0]} is not a G^{dimension} grid"
            )
        arr = arr.reshape((g,) * dimension)
    return MeasureSpec(GRID, arr)


def grid_density_from_csv(path, resolution: int, dimension: int) -> MeasureSpec:
    """Load one cell value per line, row-major, and validate the cell count."""
    values = np.loadtxt(path, dtype=np.float64, comments="#", ndmin=1)
    if values.ndim != 1:
        raise RejectedInputError("density file must hold one value per line")
    expect = resolution ** dimension
    if values.shape[0] != expect:
        raise RejectedInputError(
            f"density file has {values.shape[0]} cells, resolution {resolution}^{dimension} needs {expect}"
        )
    return grid_density(values.reshape((resolution,) * dimension), dimension)


def _check_pairing(measure: MeasureSpec, space: SpaceSpec) -> None:
    if measure.kind == GRID:
        if space.metric != CHEBYSHEV:
            raise UnsupportedPairingError(
                "grid_density pairs with the chebyshev-quotient metric only"
            )
        if measure.dimension != space.dimension:
            raise RejectedInputError(
                f"density grid dimension {measure.dimension} != space dimension {space.dimension}"
            )


def _axis_weights(centers: np.ndarray, rs: np.ndarray, g: int) -> np.ndarray:
    """(B, G) per-cell overlap lengths of the wrapped arcs [c-r, c+r]."""
    edges = np.arange(g + 1) / g
    full = rs >= 0.5
    a = (centers - rs) % 1.0
    a = np.where(a >= 1.0, 0.0, a)
    span = np.minimum(2.0 * rs, 1.0)
    b = a + span
    # unwrapped part [a, min(b,1)] plus the wrapped remainder [0, b-1]
    lo1, hi1 = a[:, None], np.minimum(b, 1.0)[:, None]
    w = np.clip(np.minimum(hi1, edges[None, 1:]) - np.maximum(lo1, edges[None, :-1]), 0.0, None)
    over = np.clip(b - 1.0, 0.0, None)[:, None]
    w += np.clip(np.minimum(over, edges[None, 1:]) - edges[None, :-1], 0.0, None)
    w[full] = 1.0 / g
    return w


_AXES = "abcdefgh"


def ball_measure_batch(measure: MeasureSpec, space: SpaceSpec, centers: np.ndarray, rs) -> np.ndarray:
    """Ball masses for (B, N) float centers and scalar-or-(B,) radii."""
    _check_pairing(measure, space)
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    rs = np.broadcast_to(np.asarray(rs, dtype=np.float64), (centers.shape[0],)).copy()
    if np.any(rs < 0) or not np.all(np.isfinite(rs)):
        raise RejectedInputError("radii must be finite and nonnegative")
    if measure.kind == LEBESGUE:
        return np.array([ball_volume(space, float(r)) for r in rs])
    grid = measure.grid
    g = grid.shape[0]
    n = grid.ndim
    if n > len(_AXES):
        raise RejectedInputError("density dimension too large")
    ws = [_axis_weights(centers[:, i], rs, g) for i in range(n)]
    spec = _AXES[:n] + "," + ",".join("r" + _AXES[i] for i in range(n)) + "->r"
    return np.einsum(spec, grid, *ws)


def ball_measure(measure: MeasureSpec, space: SpaceSpec, x: Point, r: float) -> float:
    """Mass of the open ball B(x, r)."""
    if measure.kind == LEBESGUE:
        _check_pairing(measure, space)
        return ball_volume(space, r)
    return float(ball_measure_batch(measure, space, x.floats[None, :], float(r))[0])


def annulus_measure(measure: MeasureSpec, space: SpaceSpec, x: Point, rho: float, eps: float) -> float:
    """Mass of the shell rho <= d(x, y) < rho + eps, as a ball difference."""
    if rho < 0 or eps < 0:
        raise RejectedInputError("annulus wants rho >= 0 and eps >= 0")
    return ball_measure(measure, space, x, rho + eps) - ball_measure(measure, space, x, rho)


def _grid_cell_sampler(measure: MeasureSpec):
    flat = measure.grid.ravel()
    cum = np.cumsum(flat)
    if cum[-1] <= 0:
        raise DegenerateSupportError("density has no mass")
    return cum / cum[-1]


def sample_measure_batch(
    measure: MeasureSpec, space: SpaceSpec, rng: np.random.Generator, count: int
) -> np.ndarray:
    """(count, N) fixed-point samples distributed per the measure."""
    from .phase import sample_uniform_batch

    _check_pairing(measure, space)
    if measure.kind == LEBESGUE:
        return sample_uniform_batch(space, rng, count)
    g = measure.grid.shape[0]
    n = measure.grid.ndim
    cum = _grid_cell_sampler(measure)
    u = rng.random(count)
    flat_idx = np.minimum(np.searchsorted(cum, u, side="right"), cum.shape[0] - 1)
    cells = np.stack(np.unravel_index(flat_idx, measure.grid.shape), axis=1).astype(np.uint64)
    inner = rng.integers(0, 2 ** 64 - 1, size=(count, n), dtype=np.uint64, endpoint=True)
    # coordinate = (cell + inner/2^64)/G on the fixed grid, computed exactly:
    # (c*2^64 + u) // G  ==  c*q + u//G + (c*rem + u%G)//G
    gg = np.uint64(g)
    q = np.uint64((2 ** 64) // g)
    rem = np.uint64((2 ** 64) % g)
    return cells * q + inner // gg + (cells * rem + inner % gg) // gg


def sample_measure(measure: MeasureSpec, space: SpaceSpec, rng: np.random.Generator) -> Point:
    return Point(sample_measure_batch(measure, space, rng, 1)[0])


@dataclass(frozen=True)
class BallScalingFit:
    """Pooled log-log fit mu(B(x,r)) <= c1_hat * r**s_hat over probed pairs."""

    s_hat: float
    c1_hat: float
    n_centers: int
    r_grid: tuple[float, ...]
    n_points: int
    max_log_residual: float


@dataclass(frozen=True)
class AnnulusFit:
    """Pooled log-log fit of shell mass <= const_hat * eps**alpha0_hat."""

    alpha0_hat: float
    const_hat: float
    n_centers: int
    rho_grid: tuple[float, ...]
    eps_grid: tuple[float, ...]
    n_points: int
    max_log_residual: float


def _pooled_slope(logx: np.ndarray, logy: np.ndarray) -> tuple[float, float, float]:
    xm = logx.mean()
    ym = logy.mean()
    var = float(((logx - xm) ** 2).sum())
    if var == 0.0:
        raise RejectedInputError("need at least 2 distinct scales to fit a slope")
    slope = float(((logx - xm) * (logy - ym)).sum() / var)
    resid = logy - slope * logx
    intercept = float(resid.max())  # upper envelope so the bound holds everywhere probed
    spread = float(resid.max() - resid.min())
    return slope, intercept, spread


def fit_ball_scaling(
    measure: MeasureSpec,
    space: SpaceSpec,
    n_centers: int,
    r_grid,
    rng: np.random.Generator,
) -> BallScalingFit:
    """Estimate the volume-scaling exponent of balls under the measure.

    Parameters
    ----------
    n_centers : centers sampled from the measure itself.
    r_grid : radii probed at every center; at least two distinct values.

    Returns
    -------
    BallScalingFit with s_hat the pooled least-squares slope of log mass vs
    log radius and c1_hat = exp(max intercept residual), so the upper bound
    holds at every probed pair, not just on average.  Zero-mass balls are
    skipped; if every probed ball is empty the support is degenerate.
    """
    r_grid = tuple(float(r) for r in r_grid)
    if n_centers < 1 or min(r_grid) <= 0:
        raise RejectedInputError("need n_centers >= 1 and positive radii")
    centers = sample_measure_batch(measure, space, rng, n_centers)
    from .phase import fixed_to_floats

    cf = fixed_to_floats(centers)
    logx, logy = [], []
    for r in r_grid:
        mu = ball_measure_batch(measure, space, cf, r)
        keep = mu > 0
        logx.append(np.full(int(keep.sum()), np.log(r)))
        logy.append(np.log(mu[keep]))
    logx = np.concatenate(logx)
    logy = np.concatenate(logy)
    if logx.size == 0:
        raise DegenerateSupportError("all probed balls have zero mass")
    slope, intercept, spread = _pooled_slope(logx, logy)
    return BallScalingFit(slope, float(np.exp(intercept)), n_centers, r_grid, logx.size, spread)


def fit_annulus_regularity(
    measure: MeasureSpec,
    space: SpaceSpec,
    n_centers: int,
    rho_grid,
    eps_grid,
    rng: np.random.Generator,
    rho0: float | None = None,
) -> AnnulusFit:
    """Estimate the thin-shell regularity exponent of the measure.

    Shell masses mu{rho <= d < rho+eps} are probed on the full factorial
    (center, rho, eps) grid with every eps below every rho (and rho <= rho0
    when given), then fitted like fit_ball_scaling but against log eps.
    """
    rho_grid = tuple(float(p) for p in rho_grid)
    eps_grid = tuple(float(e) for e in eps_grid)
    if min(eps_grid) <= 0 or min(rho_grid) <= 0:
        raise RejectedInputError("rho and eps grids must be positive")
    if max(eps_grid) >= min(rho_grid):
        raise RejectedInputError("every probed eps must be smaller than every probed rho")
    if rho0 is not None and max(rho_grid) > rho0:
        raise RejectedInputError(f"rho grid exceeds rho0={rho0}")
    centers = sample_measure_batch(measure, space, rng, n_centers)
    from .phase import fixed_to_floats

    cf = fixed_to_floats(centers)
    logx, logy = [], []
    for rho in rho_grid:
        base = ball_measure_batch(measure, space, cf, rho)
        for eps in eps_grid:
            shell = ball_measure_batch(measure, space, cf, rho + eps) - base
            keep = shell > 0
            logx.append(np.full(int(keep.sum()), np.log(eps)))
            logy.append(np.log(shell[keep]))
    logx = np.concatenate(logx)
    logy = np.concatenate(logy)
    if logx.size == 0:
        raise DegenerateSupportError("all probed shells have zero mass")
    slope, intercept, spread = _pooled_slope(logx, logy)
    return AnnulusFit(
        slope, float(np.exp(intercept)), n_centers, rho_grid, eps_grid, logx.size, spread
    )
