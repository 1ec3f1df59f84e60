"""Recurrence experiments over exact orbits.

The estimators here share one convention: a "hit" at step k means the orbit
point T^k x lies strictly inside the ball around the base point whose mass is
the step-k target, with the radius obtained by mass inversion at the base
point.  On chebyshev-style spaces the hit predicate is evaluated in exact
64-bit fixed point, so runs are reproducible bit for bit across backends,
worker counts and repeat invocations.

Seed-parallel runs derive one independent Philox stream per seed index from
the master seed and aggregate in ascending index order, which makes every
aggregate independent of scheduling.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DegenerateMassError, RejectedInputError
from .measures import (
    LEBESGUE,
    MeasureSpec,
    ball_measure,
    ball_measure_batch,
    sample_measure_batch,
)
from .observables import Observable
from .phase import (
    CHEBYSHEV,
    FIXED_SCALE,
    Point,
    SpaceSpec,
    distances_fixed,
    fixed_threshold,
    fixed_thresholds,
    fixed_to_floats,
    wrapped_deltas,
)
from .rng import seed_stream
from .systems import (
    DIGIT_CHUNK,
    IDENTITY,
    ROTATION,
    SHIFT,
    TORAL,
    SystemSpec,
    angle_fixed,
    bulk_positions_after,
    make_orbit,
    matrix_mod64,
    orbit_positions,
)
from .targets import (
    BISECT_TOL,
    TargetSequence,
    SeqValidation,
    invert_radius_batch,
    target_value,
    target_values,
    validate_target_sequence,
)

__all__ = [
    "SbcResult",
    "EnEstimate",
    "PairEstimate",
    "DecayEstimate",
    "LocalStats",
    "BoshStat",
    "run_sbc",
    "estimate_E_measure",
    "estimate_E_pair",
    "estimate_correlation_decay",
    "return_time",
    "local_stats",
    "boshernitzan_stat",
]

_SCAN_BLOCK = 1 << 15
_QUANTS = (0.05, 0.25, 0.5, 0.75, 0.95)


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("RECLAB_WORKERS", "1") or 1)
    workers = int(workers)
    if workers < 1:
        raise RejectedInputError("workers must be >= 1")
    return workers


def _exact_metric(space: SpaceSpec) -> bool:
    # 1-D euclidean and chebyshev quotient distances coincide, so the exact
    # integer predicate applies to both
    return space.metric == CHEBYSHEV or space.dimension == 1


def _hit_flags(
    space: SpaceSpec,
    positions: np.ndarray,
    base: np.ndarray,
    radii: np.ndarray,
    thresholds: np.ndarray | None = None,
) -> np.ndarray:
    """Strict-inequality ball membership of positions vs per-row radii."""
    deltas = wrapped_deltas(positions, base)
    if _exact_metric(space):
        if thresholds is None:
            thresholds = fixed_thresholds(radii)
        return deltas.max(axis=-1) < thresholds
    f = deltas.astype(np.float64) * FIXED_SCALE
    return np.sqrt(np.sum(f * f, axis=-1)) < radii


def _radii_at_centers(
    measure: MeasureSpec,
    space: SpaceSpec,
    centers_fixed: np.ndarray,
    mass: float,
    tol: float | None = None,
) -> np.ndarray:
    """inf{r : mu(B(x_i, r)) >= mass} for every row, one shared mass."""
    count = centers_fixed.shape[0]
    if measure.kind == LEBESGUE:
        origin = Point(np.zeros(space.dimension, dtype=np.uint64))
        r = invert_radius_batch(measure, space, origin, np.array([mass]), tol)[0]
        return np.full(count, r)
    tol = BISECT_TOL if tol is None else float(tol)
    centers = fixed_to_floats(centers_fixed)
    lo = np.zeros(count)
    hi = np.full(count, space.diameter)
    converged = False
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        mu = ball_measure_batch(measure, space, centers, mid)
        ge = mu >= mass
        hi = np.where(ge, mid, hi)
        lo = np.where(ge, lo, mid)
        if float((hi - lo).max()) <= 1e-14:
            converged = True
            break
    if not converged:
        from .errors import NumericalFailureError

        raise NumericalFailureError("center-batch radius bisection did not converge")
    resid = ball_measure_batch(measure, space, centers, hi) - mass
    if float(np.abs(resid).max()) > tol:
        from .errors import NumericalFailureError

        raise NumericalFailureError(
            f"center-batch bisection residual {float(np.abs(resid).max()):.3e} exceeds {tol:.1e}"
        )
    if mass == 0.0:
        return np.zeros(count)
    return hi


# ---------------------------------------------------------------------------
# hit-ratio runs


@dataclass(frozen=True)
class SbcResult:
    """Cross-seed record of cumulative hit counts against cumulative mass."""

    checkpoints: np.ndarray          # (C,) int64, ascending
    cum_mass: np.ndarray             # (C,) float64, sum of targets up to each checkpoint
    hit_counts: np.ndarray           # (n_seeds, C) int64, cumulative hits
    ratios: np.ndarray               # (n_seeds, C) float64, nan where cum_mass == 0
    final_ratios: np.ndarray         # (n_seeds,) ratio at the last checkpoint
    mean_final: float
    std_final: float
    median_final: float
    quantiles: dict[float, float]
    n_seeds: int
    n_max: int
    master_seed: int
    non_mixing: bool                 # identity / rotation control runs
    fixed_center: bool               # balls centered at a shared config point
    validation: SeqValidation
    start_coords: np.ndarray         # (n_seeds, N) uint64 orbit start points
    notes: tuple[str, ...] = field(default_factory=tuple)


def run_sbc(
    system: SystemSpec,
    measure: MeasureSpec,
    space: SpaceSpec,
    seq: TargetSequence,
    n_max: int,
    n_seeds: int,
    checkpoints,
    master_seed: int,
    fixed_center: Point | None = None,
    override_validation: bool = False,
    workers: int | None = None,
    radius_tol: float | None = None,
) -> SbcResult:
    """Cumulative-hit over cumulative-mass ratios across independent seeds.

    Each seed draws its own start point from the measure, computes the
    per-step radii by mass inversion at the base point, generates the orbit
    once, and counts steps k with d(T^k x, base) strictly below the step-k
    radius.  The base point is the orbit start unless fixed_center pins all
    balls to one shared point (comparison mode; radii then come from that
    center and only the orbit varies by seed).
    """
    n_max = int(n_max)
    n_seeds = int(n_seeds)
    if n_max < 1:
        raise RejectedInputError("n_max must be >= 1")
    if n_max > seq.horizon:
        raise RejectedInputError(f"n_max {n_max} exceeds the sequence horizon {seq.horizon}")
    if n_seeds < 1:
        raise RejectedInputError("n_seeds must be >= 1")
    cps = np.unique(np.asarray(list(checkpoints), dtype=np.int64))
    if cps.size == 0:
        raise RejectedInputError("checkpoints must be nonempty")
    if cps[0] < 1 or cps[-1] > n_max:
        raise RejectedInputError("checkpoints must lie in [1, n_max]")

    masses = target_values(seq, np.arange(1, n_max + 1, dtype=np.int64))
    cum = np.cumsum(masses)
    cum_at = cum[cps - 1]
    if cum_at[-1] == 0.0:
        raise DegenerateMassError("degenerate mass: targets sum to zero at the final checkpoint")

    notes: list[str] = []
    validation = validate_target_sequence(seq)
    if validation.verdict == "fail":
        if not override_validation:
            raise RejectedInputError(
                "target sequence failed admissibility validation; "
                "pass override_validation=True to run it anyway"
            )
        notes.append("validation verdict fail, run forced by override")
    elif validation.verdict == "inconclusive":
        notes.append("validation inconclusive: " + "; ".join(validation.notes))

    non_mixing = system.kind in (IDENTITY, ROTATION)
    if non_mixing:
        notes.append("non-mixing control system; no convergence claim attaches")
    exact = _exact_metric(space)

    # Radii shared across seeds whenever they cannot depend on the base point.
    shared_radii: np.ndarray | None = None
    shared_thr: np.ndarray | None = None
    if fixed_center is not None:
        shared_radii = invert_radius_batch(measure, space, fixed_center, masses, radius_tol)
    elif measure.kind == LEBESGUE:
        origin = Point(np.zeros(space.dimension, dtype=np.uint64))
        shared_radii = invert_radius_batch(measure, space, origin, masses, radius_tol)
    if shared_radii is not None and exact:
        shared_thr = fixed_thresholds(shared_radii)

    fixed_base = None if fixed_center is None else fixed_center.coords

    def one_seed(i: int) -> tuple[np.ndarray, np.ndarray]:
        rng = seed_stream(master_seed, i)
        coords = sample_measure_batch(measure, space, rng, 1)[0]
        state = make_orbit(system, space, Point(coords), rng)
        start = state.coords.copy()
        base = start if fixed_base is None else fixed_base
        if shared_radii is None:
            radii = invert_radius_batch(measure, space, Point(base), masses, radius_tol)
            thr = fixed_thresholds(radii) if exact else None
        else:
            radii, thr = shared_radii, shared_thr
        pos = orbit_positions(system, space, state, n_max)
        hits = _hit_flags(space, pos, base[None, :], radii, thr)
        counts = np.cumsum(hits, dtype=np.int64)[cps - 1]
        return start, counts

    w = _resolve_workers(workers)
    if w == 1:
        rows = [one_seed(i) for i in range(n_seeds)]
    else:
        with ThreadPoolExecutor(max_workers=w) as pool:
            rows = list(pool.map(one_seed, range(n_seeds)))

    starts = np.stack([r[0] for r in rows])
    hit_counts = np.stack([r[1] for r in rows])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(cum_at > 0.0, hit_counts / cum_at, np.nan)
    final = ratios[:, -1]
    quants = {q: float(np.quantile(final, q)) for q in _QUANTS}
    return SbcResult(
        checkpoints=cps,
        cum_mass=cum_at,
        hit_counts=hit_counts,
        ratios=ratios,
        final_ratios=final,
        mean_final=float(final.mean()),
        std_final=float(final.std(ddof=1)) if n_seeds > 1 else 0.0,
        median_final=float(np.median(final)),
        quantiles=quants,
        n_seeds=n_seeds,
        n_max=n_max,
        master_seed=int(master_seed),
        non_mixing=non_mixing,
        fixed_center=fixed_center is not None,
        validation=validation,
        start_coords=starts,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# single-step event measures


@dataclass(frozen=True)
class EnEstimate:
    n: int
    mu_hat: float
    std_error: float
    target: float
    deviation: float
    n_samples: int


def _sample_or_points(
    measure: MeasureSpec,
    space: SpaceSpec,
    n_samples: int,
    rng: np.random.Generator,
    points: np.ndarray | None,
) -> np.ndarray:
    if points is None:
        if n_samples < 1000:
            raise RejectedInputError("n_samples must be >= 1000")
        return sample_measure_batch(measure, space, rng, int(n_samples))
    pts = np.ascontiguousarray(points, dtype=np.uint64)
    if pts.ndim != 2 or pts.shape[1] != space.dimension:
        raise RejectedInputError("points must have shape (n_samples, dimension)")
    if int(n_samples) != pts.shape[0]:
        raise RejectedInputError("n_samples must match the number of supplied points")
    return pts


def estimate_E_measure(
    system: SystemSpec,
    measure: MeasureSpec,
    space: SpaceSpec,
    seq: TargetSequence,
    n: int,
    n_samples: int,
    rng: np.random.Generator,
    points: np.ndarray | None = None,
    radius_tol: float | None = None,
) -> EnEstimate:
    """Monte Carlo frequency of step-n returns into the step-n target ball.

    A zero target gives the empty ball, hence a zero estimate; that case is a
    value, not an error.  Supplying explicit points (already distributed per
    the measure) reuses them verbatim, which is what lets hit-ratio runs and
    this estimator be cross-checked on identical sample sets.
    """
    n = int(n)
    if n < 1:
        raise RejectedInputError("n must be >= 1")
    xs = _sample_or_points(measure, space, n_samples, rng, points)
    mass = target_value(seq, n)
    pos = bulk_positions_after(system, space, xs, [0, n], rng)
    base = pos[0]
    radii = _radii_at_centers(measure, space, base, mass, radius_tol)
    hits = _hit_flags(space, pos[n], base, radii)
    s = xs.shape[0]
    mu_hat = float(hits.mean())
    se = math.sqrt(mu_hat * (1.0 - mu_hat) / s)
    return EnEstimate(n, mu_hat, se, mass, mu_hat - mass, s)


@dataclass(frozen=True)
class PairEstimate:
    n: int
    m: int
    joint_hat: float
    product_hat: float
    slack: float
    joint_se: float
    product_se: float
    marginal_n: float
    marginal_nm: float
    # both candidate target products are recorded: the step-n/step-m one and
    # the step-(n+m)/step-n one
    target_product_nm: float
    target_product_sum: float
    n_samples: int


def estimate_E_pair(
    system: SystemSpec,
    measure: MeasureSpec,
    space: SpaceSpec,
    seq: TargetSequence,
    n: int,
    m: int,
    n_samples: int,
    rng: np.random.Generator,
    radius_tol: float | None = None,
) -> PairEstimate:
    """Joint frequency of returns at steps n and n+m versus the product of
    the two marginal frequencies, on one shared sample set."""
    n, m = int(n), int(m)
    if n < 1 or m < 1:
        raise RejectedInputError("n and m must be >= 1")
    xs = _sample_or_points(measure, space, n_samples, rng, None)
    mass_n = target_value(seq, n)
    mass_nm = target_value(seq, n + m)
    pos = bulk_positions_after(system, space, xs, [0, n, n + m], rng)
    base = pos[0]
    hits_n = _hit_flags(space, pos[n], base, _radii_at_centers(measure, space, base, mass_n, radius_tol))
    hits_nm = _hit_flags(
        space, pos[n + m], base, _radii_at_centers(measure, space, base, mass_nm, radius_tol)
    )
    s = xs.shape[0]
    mu_n = float(hits_n.mean())
    mu_nm = float(hits_nm.mean())
    joint = float((hits_n & hits_nm).mean())
    product = mu_n * mu_nm
    joint_se = math.sqrt(joint * (1.0 - joint) / s)
    # delta-method spread of the product, covariance dropped
    var_n = mu_n * (1.0 - mu_n) / s
    var_nm = mu_nm * (1.0 - mu_nm) / s
    product_se = math.sqrt(mu_nm * mu_nm * var_n + mu_n * mu_n * var_nm)
    return PairEstimate(
        n=n,
        m=m,
        joint_hat=joint,
        product_hat=product,
        slack=joint - product,
        joint_se=joint_se,
        product_se=product_se,
        marginal_n=mu_n,
        marginal_nm=mu_nm,
        target_product_nm=mass_n * target_value(seq, m),
        target_product_sum=mass_nm * mass_n,
        n_samples=s,
    )


# ---------------------------------------------------------------------------
# correlation decay


@dataclass(frozen=True)
class DecayEstimate:
    observable_names: tuple[str, ...]
    holder_thetas: tuple[float, ...]
    holder_norms: tuple[float, ...]
    gaps: np.ndarray
    correlations: np.ndarray
    abs_correlations: np.ndarray
    noise_floor: float
    used_in_fit: np.ndarray          # bool per gap
    tau_hat: float | None            # None when no honest fit exists
    c_hat: float | None
    fit_rejected: bool
    n_samples: int
    note: str = ""


# multiplicative deviation from the fitted exponential beyond which the fit
# is declared a misfit (empirical threshold, recorded in the result note)
_FIT_RESID_LIMIT = math.log(4.0)


def estimate_correlation_decay(
    system: SystemSpec,
    measure: MeasureSpec,
    space: SpaceSpec,
    observables,
    gaps,
    n_samples: int,
    rng: np.random.Generator,
) -> DecayEstimate:
    """Correlation magnitudes over a gap sweep with an exponential fit.

    Two observables give E[f0(x) f1(T^g x)] minus the product of means; three
    use the equally spaced times (0, g, 2g).  Declared exact means are used
    when present, otherwise the empirical mean over the same sample stands
    in.  Only magnitudes above the noise floor 4/sqrt(S) enter the fit, a
    fit needs at least three such gaps, and it is rejected when the fitted
    rate is nonpositive or any used gap sits more than a factor of four off
    the fitted line.
    """
    obs = tuple(observables)
    if len(obs) not in (2, 3):
        raise RejectedInputError("need exactly 2 or 3 observables")
    for ob in obs:
        if not isinstance(ob, Observable):
            raise RejectedInputError("observables must be Observable instances")
    gap_arr = np.asarray(list(gaps), dtype=np.int64)
    if gap_arr.size == 0 or np.any(gap_arr < 1):
        raise RejectedInputError("gaps must be positive integers")
    if np.any(np.diff(gap_arr) <= 0):
        raise RejectedInputError("gaps must be strictly increasing")
    s = int(n_samples)
    if s < 1000:
        raise RejectedInputError("n_samples must be >= 1000")

    xs = sample_measure_batch(measure, space, rng, s)
    steps = {0}
    for g in gap_arr:
        steps.add(int(g))
        if len(obs) == 3:
            steps.add(2 * int(g))
    pos = bulk_positions_after(system, space, xs, sorted(steps), rng)
    floats = {k: fixed_to_floats(v) for k, v in pos.items()}

    means = []
    for ob in obs:
        if ob.exact_mean is not None:
            means.append(float(ob.exact_mean))
        else:
            means.append(float(ob(floats[0]).mean()))
    mean_product = float(np.prod(means))

    vals0 = obs[0](floats[0])
    corrs = np.empty(gap_arr.size)
    for j, g in enumerate(gap_arr):
        prod = vals0 * obs[1](floats[int(g)])
        if len(obs) == 3:
            prod = prod * obs[2](floats[2 * int(g)])
        corrs[j] = float(prod.mean()) - mean_product

    floor = 4.0 / math.sqrt(s)
    abs_corrs = np.abs(corrs)
    used = abs_corrs > floor

    tau_hat: float | None = None
    c_hat: float | None = None
    rejected = False
    if not used.any():
        note = "all gaps below the noise floor: indistinguishable from fast decay"
    elif used.sum() < 3:
        note = "fewer than 3 gaps above the noise floor, no fit attempted"
    else:
        gx = gap_arr[used].astype(np.float64)
        ly = np.log(abs_corrs[used])
        slope, intercept = np.polyfit(gx, ly, 1)
        resid = float(np.abs(ly - (intercept + slope * gx)).max())
        tau_hat = max(-float(slope), 0.0)
        c_hat = float(math.exp(intercept))
        rejected = (-float(slope) <= 0.0) or (resid > _FIT_RESID_LIMIT)
        note = "fit rejected: magnitudes do not follow one exponential" if rejected else ""

    return DecayEstimate(
        observable_names=tuple(ob.name for ob in obs),
        holder_thetas=tuple(ob.holder_theta for ob in obs),
        holder_norms=tuple(ob.holder_norm for ob in obs),
        gaps=gap_arr,
        correlations=corrs,
        abs_correlations=abs_corrs,
        noise_floor=floor,
        used_in_fit=used,
        tau_hat=tau_hat,
        c_hat=c_hat,
        fit_rejected=rejected,
        n_samples=s,
        note=note,
    )


# ---------------------------------------------------------------------------
# return times and local statistics

CENSORED = -1


def return_time(
    system: SystemSpec,
    space: SpaceSpec,
    x: Point,
    r: float,
    cap: int = 10 ** 8,
    rng: np.random.Generator | None = None,
) -> int:
    """First step k <= cap with d(T^k x, x) < r, or -1 once the cap censors.

    Censoring is a value, not an error; callers own the flag.
    """
    if not (r > 0.0):
        raise RejectedInputError("r must be > 0")
    cap = int(cap)
    if cap < 1:
        raise RejectedInputError("cap must be >= 1")
    if system.kind == IDENTITY:
        return 1
    exact = _exact_metric(space)
    if system.kind == TORAL and exact:
        return int(
            _kernels.toral_return_time(x.coords, matrix_mod64(system), fixed_threshold(r), cap)
        )
    if system.kind == ROTATION:
        ang = np.uint64(angle_fixed(system))
        thr = fixed_threshold(r)
        done = 0
        while done < cap:
            b = min(_SCAN_BLOCK, cap - done)
            ks = np.arange(done + 1, done + b + 1, dtype=np.uint64)
            pos = ks * ang
            delta = np.minimum(pos, np.zeros_like(pos) - pos)
            idx = np.flatnonzero(delta < thr)
            if idx.size:
                return done + 1 + int(idx[0])
            done += b
        return CENSORED
    if system.kind == SHIFT:
        state = make_orbit(system, space, x, rng)
        thr = fixed_threshold(r)
        start_view = int(state.coords[0])
        done = 0
        while done < cap:
            b = min(DIGIT_CHUNK, cap - done)
            fresh = state.draw_digits(b)
            hit, newq = _kernels.shift_return_scan(
                state.queue, fresh, thr, done, start_view, system.base
            )
            state.queue = newq
            if hit != -1:
                return int(hit)
            done += b
        return CENSORED
    # euclidean fallback: float distances over chunked positions
    state = make_orbit(system, space, x, rng)
    start = state.coords.copy()
    done = 0
    while done < cap:
        b = min(_SCAN_BLOCK, cap - done)
        pos = orbit_positions(system, space, state, b)
        d = distances_fixed(space, pos, start[None, :])
        idx = np.flatnonzero(d < r)
        if idx.size:
            return done + 1 + int(idx[0])
        done += b
    return CENSORED


def _first_hits(
    system: SystemSpec,
    space: SpaceSpec,
    x: Point,
    radii: np.ndarray,
    cap: int,
    rng: np.random.Generator | None,
) -> np.ndarray:
    """Return times for several radii off one shared orbit realization."""
    state = make_orbit(system, space, x, rng)
    start = state.coords.copy()
    exact = _exact_metric(space)
    thr = fixed_thresholds(radii) if exact else None
    taus = np.full(radii.size, CENSORED, dtype=np.int64)
    done = 0
    while done < cap and (taus == CENSORED).any():
        b = min(_SCAN_BLOCK, cap - done)
        pos = orbit_positions(system, space, state, b)
        if exact:
            d = wrapped_deltas(pos, start[None, :]).max(axis=-1)
        else:
            d = distances_fixed(space, pos, start[None, :])
        for j in range(radii.size):
            if taus[j] != CENSORED:
                continue
            hits = d < thr[j] if exact else d < radii[j]
            idx = np.flatnonzero(hits)
            if idx.size:
                taus[j] = done + 1 + int(idx[0])
        done += b
    return taus


@dataclass(frozen=True)
class LocalStats:
    """Ball masses and return times around one point over a radius grid."""

    center: tuple[float, ...]
    r_grid: np.ndarray
    mu_balls: np.ndarray
    taus: np.ndarray                 # int64, CENSORED where the cap hit
    censored: np.ndarray             # bool
    dimension_slopes: np.ndarray     # log mu increments over log r increments
    rate_slopes: np.ndarray          # log tau increments over -log r increments
    dimension_lower: float
    dimension_upper: float
    rate_lower: float
    rate_upper: float
    exponent_ratios: np.ndarray     # log tau / -log mu per radius, nan if unusable
    unusable: bool
    cap: int


def local_stats(
    system: SystemSpec,
    measure: MeasureSpec,
    space: SpaceSpec,
    x: Point,
    r_grid,
    cap: int = 10 ** 8,
    rng: np.random.Generator | None = None,
) -> LocalStats:
    """Pointwise mass-scaling and return-time-scaling slopes at one center.

    Slopes are finite differences between consecutive grid radii; their min
    and max over the grid stand in for the lower and upper limits.  All
    return times come from one orbit realization so they are monotone in r.
    """
    rs = np.asarray(list(r_grid), dtype=np.float64)
    if rs.size < 1 or np.any(rs <= 0):
        raise RejectedInputError("r_grid must hold positive radii")
    if np.any(np.diff(rs) >= 0):
        if rs.size > 1:
            raise RejectedInputError("r_grid must be strictly descending")
    cap = int(cap)
    if cap < 1:
        raise RejectedInputError("cap must be >= 1")

    mus = ball_measure_batch(
        measure, space, np.broadcast_to(x.floats, (rs.size, space.dimension)), rs
    )
    taus = _first_hits(system, space, x, rs, cap, rng)
    censored = taus == CENSORED

    d_slopes = []
    r_slopes = []
    for i in range(rs.size - 1):
        dlr = math.log(rs[i]) - math.log(rs[i + 1])
        if mus[i] > 0 and mus[i + 1] > 0:
            d_slopes.append((math.log(mus[i]) - math.log(mus[i + 1])) / dlr)
        if not censored[i] and not censored[i + 1]:
            r_slopes.append((math.log(taus[i]) - math.log(taus[i + 1])) / (-dlr))
    d_slopes = np.asarray(d_slopes)
    r_slopes = np.asarray(r_slopes)

    ratios = np.full(rs.size, np.nan)
    for i in range(rs.size):
        if not censored[i] and 0.0 < mus[i] < 1.0:
            ratios[i] = math.log(taus[i]) / (-math.log(mus[i]))

    return LocalStats(
        center=tuple(float(v) for v in x.floats),
        r_grid=rs,
        mu_balls=mus,
        taus=taus,
        censored=censored,
        dimension_slopes=d_slopes,
        rate_slopes=r_slopes,
        dimension_lower=float(d_slopes.min()) if d_slopes.size else float("nan"),
        dimension_upper=float(d_slopes.max()) if d_slopes.size else float("nan"),
        rate_lower=float(r_slopes.min()) if r_slopes.size else float("nan"),
        rate_upper=float(r_slopes.max()) if r_slopes.size else float("nan"),
        exponent_ratios=ratios,
        unusable=bool(censored.all()),
        cap=cap,
    )


# ---------------------------------------------------------------------------
# scaled-distance minima


@dataclass(frozen=True)
class BoshStat:
    alpha: float
    checkpoints: np.ndarray          # (C,) int64
    running_minima: np.ndarray       # (C,) nonincreasing
    final: float


def boshernitzan_stat(
    system: SystemSpec,
    space: SpaceSpec,
    x: Point,
    alpha: float,
    n_max: int,
    rng: np.random.Generator | None = None,
) -> BoshStat:
    """Running minimum of n**(1/alpha) * d(T^n x, x) at doubling checkpoints."""
    alpha = float(alpha)
    if not (alpha > 0):
        raise RejectedInputError("alpha must be > 0")
    n_max = int(n_max)
    if n_max < 1:
        raise RejectedInputError("n_max must be >= 1")
    cps: list[int] = []
    c = 1
    while c < n_max:
        cps.append(c)
        c *= 2
    cps.append(n_max)
    state = make_orbit(system, space, x, rng)
    start = state.coords.copy()
    best = math.inf
    minima = np.empty(len(cps))
    done = 0
    power = 1.0 / alpha
    for j, cp in enumerate(cps):
        b = cp - done
        if b:
            pos = orbit_positions(system, space, state, b)
            d = distances_fixed(space, pos, start[None, :])
            ks = np.arange(done + 1, cp + 1, dtype=np.float64)
            best = min(best, float((ks ** power * d).min()))
        minima[j] = best
        done = cp
    return BoshStat(alpha, np.asarray(cps, dtype=np.int64), minima, float(best))
