"""Packings, partitions, mollifiers: exact volumes and sandwich properties."""

import math

import numpy as np
import pytest

from reclab.errors import RejectedInputError, UnsupportedPairingError
from reclab.geometry import (
    MollifierSet,
    build_partition,
    cell_of,
    cell_volume,
    cells_of,
    in_widened_cell,
    maximal_packing,
    mollifier_eval,
    mollifier_eval_batch,
    neighbourhood_excess,
    packing_exponent,
    widened_cell_volume,
)
from reclab.measures import annulus_measure, grid_density, lebesgue
from reclab.phase import (
    CHEBYSHEV,
    EUCLIDEAN,
    Point,
    SpaceSpec,
    distances_fixed,
    floats_to_fixed,
    sample_uniform_batch,
)

CIRCLE = SpaceSpec(dimension=1, metric=CHEBYSHEV)
TORUS2 = SpaceSpec(dimension=2, metric=CHEBYSHEV)


def _packing(space, eps, seed=0):
    return maximal_packing(space, eps, rng=np.random.default_rng(seed))


def test_packing_attains_the_torus_maximum():
    # floor(1/(2 eps))^N points is the chebyshev-torus optimum
    assert _packing(CIRCLE, 0.1).count == 5
    assert _packing(TORUS2, 0.1).count == 25
    assert _packing(CIRCLE, 0.07).count == 7


def test_packing_is_separated():
    pk = _packing(TORUS2, 0.1, seed=3)
    d = distances_fixed(TORUS2, pk.centers[:, None, :], pk.centers[None, :, :])
    off = d[~np.eye(pk.count, dtype=bool)]
    assert off.min() >= 2 * pk.epsilon - 1e-12


def test_packing_is_maximal_against_brute_force():
    # no point of a fine probe grid could join the packing
    pk = _packing(CIRCLE, 0.1, seed=1)
    grid = floats_to_fixed(np.linspace(0, 1, 2000, endpoint=False)[:, None])
    d = distances_fixed(CIRCLE, grid[:, None, :], pk.centers[None, :, :]).min(axis=1)
    assert d.max() < 2 * pk.epsilon


def test_packing_single_center_and_degenerate():
    pk = _packing(CIRCLE, 0.3)
    assert pk.count == 1 and not pk.degenerate
    pk = _packing(CIRCLE, 0.6)
    assert pk.count == 1 and pk.degenerate


def test_packing_determinism():
    a = _packing(TORUS2, 0.09, seed=7)
    b = _packing(TORUS2, 0.09, seed=7)
    assert np.array_equal(a.centers, b.centers)


def test_packing_rejects_bad_input():
    with pytest.raises(RejectedInputError):
        maximal_packing(CIRCLE, 0.0, rng=np.random.default_rng(0))
    with pytest.raises(RejectedInputError):
        maximal_packing(CIRCLE, 0.1, rng=None)


def test_packing_exponent_matches_dimension():
    fit = packing_exponent(CIRCLE, [0.1, 0.05, 0.025], rng=np.random.default_rng(2))
    assert abs(fit.k_hat - 1.0) < 0.05
    fit = packing_exponent(TORUS2, [0.1, 0.05], rng=np.random.default_rng(2))
    assert abs(fit.k_hat - 2.0) < 0.1
    with pytest.raises(RejectedInputError):
        packing_exponent(CIRCLE, [0.05, 0.1], rng=np.random.default_rng(2))


def test_partition_cell_volumes_tile_the_circle():
    part = build_partition(_packing(CIRCLE, 0.1, seed=5))
    vols = [cell_volume(part, k) for k in range(part.packing.count)]
    assert abs(sum(vols) - 1.0) < 1e-12
    # first-match cells: the first eats its full ball, later ones lose
    # overlap, trailing ones can come up empty
    assert abs(vols[0] - 0.4) < 1e-12
    assert sorted(round(v, 12) for v in vols) == [0.0, 0.2, 0.2, 0.2, 0.4]


def test_partition_covers_and_is_disjoint():
    part = build_partition(_packing(TORUS2, 0.11, seed=6))
    pts = sample_uniform_batch(TORUS2, np.random.default_rng(0), 10_000)
    owner = cells_of(part, pts)
    assert np.all(owner >= 0)
    # ownership matches exact box membership of the owner cell only
    for k in range(part.packing.count):
        mine = owner == k
        if mine.any():
            assert np.all(in_widened_cell(part, k, pts[mine], 0.0))
    # volumes sum to 1 and every point is in exactly one cell by construction
    vols = [cell_volume(part, k) for k in range(part.packing.count)]
    assert abs(sum(vols) - 1.0) < 1e-12
    assert cell_of(part, Point(pts[0])) == owner[0]


def test_cell_diameter_bound():
    part = build_partition(_packing(TORUS2, 0.1, seed=8))
    pts = sample_uniform_batch(TORUS2, np.random.default_rng(1), 4000)
    owner = cells_of(part, pts)
    for k in range(part.packing.count):
        mine = pts[owner == k]
        if mine.shape[0] < 2:
            continue
        d = distances_fixed(TORUS2, mine[:, None, :], mine[None, :, :])
        assert d.max() < 4 * part.packing.epsilon  # diam <= 2 * cell radius


def test_widened_volume_on_the_circle_adds_two_strips():
    part = build_partition(_packing(CIRCLE, 0.1, seed=5))
    delta = 0.03
    for k in range(part.packing.count):
        v = cell_volume(part, k)
        w = widened_cell_volume(part, k, delta)
        if v == 0.0:
            assert w == 0.0
        else:
            assert abs(w - (v + 2 * delta)) < 1e-12


def test_mollifier_sandwich_and_lipschitz():
    part = build_partition(_packing(TORUS2, 0.1, seed=9))
    delta = 0.04
    ms = MollifierSet(part, delta)
    pts = sample_uniform_batch(TORUS2, np.random.default_rng(3), 5000)
    owner = cells_of(part, pts)
    coords_f = pts.astype(np.float64) * 2.0 ** -64
    for k in range(part.packing.count):
        h = mollifier_eval_batch(ms, k, coords_f)
        assert np.all((h >= 0) & (h <= 1))
        assert np.all(h[owner == k] == 1.0)  # 1 on the cell itself
        outside = ~in_widened_cell(part, k, pts, delta)
        assert np.all(h[outside] == 0.0)  # 0 beyond the widened cell
    # ramp is 1/delta-Lipschitz
    a = sample_uniform_batch(TORUS2, np.random.default_rng(4), 400)
    b = sample_uniform_batch(TORUS2, np.random.default_rng(5), 400)
    d = distances_fixed(TORUS2, a, b)
    ha = mollifier_eval_batch(ms, 0, a.astype(np.float64) * 2.0 ** -64)
    hb = mollifier_eval_batch(ms, 0, b.astype(np.float64) * 2.0 ** -64)
    assert np.all(np.abs(ha - hb) <= d / delta + 1e-9)


def test_mollifier_rejects_bad_delta():
    part = build_partition(_packing(CIRCLE, 0.1, seed=5))
    with pytest.raises(RejectedInputError):
        MollifierSet(part, 0.0)
    with pytest.raises(RejectedInputError):
        MollifierSet(part, 0.25)  # >= 2*epsilon
    ms = MollifierSet(part, 0.05)
    with pytest.raises(RejectedInputError):
        mollifier_eval(ms, 99, Point.from_floats([0.5]))


def test_neighbourhood_excess_matches_exact_strips():
    part = build_partition(_packing(CIRCLE, 0.1, seed=5))
    delta = 0.03
    rep = neighbourhood_excess(lebesgue(), part, delta, 100_000, np.random.default_rng(6))
    for k in range(part.packing.count):
        if cell_volume(part, k) == 0.0:
            assert rep.per_cell[k] == 0.0
        else:
            assert abs(rep.per_cell[k] - 2 * delta) <= 4 * rep.std_errors[k] + 1e-9
    assert rep.max_cell == int(rep.per_cell.argmax())


def test_neighbourhood_excess_bound_value():
    part = build_partition(_packing(CIRCLE, 0.1, seed=5))
    rep = neighbourhood_excess(
        lebesgue(), part, 0.02, 2000, np.random.default_rng(7), bound_constants=(3.0, 1.0, 1.0)
    )
    assert abs(rep.bound_value - 3.0 / 0.2 * 0.02) < 1e-12
    with pytest.raises(RejectedInputError):
        neighbourhood_excess(lebesgue(), part, 0.02, 10, np.random.default_rng(7))


def test_excess_under_a_nonuniform_measure():
    # cell 0 is the first ball, so its widened excess is exactly the annulus
    # mass, computable in closed form for a grid density.
    part = build_partition(_packing(CIRCLE, 0.2, seed=11))
    assert part.packing.count == 2
    meas = grid_density([1.6, 0.4], dimension=1)
    delta = 0.02
    rep = neighbourhood_excess(meas, part, delta, 200_000, np.random.default_rng(8))
    c0 = Point(part.packing.centers[0])
    want = annulus_measure(meas, CIRCLE, c0, 0.4, delta)
    assert abs(rep.per_cell[0] - want) <= 4 * rep.std_errors[0] + 1e-9


def test_euclidean_partitions_have_no_box_cells():
    pk = maximal_packing(
        SpaceSpec(dimension=2, metric=EUCLIDEAN), 0.1, rng=np.random.default_rng(0)
    )
    part = build_partition(pk)
    assert part.boxes is None
    with pytest.raises(UnsupportedPairingError):
        cell_volume(part, 0)
    with pytest.raises(UnsupportedPairingError):
        neighbourhood_excess(lebesgue(), part, 0.02, 2000, np.random.default_rng(1))
    # the probe mollifier still gives a sandwich-shaped ramp
    ms = MollifierSet(part, 0.05)
    owner = cells_of(part, pk.centers)
    h = mollifier_eval_batch(ms, int(owner[0]), pk.centers.astype(np.float64) * 2.0 ** -64)
    assert 0.0 <= h.min() and h.max() <= 1.0