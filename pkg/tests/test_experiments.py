"""Experiment drivers: hit counting, estimators, return times, determinism."""

import math

import numpy as np
import pytest

from reclab.errors import DegenerateMassError, RejectedInputError
from reclab.experiments import (
    CENSORED,
    boshernitzan_stat,
    estimate_correlation_decay,
    estimate_E_measure,
    estimate_E_pair,
    local_stats,
    return_time,
    run_sbc,
)
from reclab.measures import grid_density, lebesgue
from reclab.observables import constant, cosine_wave
from reclab.phase import CHEBYSHEV, Point, SpaceSpec
from reclab.rng import seed_stream
from reclab.systems import identity, rotation, shift_map, toral_automorphism
from reclab.targets import explicit_targets, power_targets

CIRCLE = SpaceSpec(dimension=1, metric=CHEBYSHEV)
TORUS2 = SpaceSpec(dimension=2, metric=CHEBYSHEV)
CAT = toral_automorphism(((2, 1), (1, 1)))


# --- strong-law ratio runs -------------------------------------------------

def test_sbc_identity_hits_every_step():
    # the identity returns instantly, so every positive target is a hit and
    # the ratio is n over the partial mass sum, exactly.
    seq = power_targets(0.5, 0.0, 200)  # constant 0.5
    res = run_sbc(identity(), lebesgue(), CIRCLE, seq, 200, 3, [10, 200], 0,
                  override_validation=True)
    assert res.non_mixing
    assert np.all(res.hit_counts[:, 0] == 10)
    assert np.all(res.hit_counts[:, 1] == 200)
    assert np.allclose(res.ratios[:, 1], 200 / (0.5 * 200))
    assert any("non-mixing" in note for note in res.notes)


def test_sbc_rejects_degenerate_mass():
    seq = explicit_targets([0.0] * 100)
    with pytest.raises(DegenerateMassError):
        run_sbc(identity(), lebesgue(), CIRCLE, seq, 100, 2, [100], 0,
                override_validation=True)


def test_sbc_requires_validation_unless_overridden():
    bad = power_targets(1.0, 1.0, 2000)  # fails the decay bound
    with pytest.raises(RejectedInputError, match="admissibility"):
        run_sbc(shift_map(2), lebesgue(), CIRCLE, bad, 2000, 2, [2000], 0)
    res = run_sbc(shift_map(2), lebesgue(), CIRCLE, bad, 2000, 2, [2000], 0,
                  override_validation=True)
    assert res.validation.verdict == "fail"


def test_sbc_shift_ratio_converges():
    seq = power_targets(1.0, 0.9, 2000)
    res = run_sbc(shift_map(2), lebesgue(), CIRCLE, seq, 2000, 40, [500, 2000], 0)
    assert res.checkpoints.tolist() == [500, 2000]
    assert abs(res.mean_final - 1.0) < 0.15
    assert res.hit_counts.shape == (40, 2)
    # partial hit counts never decrease and never beat the step count
    assert np.all(res.hit_counts[:, 1] >= res.hit_counts[:, 0])
    assert np.all(res.hit_counts[:, 1] <= 2000)


def test_sbc_workers_do_not_change_results():
    seq = power_targets(1.0, 0.9, 500)
    a = run_sbc(CAT, lebesgue(), TORUS2, seq, 500, 8, [500], 12, workers=1)
    b = run_sbc(CAT, lebesgue(), TORUS2, seq, 500, 8, [500], 12, workers=4)
    assert np.array_equal(a.hit_counts, b.hit_counts)
    assert np.array_equal(a.start_coords, b.start_coords)
    assert a.final_ratios.tolist() == b.final_ratios.tolist()


def test_sbc_fixed_center_mode_runs():
    seq = power_targets(1.0, 0.9, 300)
    res = run_sbc(CAT, lebesgue(), TORUS2, seq, 300, 4, [300], 3,
                  fixed_center=Point.from_floats([0.3, 0.7]))
    assert res.fixed_center
    assert res.hit_counts.shape == (4, 1)


def test_sbc_checkpoint_validation():
    seq = power_targets(1.0, 0.9, 100)
    with pytest.raises(RejectedInputError):
        run_sbc(CAT, lebesgue(), TORUS2, seq, 100, 2, [0, 100], 0)
    with pytest.raises(RejectedInputError):
        run_sbc(CAT, lebesgue(), TORUS2, seq, 100, 2, [50, 200], 0)
    with pytest.raises(RejectedInputError):
        run_sbc(CAT, lebesgue(), TORUS2, seq, 200, 2, [200], 0)  # horizon 100


# --- single-step and pair estimators ---------------------------------------

def test_estimate_identity_is_exact_mass():
    # identity: hit iff the target radius is positive, so mu_hat = 1 whenever
    # M_n > 0, and the deviation equals 1 - M_n with no Monte Carlo noise.
    seq = power_targets(0.1, 0.0, 50)
    est = estimate_E_measure(identity(), lebesgue(), CIRCLE, seq, 5, 2000,
                             seed_stream(0, 0))
    assert est.mu_hat == 1.0
    assert abs(est.deviation - 0.9) < 1e-12
    assert est.target == 0.1


def test_estimate_zero_mass_is_zero_value():
    seq = explicit_targets([0.5] * 9 + [0.0])
    est = estimate_E_measure(CAT, lebesgue(), TORUS2, seq, 10, 2000, seed_stream(0, 1))
    assert est.mu_hat == 0.0 and est.target == 0.0 and est.std_error == 0.0


def test_estimate_shift_one_step_is_exactly_half():
    # base-2 shift, target 1/2: the hit set is one fresh fair bit agreeing
    # with the start window's leading bit, probability exactly 1/2 with only
    # binomial noise.
    seq = explicit_targets([0.5] * 5)
    est = estimate_E_measure(shift_map(2), lebesgue(), CIRCLE, seq, 1, 200_000,
                             seed_stream(7, 0))
    se = math.sqrt(0.25 / 200_000)
    assert abs(est.mu_hat - 0.5) < 5 * se
    assert abs(est.deviation) < 5 * se


def test_estimate_cat_map_matches_target():
    seq = power_targets(1.0, 0.9, 100)
    est = estimate_E_measure(CAT, lebesgue(), TORUS2, seq, 10, 200_000, seed_stream(7, 1))
    assert abs(est.deviation) <= 4 * est.std_error + 0.002
    assert est.n_samples == 200_000


def test_estimate_points_mode_checks_shape():
    seq = power_targets(1.0, 0.9, 100)
    pts = np.zeros((100, 1), dtype=np.uint64)
    with pytest.raises(RejectedInputError):
        estimate_E_measure(CAT, lebesgue(), TORUS2, seq, 10, 100, seed_stream(0, 0),
                           points=pts)  # wrong dimension
    with pytest.raises(RejectedInputError):
        estimate_E_measure(CAT, lebesgue(), TORUS2, seq, 10, 500, seed_stream(0, 0))


def test_pair_identity_is_fully_correlated():
    seq = power_targets(0.3, 0.0, 50)
    est = estimate_E_pair(identity(), lebesgue(), CIRCLE, seq, 3, 2, 2000, seed_stream(1, 0))
    assert est.joint_hat == 1.0
    assert est.product_hat == 1.0
    assert est.slack == 0.0


def test_pair_slack_small_for_mixing_map():
    seq = power_targets(1.0, 0.9, 100)
    est = estimate_E_pair(CAT, lebesgue(), TORUS2, seq, 10, 10, 200_000, seed_stream(1, 1))
    assert abs(est.slack) <= 4 * (est.joint_se + est.product_se) + 1e-3
    assert est.joint_hat <= min(est.marginal_n, est.marginal_nm) + 1e-12
    # both reference products are reported
    assert est.target_product_nm > 0
    assert est.target_product_sum > 0


def test_pair_zero_mass_short_circuits():
    seq = explicit_targets([0.0] * 30)
    est = estimate_E_pair(CAT, lebesgue(), TORUS2, seq, 5, 5, 2000, seed_stream(1, 2))
    assert est.joint_hat == 0.0 and est.product_hat == 0.0 and est.slack == 0.0


# --- correlation decay ------------------------------------------------------

def test_decay_constant_observable_is_flat_zero():
    est = estimate_correlation_decay(
        CAT, lebesgue(), TORUS2, [constant(3.0), constant(2.0)], [1, 2, 4], 5000,
        seed_stream(2, 0),
    )
    assert np.all(est.abs_correlations < 1e-9)
    assert est.tau_hat is None
    assert "below the noise floor" in est.note


def test_decay_shift_cosine_pair_below_floor():
    est = estimate_correlation_decay(
        shift_map(2), lebesgue(), CIRCLE, [cosine_wave([1]), cosine_wave([1])],
        [1, 2, 3, 4, 6, 8], 20_000, seed_stream(2, 1),
    )
    assert est.noise_floor == 4.0 / math.sqrt(20_000)
    assert np.all(est.abs_correlations < est.noise_floor)
    assert not est.fit_rejected


def test_decay_rotation_is_rejected_with_exact_oracle():
    # rotation does not mix: E[cos(2 pi x) cos(2 pi T^g x)] = cos(2 pi g a)/2
    angle = 0.6180339887498949
    gaps = list(range(1, 13))
    est = estimate_correlation_decay(
        rotation(angle), lebesgue(), CIRCLE, [cosine_wave([1]), cosine_wave([1])],
        gaps, 40_000, seed_stream(2, 2),
    )
    mc = 4.0 / math.sqrt(40_000)
    for g, corr in zip(gaps, est.correlations):
        assert abs(corr - 0.5 * math.cos(2 * math.pi * g * angle)) < 2 * mc
    assert est.fit_rejected
    assert est.tau_hat == 0.0


def test_decay_three_point_and_input_validation():
    est = estimate_correlation_decay(
        CAT, lebesgue(), TORUS2, [cosine_wave((1, 0)), cosine_wave((0, 1)), constant(1.0)],
        [1, 2, 4], 5000, seed_stream(2, 3),
    )
    assert len(est.observable_names) == 3
    with pytest.raises(RejectedInputError):
        estimate_correlation_decay(CAT, lebesgue(), TORUS2, [cosine_wave((1, 0))],
                                   [1, 2], 5000, seed_stream(2, 4))
    with pytest.raises(RejectedInputError):
        estimate_correlation_decay(CAT, lebesgue(), TORUS2,
                                   [cosine_wave((1, 0)), constant(1.0)],
                                   [2, 1], 5000, seed_stream(2, 5))
    with pytest.raises(RejectedInputError):
        estimate_correlation_decay(CAT, lebesgue(), TORUS2,
                                   [cosine_wave((1, 0)), constant(1.0)],
                                   [1, 2], 100, seed_stream(2, 6))


# --- return times and local scaling -----------------------------------------

def test_return_time_hand_values():
    assert return_time(identity(), CIRCLE, Point.from_floats([0.3]), 0.01) == 1
    # fixed point of the matrix map returns immediately
    assert return_time(CAT, TORUS2, Point.from_floats([0.0, 0.0]), 1e-6) == 1
    # rotation by 1/4: fourth step is the first within a tight ball
    assert return_time(rotation(0.25), CIRCLE, Point.from_floats([0.1]), 1e-9) == 4
    # base-3 digits of 1/3-ish start repeat with period 1 after the first
    t = return_time(shift_map(3), CIRCLE, Point.from_floats([1.0 / 3.0]), 0.1,
                    rng=seed_stream(3, 0))
    assert t >= 1


def test_return_time_censoring_sentinel():
    t = return_time(rotation(0.6180339887498949), CIRCLE, Point.from_floats([0.2]),
                    1e-9, cap=50)
    assert t == CENSORED
    with pytest.raises(RejectedInputError):
        return_time(CAT, TORUS2, Point.from_floats([0.1, 0.2]), 0.0)
    with pytest.raises(RejectedInputError):
        return_time(CAT, TORUS2, Point.from_floats([0.1, 0.2]), 0.1, cap=0)


def test_return_times_monotone_in_radius():
    st = local_stats(CAT, lebesgue(), TORUS2, Point.from_floats([0.37, 0.58]),
                     [0.02, 0.01, 0.005], cap=10 ** 7)
    ok = st.taus[st.taus != CENSORED]
    assert np.all(np.diff(st.taus.astype(np.int64)) >= 0) or st.censored.any()
    assert ok.min() >= 1


def test_local_stats_circle_slopes_are_exact():
    st = local_stats(rotation(0.6180339887498949), lebesgue(), CIRCLE,
                     Point.from_floats([0.123]), [0.02, 0.01, 0.005], cap=10 ** 6)
    # lebesgue circle: mu(B(x,r)) = 2r, slope exactly 1 between any radii
    assert np.allclose(st.dimension_slopes, 1.0, atol=1e-9)
    assert st.dimension_lower <= st.dimension_upper
    assert not st.unusable


def test_local_stats_censoring_and_unusable():
    st = local_stats(rotation(0.6180339887498949), lebesgue(), CIRCLE,
                     Point.from_floats([0.123]), [1e-8, 1e-9], cap=10)
    assert st.censored.all()
    assert st.unusable
    assert np.all(np.isnan(st.exponent_ratios))
    with pytest.raises(RejectedInputError):
        local_stats(CAT, lebesgue(), TORUS2, Point.from_floats([0.1, 0.1]),
                    [0.01, 0.02], cap=100)  # not descending


def test_boshernitzan_running_minimum():
    # the identity fixes every point: d = 0, so the statistic is 0 throughout
    st = boshernitzan_stat(identity(), CIRCLE, Point.from_floats([0.4]), 1.0, 1000)
    assert np.all(st.running_minima == 0.0)
    assert st.final == 0.0
    st = boshernitzan_stat(shift_map(2), CIRCLE, Point.from_floats([0.37]), 1.0, 4096,
                           rng=seed_stream(4, 0))
    assert st.checkpoints[-1] == 4096
    assert np.all(np.diff(st.running_minima) <= 1e-15)
    assert st.final >= 0.0
    with pytest.raises(RejectedInputError):
        boshernitzan_stat(identity(), CIRCLE, Point.from_floats([0.4]), 0.0, 100)


# --- cross-module consistency -----------------------------------------------

def test_sbc_increment_equals_single_step_estimate():
    # the mean hit-count increment between checkpoints k-1 and k across seeds
    # equals the single-step estimator run on the same start points.
    seq = power_targets(1.0, 0.9, 40)
    n_seeds = 4000
    res = run_sbc(CAT, lebesgue(), TORUS2, seq, 40, n_seeds, [39, 40], 99)
    inc = (res.hit_counts[:, 1] - res.hit_counts[:, 0]).mean()
    est = estimate_E_measure(CAT, lebesgue(), TORUS2, seq, 40, n_seeds,
                             seed_stream(99, 10 ** 6), points=res.start_coords)
    assert inc == pytest.approx(est.mu_hat, abs=1e-12)
