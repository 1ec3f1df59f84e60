"""Observables: evaluators, smoothness metadata, exact means."""

import math

import numpy as np
import pytest

from reclab.errors import RejectedInputError
from reclab.observables import constant, cosine_wave, distance_to_point, sine_wave
from reclab.phase import CHEBYSHEV, EUCLIDEAN, Point, SpaceSpec

CIRCLE = SpaceSpec(dimension=1, metric=CHEBYSHEV)


def test_wave_values_and_metadata():
    f = cosine_wave([2])
    x = np.array([[0.0], [0.25], [0.125]])
    assert np.allclose(f(x), [1.0, -1.0, 0.0], atol=1e-15)
    assert f.exact_mean == 0.0
    assert f.holder_theta == 1.0
    assert f.holder_norm >= 2 * math.pi * 2
    g = sine_wave([1, -1])
    y = np.array([[0.25, 0.0]])
    assert np.allclose(g(y), [1.0])


def test_wave_rejects_zero_frequency():
    with pytest.raises(RejectedInputError):
        cosine_wave([0])
    with pytest.raises(RejectedInputError):
        sine_wave([0, 0])
    with pytest.raises(RejectedInputError):
        cosine_wave([[1, 0]])


def test_empirical_means_match_declared_means():
    rng = np.random.default_rng(0)
    x = rng.random((200_000, 1))
    for obs in (cosine_wave([1]), sine_wave([3]), distance_to_point(CIRCLE, Point.from_floats([0.5]))):
        se = 5.0 / math.sqrt(200_000)
        assert abs(float(obs(x).mean()) - obs.exact_mean) < se


def test_distance_observable():
    obs = distance_to_point(CIRCLE, Point.from_floats([0.0]))
    vals = obs(np.array([[0.1], [0.9], [0.5]]))
    assert np.allclose(vals, [0.1, 0.1, 0.5], atol=1e-12)
    assert obs.exact_mean == 0.25
    # no closed-form mean is claimed off the circle
    obs2 = distance_to_point(SpaceSpec(dimension=2, metric=EUCLIDEAN), Point.from_floats([0.5, 0.5]))
    assert obs2.exact_mean is None


def test_constant_observable():
    obs = constant(3.0)
    assert np.all(obs(np.zeros((5, 2))) == 3.0)
    assert obs.exact_mean == 3.0
    assert obs.name == "const(3.0)"
