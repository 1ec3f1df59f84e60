"""Observables with declared smoothness data for correlation estimates.

Each observable carries the Hölder exponent and a norm bound alongside its
evaluator, plus the exact mean where one is available, so correlation
estimators can subtract true means instead of doubling their Monte Carlo
noise.  Trigonometric waves have mean zero by orthogonality; the distance to
a fixed point has a closed-form mean on chebyshev tori.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import RejectedInputError
from .phase import CHEBYSHEV, Point, SpaceSpec, distances_fixed, floats_to_fixed

__all__ = ["Observable", "cosine_wave", "sine_wave", "distance_to_point", "constant"]


@dataclass(frozen=True)
class Observable:
    name: str
    fn: Callable[[np.ndarray], np.ndarray]  # (S, N) float coords -> (S,)
    holder_theta: float  # Hölder exponent in (0, 1]
    holder_norm: float  # bound on the theta-Hölder norm (seminorm + sup)
    exact_mean: float | None = None

    def __call__(self, coords_f: np.ndarray) -> np.ndarray:
        return self.fn(coords_f)


def cosine_wave(freq) -> Observable:
    """cos(2 pi <freq, x>) for a nonzero integer frequency vector: mean 0,
    Lipschitz constant 2 pi |freq|_1, sup 1."""
    k = np.asarray(freq, dtype=np.int64)
    if k.ndim != 1 or not k.any():
        raise RejectedInputError("frequency must be a nonzero integer vector")
    norm = float(2.0 * np.pi * np.abs(k).sum() + 1.0)
    return Observable(
        f"cos2pi<{','.join(map(str, k.tolist()))},x>",
        lambda x: np.cos(2.0 * np.pi * (x @ k.astype(np.float64))),
        1.0,
        norm,
        exact_mean=0.0,
    )


def sine_wave(freq) -> Observable:
    k = np.asarray(freq, dtype=np.int64)
    if k.ndim != 1 or not k.any():
        raise RejectedInputError("frequency must be a nonzero integer vector")
    norm = float(2.0 * np.pi * np.abs(k).sum() + 1.0)
    return Observable(
        f"sin2pi<{','.join(map(str, k.tolist()))},x>",
        lambda x: np.sin(2.0 * np.pi * (x @ k.astype(np.float64))),
        1.0,
        norm,
        exact_mean=0.0,
    )


def distance_to_point(space: SpaceSpec, y: Point) -> Observable:
    """d(x, y): 1-Lipschitz; exact mean diameter/2 per axis-independence on
    chebyshev... only the circle admits the simple closed form 1/4, so the
    exact mean is attached for N=1 and left to the estimator otherwise."""
    yc = y.coords.copy()

    def fn(x: np.ndarray) -> np.ndarray:
        return distances_fixed(space, floats_to_fixed(x), yc[None, :])

    mean = 0.25 if (space.dimension == 1 and space.metric == CHEBYSHEV) else None
    return Observable(f"dist-to-{y!r}", fn, 1.0, float(space.diameter + 1.0), mean)


def constant(value: float) -> Observable:
    """Constant observable: every correlation against it is exactly zero."""
    v = float(value)
    return Observable(f"const({v})", lambda x: np.full(x.shape[0], v), 1.0, abs(v), v)
