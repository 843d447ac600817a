"""Volume rendering weights and the surface reconstruction losses."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .sampler import Band
from .scene_grid import sigmoid_cdf


def compute_alphas(sdf_values, s: float) -> np.ndarray:
    """Discrete opacity between consecutive ray points (one fewer than the points)."""
    sdf = np.asarray(sdf_values, dtype=np.float64)
    if sdf.shape[-1] < 2:
        raise ValueError("need at least two ray points")
    cdf = sigmoid_cdf(sdf, s)
    prev, nxt = cdf[..., :-1], cdf[..., 1:]
    return np.clip((prev - nxt) / prev, 0.0, 1.0)


def compute_weights(alphas, inclusive: bool = False) -> np.ndarray:
    """``w_i = alpha_i * prod_{j<i} (1 - alpha_j)``.

    ``inclusive=True`` also multiplies in ``(1 - alpha_i)``.
    """
    a = np.asarray(alphas, dtype=np.float64)
    keep = np.cumprod(1.0 - a, axis=-1)
    if inclusive:
        return a * keep
    trans = np.ones_like(a)
    trans[..., 1:] = keep[..., :-1]
    return a * trans


@dataclass(frozen=True)
class RayEvaluation:
    sdf_values: np.ndarray
    weights: np.ndarray
    bands: np.ndarray
    is_background: bool = False

    def __post_init__(self):
        if len(self.sdf_values) != len(self.weights):
            raise ValueError("weights and sdf values differ in length")
        if not self.is_background and len(self.bands) != len(self.sdf_values):
            raise ValueError("every foreground ray point needs a band tag")


def evaluate_ray(sdf_values, bands, s: float, is_background: bool = False,
                 inclusive: bool = False) -> RayEvaluation:
    """Weights for points sorted by ray distance; the last point gets zero weight."""
    sdf = np.asarray(sdf_values, dtype=np.float64)
    w = np.zeros_like(sdf)
    w[:-1] = compute_weights(compute_alphas(sdf, s), inclusive)
    return RayEvaluation(sdf, w, np.asarray(bands), is_background)


def near_surface_loss(rays: Sequence[RayEvaluation]) -> float:
    total = 0.0
    for r in rays:
        if r.is_background:
            continue
        m = r.bands == Band.NEAR
        total += float(np.sum(np.abs(r.sdf_values[m]) * r.weights[m]))
    return total / len(rays)


def empty_space_loss(rays: Sequence[RayEvaluation], epsilon: float = 1e-3) -> float:
    total = 0.0
    for r in rays:
        if r.is_background:
            continue
        m = r.bands == Band.EMPTY
        total += float(np.sum(((r.sdf_values[m] - epsilon) * r.weights[m]) ** 2))
    return total / len(rays)


def background_loss(rays: Sequence[RayEvaluation], beta: float = 10.0) -> float:
    total = 0.0
    for r in rays:
        if r.is_background:
            total += float(np.sum(np.exp(-beta * np.abs(r.sdf_values)) * r.weights))
    return total / len(rays)


@dataclass(frozen=True)
class SurfaceLossReport:
    near: float
    empty: float
    background: float
    total: float
    rays: int
    lambda1: float
    lambda2: float
    epsilon: float
    beta: float

    def to_dict(self) -> dict:
        return {
            "near": self.near,
            "empty": self.empty,
            "background": self.background,
            "total": self.total,
            "rays": self.rays,
            "params": {"lambda1": self.lambda1, "lambda2": self.lambda2,
                       "epsilon": self.epsilon, "beta": self.beta},
        }


def combine(near: float, empty: float, background: float, lambda1: float = 0.5,
            lambda2: float = 0.5) -> float:
    return lambda1 * near + lambda2 * (empty + background)


def total_surface_loss(rays: Sequence[RayEvaluation], lambda1: float = 0.5, lambda2: float = 0.5,
                       epsilon: float = 1e-3, beta: float = 10.0) -> SurfaceLossReport:
    if not rays:
        raise ValueError("no rays to evaluate")
    near = near_surface_loss(rays)
    empty = empty_space_loss(rays, epsilon)
    bg = background_loss(rays, beta)
    return SurfaceLossReport(near, empty, bg, combine(near, empty, bg, lambda1, lambda2), len(rays),
                             lambda1, lambda2, epsilon, beta)
