"""Conditional inverse-transform sampling of (u, v, lambda) and ray point generation.

A normalized camera grid is factored into a marginal over ``u``, a
conditional over ``v`` given ``u`` and a conditional over ``lambda`` given
``(u, v)``. Draws are continuous: a chosen cell is filled uniformly.
Depths for given pixel positions blend the ``lambda`` rows of the four
bracketing ``(u, v)`` columns bilinearly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DegenerateDistribution
from .geometry import Camera, CameraBounds, SceneBoundary, ray_from_sample
from .image_grid import CameraGrid


class _OutOfSurface:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "OUT_OF_SURFACE"

    def __bool__(self):
        return False


OUT_OF_SURFACE = _OutOfSurface()


class Band(enum.IntEnum):
    NEAR = 0
    EMPTY = 1


class Source(enum.IntEnum):
    GUIDED = 0
    UNIFORM = 1


@dataclass(frozen=True)
class MarginalTables:
    bounds: CameraBounds
    marginal_u: np.ndarray  # (Ru,)
    marginal_v_given_u: np.ndarray  # (Ru, Rv)
    conditional_lambda: np.ndarray  # (Ru, Rv, Rl)
    defined_u: np.ndarray  # (Ru,) bool
    defined_uv: np.ndarray  # (Ru, Rv) bool
    cdf_u: np.ndarray = field(repr=False, default=None)
    cdf_v: np.ndarray = field(repr=False, default=None)
    cdf_lambda: np.ndarray = field(repr=False, default=None)

    @property
    def resolution(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.conditional_lambda.shape)

    def widths(self) -> np.ndarray:
        b = self.bounds.as_array()
        return np.array([(b[1] - b[0]), (b[3] - b[2]), (b[5] - b[4])]) / np.array(self.resolution)

    def joint(self) -> np.ndarray:
        """Product of the factors; equals the normalized grid."""
        return self.marginal_u[:, None, None] * self.marginal_v_given_u[:, :, None] * self.conditional_lambda


def _row_normalize(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    total = a.sum(axis=-1, keepdims=True)
    defined = total[..., 0] > 0
    out = np.divide(a, total, out=np.zeros_like(a), where=total > 0)
    return out, defined


def _cdf(rows: np.ndarray) -> np.ndarray:
    c = np.cumsum(rows, axis=-1)
    return np.ascontiguousarray(c.reshape(-1, rows.shape[-1]))


def build_tables(grid: CameraGrid) -> MarginalTables:
    p = grid.viewdep_prob if grid.viewdep_prob is not None else grid.raw_prob
    total = float(p.sum())
    if not total > 0:
        raise DegenerateDistribution(f"camera {grid.camera_id}: grid has zero total mass")
    Ru, Rv, Rl = p.shape
    p_u = p.sum(axis=(1, 2)) / (Rv * Rl)
    marginal_u = p_u / p_u.sum()
    defined_u = p_u > 0
    p_vl_given_u = np.divide(p, p_u[:, None, None], out=np.zeros_like(p), where=defined_u[:, None, None])
    p_v_given_u = p_vl_given_u.sum(axis=2) / Rl
    p_l_given_uv = np.divide(p_vl_given_u, p_v_given_u[:, :, None], out=np.zeros_like(p),
                             where=p_v_given_u[:, :, None] > 0)
    marginal_v, _ = _row_normalize(p_v_given_u)
    cond_l, defined_uv = _row_normalize(p_l_given_uv)
    return MarginalTables(
        grid.bounds, marginal_u, marginal_v, cond_l, defined_u, defined_uv,
        cdf_u=_cdf(marginal_u[None, :]), cdf_v=_cdf(marginal_v), cdf_lambda=_cdf(cond_l),
    )


def _bracket(x, lo, width, n):
    """Indices of the two cell centers around ``x`` and the weight of the upper one."""
    c = (x - lo) / width - 0.5
    i0 = np.floor(c)
    a = c - i0
    i0 = i0.astype(np.int64)
    i1 = i0 + 1
    return np.clip(i0, 0, n - 1), np.clip(i1, 0, n - 1), a


def _normalize_weights(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = w.sum(axis=1)
    ok = s > 0
    out = np.divide(w, s[:, None], out=np.zeros_like(w), where=ok[:, None])
    return out, ok


def _draw(kern, cdf, rows, weights, xi):
    n = xi.shape[0]
    bins = np.empty(n, dtype=np.int64)
    frac = np.empty(n, dtype=np.float64)
    kern.sample_blended(cdf, np.ascontiguousarray(rows, dtype=np.int64),
                        np.ascontiguousarray(weights, dtype=np.float64),
                        np.ascontiguousarray(xi, dtype=np.float64), bins, frac)
    return bins, frac


def _lambda_rows(tables, u, v):
    Ru, Rv, _ = tables.resolution
    b = tables.bounds.as_array()
    wu, wv, _ = tables.widths()
    i0, i1, a = _bracket(u, b[0], wu, Ru)
    j0, j1, c = _bracket(v, b[2], wv, Rv)
    rows = np.stack([i0 * Rv + j0, i1 * Rv + j0, i0 * Rv + j1, i1 * Rv + j1], axis=1)
    w = np.stack([(1 - a) * (1 - c), a * (1 - c), (1 - a) * c, a * c], axis=1)
    w = w * tables.defined_uv.reshape(-1)[rows]
    w, ok = _normalize_weights(w)
    return rows, w, ok


def sample_guided(tables: MarginalTables, n: int, seed=None, *, interpolate: bool = False,
                  backend: str | None = None) -> np.ndarray:
    """Draw ``n`` points ``[u, v, lambda]`` from the view-dependent grid distribution.

    By default each conditional is taken from the column the previous draw
    landed in, which reproduces the grid's cell probabilities exactly. With
    ``interpolate=True`` the ``v`` row is blended linearly between the two
    bracketing ``u`` columns and the ``lambda`` row bilinearly between the four
    bracketing ``(u, v)`` columns; that smooths the draws across cell borders
    at the price of leaking mass into neighbouring cells.
    """
    kern = kernels.get(backend)
    rng = np.random.default_rng(seed)
    xi = rng.random((n, 3))
    Ru, Rv, Rl = tables.resolution
    b = tables.bounds.as_array()
    wu, wv, wl = tables.widths()
    one = np.ones((n, 1))

    bu, fu = _draw(kern, tables.cdf_u, np.zeros((n, 1), dtype=np.int64), one, xi[:, 0])
    u = b[0] + (bu + fu) * wu

    if interpolate:
        i0, i1, a = _bracket(u, b[0], wu, Ru)
        w = np.stack([1 - a, a], axis=1) * tables.defined_u[np.stack([i0, i1], axis=1)]
        w, ok = _normalize_weights(w)
        if not ok.all():
            raise DegenerateDistribution("u sample fell outside every populated column")
        bv, fv = _draw(kern, tables.cdf_v, np.stack([i0, i1], axis=1), w, xi[:, 1])
    else:
        bv, fv = _draw(kern, tables.cdf_v, bu[:, None], one, xi[:, 1])
    v = b[2] + (bv + fv) * wv

    own = (bu * Rv + bv)[:, None]
    if interpolate:
        rows, w, ok = _lambda_rows(tables, u, v)
        if not ok.all():
            # only reachable through rounding at a cell border: use the cell's own column
            rows[~ok] = own[~ok]
            w[~ok] = np.array([1.0, 0.0, 0.0, 0.0])
    else:
        rows, w = own, one
    bl, fl = _draw(kern, tables.cdf_lambda, rows, w, xi[:, 2])
    lam = b[4] + (bl + fl) * wl
    return np.stack([u, v, lam], axis=1)


def sample_depths(tables: MarginalTables, u, v, seed=None, *, backend: str | None = None) -> np.ndarray:
    """Depth draws at given ``(u, v)``; NaN where the pixel's own column is empty."""
    kern = kernels.get(backend)
    rng = np.random.default_rng(seed)
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    xi = rng.random(u.shape[0])
    Ru, Rv, _ = tables.resolution
    b = tables.bounds.as_array()
    wu, wv, wl = tables.widths()
    inside = (u >= b[0]) & (u <= b[1]) & (v >= b[2]) & (v <= b[3])
    iu = np.clip(np.floor((u - b[0]) / wu), 0, Ru - 1).astype(np.int64)
    iv = np.clip(np.floor((v - b[2]) / wv), 0, Rv - 1).astype(np.int64)
    valid = inside & tables.defined_uv[iu, iv]
    out = np.full(u.shape[0], np.nan)
    if valid.any():
        rows, w, _ = _lambda_rows(tables, u[valid], v[valid])
        bl, fl = _draw(kern, tables.cdf_lambda, rows, w, xi[valid])
        out[valid] = b[4] + (bl + fl) * wl
    return out


def sample_depth_for_pixel(tables: MarginalTables, u: float, v: float, seed=None):
    """Single depth draw, or ``OUT_OF_SURFACE`` for a background pixel."""
    lam = sample_depths(tables, [u], [v], seed)[0]
    return OUT_OF_SURFACE if np.isnan(lam) else float(lam)


@dataclass(frozen=True)
class MixSchedule:
    total_steps: int
    phase_fractions: tuple = (0.20, 0.40, 0.60, 0.80)

    def __post_init__(self):
        fr = tuple(float(f) for f in self.phase_fractions)
        if not fr or any(f < 0 or f > 1 for f in fr) or any(b < a for a, b in zip(fr, fr[1:])):
            raise ValueError("phase fractions must be non-decreasing values in [0, 1]")
        if self.total_steps < 1:
            raise ValueError("total_steps must be positive")
        object.__setattr__(self, "phase_fractions", fr)


def mix_fraction(schedule: MixSchedule, step: int) -> float:
    """Fraction of rays drawn uniformly over the image at ``step``."""
    if not 0 <= step <= schedule.total_steps:
        raise ValueError(f"step {step} outside [0, {schedule.total_steps}]")
    P = len(schedule.phase_fractions)
    return schedule.phase_fractions[min(step * P // schedule.total_steps, P - 1)]


def uniform_count(n_rays: int, fraction: float) -> int:
    """``round(n_rays * fraction)`` with halves rounded up."""
    return int(math.floor(n_rays * fraction + 0.5))


def near_sigma(s: float) -> float:
    """Standard deviation of the normal approximation to the logistic of scale ``s``."""
    return math.pi / (math.sqrt(3.0) * s)


MAX_REDRAWS = 100


@dataclass(frozen=True)
class RayPoints:
    t: np.ndarray  # ray distances, sorted
    near: np.ndarray  # bool

    @property
    def bands(self) -> np.ndarray:
        return np.where(self.near, Band.NEAR, Band.EMPTY)


def gaussian_ray_distances(center, s: float, n: int, rng, min_distance=1e-6) -> np.ndarray:
    """``(len(center), n)`` normal draws around ``center``; non-positive draws are redrawn.

    Draws still non-positive after ``MAX_REDRAWS`` rounds are clamped to ``min_distance``
    (scalar or one value per center).
    """
    center = np.atleast_1d(np.asarray(center, dtype=np.float64))
    floor = np.broadcast_to(np.asarray(min_distance, dtype=np.float64).reshape(-1, 1), (center.shape[0], n))
    sigma = near_sigma(s)
    t = rng.normal(center[:, None], sigma, size=(center.shape[0], n))
    for _ in range(MAX_REDRAWS):
        bad = t <= 0
        if not bad.any():
            break
        t[bad] = rng.normal(np.broadcast_to(center[:, None], t.shape)[bad], sigma)
    else:
        t = np.where(t <= 0, floor, t)
    return np.sort(t, axis=1)


def sample_ray_points(lam: float, s: float, n: int = 32, seed=None, min_distance: float = 1e-6) -> RayPoints:
    """Normal draws around ``lam`` with standard deviation ``pi / (sqrt(3) s)``.

    Points within three standard deviations are tagged near-surface.
    """
    if not s > 0:
        raise ValueError("logistic scale s must be positive")
    rng = np.random.default_rng(seed)
    t = gaussian_ray_distances([lam], s, n, rng, min_distance)[0]
    return RayPoints(t, np.abs(t - lam) <= 3.0 * near_sigma(s))


@dataclass(frozen=True)
class RaySample:
    camera_id: int
    source: Source
    u: float
    v: float
    lam: float  # z-depth, NaN for a background ray
    pixel: tuple
    origin: np.ndarray
    direction: np.ndarray
    depth: float  # distance along the ray, NaN for a background ray
    is_background: bool
    points: RayPoints


@dataclass
class RayBatch:
    """Column-oriented batch of sampled rays."""

    camera_id: np.ndarray
    source: np.ndarray
    uvl: np.ndarray  # (M, 3); lambda is NaN for background rays
    pixel: np.ndarray  # (M, 2)
    origin: np.ndarray
    direction: np.ndarray
    depth: np.ndarray
    is_background: np.ndarray
    t: np.ndarray  # (M, n_points)
    near: np.ndarray  # (M, n_points)

    def __len__(self):
        return self.camera_id.shape[0]

    def __getitem__(self, i) -> RaySample:
        return RaySample(
            int(self.camera_id[i]), Source(int(self.source[i])), float(self.uvl[i, 0]),
            float(self.uvl[i, 1]), float(self.uvl[i, 2]), tuple(self.pixel[i]), self.origin[i],
            self.direction[i], float(self.depth[i]), bool(self.is_background[i]),
            RayPoints(self.t[i], self.near[i]),
        )

    def points(self, i) -> np.ndarray:
        return self.origin[i] + self.t[i][:, None] * self.direction[i]


def sample_uniform_pixels(cam: Camera, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Pixel centers drawn uniformly over the image."""
    px = rng.integers(0, cam.width, size=n) + 0.5
    py = rng.integers(0, cam.height, size=n) + 0.5
    return px, py


def sample_rays(cameras: Sequence[Camera], tables: Sequence[MarginalTables], n_rays: int, step: int,
                schedule: MixSchedule, s: float, boundary: SceneBoundary, seed: int = 0,
                n_points: int = 32, *, interpolate: bool = False,
                backend: str | None = None) -> RayBatch:
    """Mixed guided/uniform batch of rays with attached ray points.

    Randomness is split per camera with ``default_rng([seed, camera_id, k])``
    so the result does not depend on how cameras are scheduled.
    """
    rng = np.random.default_rng(seed)
    C = len(cameras)
    cam_ids = rng.integers(0, C, size=n_rays)
    n_uniform = uniform_count(n_rays, mix_fraction(schedule, step))
    source = np.full(n_rays, Source.GUIDED, dtype=np.int64)
    source[rng.permutation(n_rays)[:n_uniform]] = Source.UNIFORM

    uvl = np.full((n_rays, 3), np.nan)
    pixel = np.zeros((n_rays, 2))
    origin = np.zeros((n_rays, 3))
    direction = np.zeros((n_rays, 3))
    depth = np.full(n_rays, np.nan)
    min_depth = np.zeros(n_rays)
    far_depth = np.zeros(n_rays)
    for c, cam in enumerate(cameras):
        tab = tables[c]
        lam_lo, lam_hi = tab.bounds.lambda_range
        guided = np.flatnonzero((cam_ids == c) & (source == Source.GUIDED))
        uniform = np.flatnonzero((cam_ids == c) & (source == Source.UNIFORM))
        if guided.size:
            uvl[guided] = sample_guided(tab, guided.size, [seed, c, 0], interpolate=interpolate,
                                         backend=backend)
        if uniform.size:
            crng = np.random.default_rng([seed, c, 1])
            px, py = sample_uniform_pixels(cam, uniform.size, crng)
            u, v = cam.pixel_to_uv(px, py)
            uvl[uniform, 0], uvl[uniform, 1] = u, v
            uvl[uniform, 2] = sample_depths(tab, u, v, [seed, c, 2], backend=backend)
        idx = np.concatenate([guided, uniform])
        if not idx.size:
            continue
        pu, pv = cam.uv_to_pixel(uvl[idx, 0], uvl[idx, 1])
        pixel[idx, 0], pixel[idx, 1] = pu, pv
        # directions are defined for background rays too: use unit z-depth
        lam = np.where(np.isnan(uvl[idx, 2]), 1.0, uvl[idx, 2])
        o, d, dist = ray_from_sample(cam, np.stack([uvl[idx, 0], uvl[idx, 1], lam], axis=1))
        origin[idx], direction[idx] = o, d
        stretch = dist / lam  # ray distance per unit z-depth
        depth[idx] = np.where(np.isnan(uvl[idx, 2]), np.nan, dist)
        min_depth[idx] = lam_lo * stretch
        far_depth[idx] = lam_hi * stretch

    inside = np.zeros(n_rays, dtype=bool)
    fg = ~np.isnan(depth)
    inside[fg] = boundary.contains(origin[fg] + depth[fg, None] * direction[fg])
    is_background = ~inside

    prng = np.random.default_rng([seed, C, 3])
    t = np.empty((n_rays, n_points))
    near = np.zeros((n_rays, n_points), dtype=bool)
    if inside.any():
        t[inside] = gaussian_ray_distances(depth[inside], s, n_points, prng, min_depth[inside])
        near[inside] = np.abs(t[inside] - depth[inside, None]) <= 3.0 * near_sigma(s)
    bg = is_background
    if bg.any():
        mids = (np.arange(n_points) + 0.5) / n_points
        t[bg] = min_depth[bg, None] + mids[None, :] * (far_depth[bg] - min_depth[bg])[:, None]
    return RayBatch(cam_ids, source, uvl, pixel, origin, direction, depth, is_background, t, near)
