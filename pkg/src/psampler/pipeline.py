"""Grid building, on-disk artifacts and loss evaluation shared by the CLI."""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .config import RunConfig
from .errors import ConfigError
from .geometry import Camera, CameraBounds, SceneBoundary, compute_bounds
from .gridio import KIND_CAMERA, KIND_SCENE, read_grid, write_grid
from .image_grid import CameraGrid, build_camera_grid
from .losses import RayEvaluation, evaluate_ray, total_surface_loss
from .sampler import Band, RayBatch, Source
from .scene_grid import SceneGrid, build_scene_grid

SCENE_DUMP = "scene.psgd"
SAMPLE_COLUMNS = ("camera_id", "source", "u", "v", "lambda", "px", "py", "ox", "oy", "oz", "dx", "dy",
                  "dz")


def camera_dump_name(camera_id: int) -> str:
    return f"camera_{camera_id:03d}.psgd"


def resolve_threads(threads: Optional[int] = None) -> int:
    """``threads`` if given, else ``PS_SAMPLER_THREADS``, else the CPU count."""
    if threads is None:
        env = os.environ.get("PS_SAMPLER_THREADS")
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ConfigError(f"PS_SAMPLER_THREADS must be an integer, got {env!r}") from None
    if threads is None:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise ConfigError("thread count must be >= 1")
    return threads


@dataclass(frozen=True)
class CameraBuild:
    grid: CameraGrid
    raw_mass: float
    seconds: float


@dataclass(frozen=True)
class GridSet:
    scene: SceneGrid
    cameras: list  # CameraBuild per camera, in rig order


def _build_one(scene_grid: SceneGrid, cam: Camera, camera_id: int, boundary: SceneBoundary,
               cfg: RunConfig, backend) -> CameraBuild:
    t0 = time.perf_counter()
    bounds = compute_bounds(cam, boundary)
    grid = build_camera_grid(scene_grid, cam, bounds, cfg.camera_resolution, cfg.partition_factor,
                             camera_id=camera_id, view_dependency=cfg.view_dependency,
                             density_scale=cfg.density_scale, inclusive=cfg.inclusive_transmittance,
                             backend=backend)
    return CameraBuild(grid, float(grid.raw_prob.sum()), time.perf_counter() - t0)


def build_grids(sdf, boundary: SceneBoundary, cameras: Sequence[Camera], cfg: RunConfig,
                threads: Optional[int] = None, backend: Optional[str] = None) -> GridSet:
    """Scene grid plus one normalized camera grid per camera.

    Cameras are built concurrently; each build is independent so the result
    does not depend on the thread count.
    """
    scene_grid = build_scene_grid(sdf, boundary, cfg.scene_resolution, cfg.s)
    n = resolve_threads(threads if threads is not None else cfg.threads)
    jobs = [(scene_grid, cam, i, boundary, cfg, backend) for i, cam in enumerate(cameras)]
    if n == 1 or len(jobs) < 2:
        builds = [_build_one(*j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            builds = list(pool.map(lambda j: _build_one(*j), jobs))
    return GridSet(scene_grid, builds)


def write_grid_set(out_dir, grids: GridSet) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / SCENE_DUMP]
    write_grid(paths[0], KIND_SCENE, grids.scene.cell_prob, grids.scene.bounds_array())
    for b in grids.cameras:
        p = out / camera_dump_name(b.grid.camera_id)
        write_grid(p, KIND_CAMERA, b.grid.viewdep_prob, b.grid.bounds.as_array())
        paths.append(p)
    return paths


def load_camera_grid(path, camera_id: int) -> CameraGrid:
    dump = read_grid(path)
    if dump.kind != KIND_CAMERA:
        raise ValueError(f"{path} is not a camera grid")
    p = dump.data.astype(np.float64)
    return CameraGrid(camera_id, CameraBounds.from_array(dump.bounds), p, viewdep_prob=p,
                      normalized=True)


def refresh_step(step: int, interval: int) -> int:
    """Step at which the grids in use at ``step`` were last rebuilt."""
    if step < 0:
        raise ValueError("step must be non-negative")
    return (step // interval) * interval


class GridRefresher:
    """Rebuilds the grids every ``refresh_interval`` steps from the SDF current at that step.

    ``sdf_at(step)`` supplies the SDF; it is only queried at refresh steps,
    so every step inside one window sees the same grids.
    """

    def __init__(self, sdf_at: Callable[[int], object], boundary: SceneBoundary,
                 cameras: Sequence[Camera], cfg: RunConfig, threads: Optional[int] = None,
                 backend: Optional[str] = None):
        self.sdf_at = sdf_at
        self.boundary = boundary
        self.cameras = list(cameras)
        self.cfg = cfg
        self.threads = threads
        self.backend = backend
        self._built_at: Optional[int] = None
        self._grids: Optional[GridSet] = None
        self.rebuilds = 0

    def grids_for(self, step: int) -> GridSet:
        at = refresh_step(step, self.cfg.refresh_interval)
        if at != self._built_at:
            self._grids = build_grids(self.sdf_at(at), self.boundary, self.cameras, self.cfg,
                                      self.threads, self.backend)
            self._built_at = at
            self.rebuilds += 1
        return self._grids


def _fmt(x) -> str:
    return repr(float(x))


def write_samples(path, batch: RayBatch) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SAMPLE_COLUMNS)
        for i in range(len(batch)):
            src = "guided" if batch.source[i] == Source.GUIDED else "uniform"
            w.writerow([int(batch.camera_id[i]), src, *map(_fmt, batch.uvl[i]),
                        *map(_fmt, batch.pixel[i]), *map(_fmt, batch.origin[i]),
                        *map(_fmt, batch.direction[i])])


def write_points(path, batch: RayBatch) -> None:
    """``ray,t,band`` rows; band is near, empty or background."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ray", "t", "band"])
        for i in range(len(batch)):
            bg = bool(batch.is_background[i])
            for t, near in zip(batch.t[i], batch.near[i]):
                band = "background" if bg else ("near" if near else "empty")
                w.writerow([i, _fmt(t), band])


@dataclass(frozen=True)
class LoadedRays:
    origin: np.ndarray  # (M, 3)
    direction: np.ndarray
    t: list  # per-ray arrays of ray distances
    bands: list  # per-ray Band arrays (empty for background rays)
    is_background: np.ndarray


def read_rays(samples_path, points_path) -> LoadedRays:
    with open(samples_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and tuple(rows[0].keys()) != SAMPLE_COLUMNS:
        raise ValueError(f"{samples_path}: unexpected columns")
    origin = np.array([[float(r["ox"]), float(r["oy"]), float(r["oz"])] for r in rows]).reshape(-1, 3)
    direction = np.array([[float(r["dx"]), float(r["dy"]), float(r["dz"])] for r in rows]).reshape(-1, 3)
    m = len(rows)
    ts = [[] for _ in range(m)]
    bands = [[] for _ in range(m)]
    bg = np.zeros(m, dtype=bool)
    with open(points_path, newline="") as fh:
        for r in csv.DictReader(fh):
            i = int(r["ray"])
            if not 0 <= i < m:
                raise ValueError(f"{points_path}: ray index {i} out of range")
            ts[i].append(float(r["t"]))
            if r["band"] == "background":
                bg[i] = True
            else:
                bands[i].append(Band.NEAR if r["band"] == "near" else Band.EMPTY)
    return LoadedRays(origin, direction, [np.array(t) for t in ts],
                      [np.array(b, dtype=np.int64) for b in bands], bg)


def evaluate_rays(sdf, rays: LoadedRays, s: float, inclusive: bool = False) -> list[RayEvaluation]:
    out = []
    for i in range(len(rays.t)):
        pts = rays.origin[i] + rays.t[i][:, None] * rays.direction[i]
        out.append(evaluate_ray(sdf(pts), rays.bands[i], s, bool(rays.is_background[i]), inclusive))
    return out


def loss_report(sdf, rays: LoadedRays, cfg: RunConfig) -> dict:
    evals = evaluate_rays(sdf, rays, cfg.s, cfg.inclusive_weights)
    rep = total_surface_loss(evals, cfg.lambda1, cfg.lambda2, cfg.epsilon, cfg.beta).to_dict()
    rep["surf_weight"] = cfg.surf_weight
    rep["weighted_total"] = cfg.surf_weight * rep["total"]
    rep["background_rays"] = int(rays.is_background.sum())
    return rep
