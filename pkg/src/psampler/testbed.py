"""Scene descriptions, shipped fixtures and brute-force reference computations.

The Monte Carlo oracle here deliberately avoids the projection kernel and
the binning helpers of :mod:`psampler.image_grid`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import stats

from .errors import ConfigError
from .geometry import Camera, CameraBounds, SceneBoundary, load_rig
from .sdf import Slab, Sphere, Union, sdf_from_dict, union_of

FIXTURES = ("sphere.json", "two_walls.json", "box_union.json")


@dataclass(frozen=True)
class Scene:
    boundary: SceneBoundary
    sdf: Optional[object]
    cameras: list
    path: Optional[Path] = None

    def sdf_or_init(self):
        """The scene SDF, or the boundary sphere used before any SDF is available."""
        return self.sdf if self.sdf is not None else initial_sphere(self.boundary)


def initial_sphere(boundary: SceneBoundary) -> Sphere:
    if boundary.kind == "sphere":
        return Sphere(tuple(boundary.center), boundary.radius)
    return Sphere(tuple(boundary.center), float(boundary.half_extents.min()))


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("psampler") / "fixtures" / name))


def load_scene(path, cameras_path=None) -> Scene:
    """Load a JSON scene: ``boundary``, optional ``shapes`` and a camera rig.

    ``cameras`` may be an inline list or a path relative to the scene file;
    ``cameras_path`` overrides it.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"scene file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    boundary = SceneBoundary.from_dict(data.get("boundary", {"type": "sphere", "radius": 1.0}))
    shapes = data.get("shapes") or []
    sdf = union_of([sdf_from_dict(d, path.parent) for d in shapes]) if shapes else None
    if cameras_path is not None:
        cameras = load_rig(cameras_path)
    else:
        cams = data.get("cameras")
        if cams is None:
            raise ConfigError(f"{path}: no camera rig given")
        if isinstance(cams, str):
            cams_path = Path(cams)
            if not cams_path.is_absolute():
                cams_path = path.parent / cams_path
            cameras = load_rig(cams_path)
        else:
            cameras = [Camera.from_dict(c) for c in cams]
    return Scene(boundary, sdf, cameras, path)


def load_fixture(name: str) -> Scene:
    return load_scene(fixture_path(name))


@dataclass(frozen=True)
class TwoWallScene:
    sdf: Union
    camera: Camera
    boundary: SceneBoundary
    front_depth: float
    back_depth: float
    thickness: float


def two_wall_scene(front_depth: float = 2.0, back_depth: float = 3.0, thickness: float = 0.2,
                   boundary_radius: float = 4.0, image_size: int = 64,
                   focal: float = 32.0) -> TwoWallScene:
    """Two parallel walls facing an on-axis camera at known depths.

    The camera looks along world +z from ``z = -(front + back) / 2`` so the
    walls sit symmetrically about the origin.
    """
    z_cam = -(front_depth + back_depth) / 2.0
    cam = Camera(np.eye(3), [0.0, 0.0, z_cam], focal, focal, image_size / 2.0, image_size / 2.0,
                 image_size, image_size)
    sdf = Union((Slab(2, z_cam + front_depth, thickness), Slab(2, z_cam + back_depth, thickness)))
    return TwoWallScene(sdf, cam, SceneBoundary.sphere(boundary_radius), front_depth, back_depth,
                        thickness)


def brute_force_camera_pdf(sdf, cam: Camera, bounds: CameraBounds, resolution, n_mc: int, s: float,
                           region: SceneBoundary, seed=0, chunk: int = 1 << 18) -> np.ndarray:
    """Monte Carlo estimate of the camera-space density integrated over each cell.

    Points are drawn uniformly in the axis-aligned box of ``region``; each is
    weighted by its logistic density, the inverse squared depth and the box
    volume over ``n_mc``, then histogrammed by its image-space coordinates.
    """
    if n_mc < 100_000:
        raise ValueError("n_mc must be at least 1e5")
    lo, hi = region.aabb()
    volume = float(np.prod(hi - lo))
    rng = np.random.default_rng(seed)
    b = bounds.as_array()
    edges_range = [(b[0], b[1]), (b[2], b[3]), (b[4], b[5])]
    out = np.zeros(tuple(int(r) for r in resolution))
    done = 0
    while done < n_mc:
        m = min(chunk, n_mc - done)
        x = lo + rng.random((m, 3)) * (hi - lo)
        density = s * stats.logistic.pdf(s * sdf(x))
        cam_pts = np.einsum("ij,ni->nj", cam.rotation, x - cam.center)
        z = cam_pts[:, 2]
        front = z > 0
        pts = np.column_stack([cam_pts[front, 0] / z[front], cam_pts[front, 1] / z[front], z[front]])
        w = density[front] / z[front] ** 2 * (volume / n_mc)
        h, _ = np.histogramdd(pts, bins=out.shape, range=edges_range, weights=w)
        out += h
        done += m
    return out


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    """TV distance between two non-negative arrays after normalizing each."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return 0.5 * float(np.abs(p / p.sum() - q / q.sum()).sum())
