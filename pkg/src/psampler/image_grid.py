"""Per-camera probability grids over the 3-dimensional image space (u, v, lambda).

The scene grid is split into ``F**3`` subcells per cell; every subcell
center is projected into the camera and its mass, scaled by the inverse
squared depth (the change-of-variables factor), is summed into the camera
cell it lands in. Transmittance along each (u, v) column then down-weights
cells hidden behind earlier mass.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import DegenerateDistribution, EmptyGridWarning
from .geometry import Camera, CameraBounds
from .scene_grid import SceneGrid


@dataclass(frozen=True)
class CameraGrid:
    camera_id: int
    bounds: CameraBounds
    raw_prob: np.ndarray  # (Ru, Rv, Rl)
    viewdep_prob: Optional[np.ndarray] = None
    normalized: bool = False
    empty: bool = False

    @property
    def resolution(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.raw_prob.shape)

    def cell_edges(self, axis: int) -> np.ndarray:
        lo, hi = self.bounds[axis]
        return np.linspace(lo, hi, self.resolution[axis] + 1)

    def cell_width(self, axis: int) -> float:
        lo, hi = self.bounds[axis]
        return (hi - lo) / self.resolution[axis]


def _as_camera_resolution(resolution) -> tuple[int, int, int]:
    res = tuple(int(r) for r in resolution)
    if len(res) != 3 or min(res) < 1:
        raise ValueError(f"invalid camera grid resolution {resolution!r}")
    return res


def interpolate_camera_grid(scene: SceneGrid, cam: Camera, bounds: CameraBounds,
                            resolution=(64, 64, 128), F: int = 2, *, camera_id: int = 0,
                            backend: str | None = None) -> CameraGrid:
    """Riemann-sum projection of the scene grid into the camera grid.

    Subcells behind the camera or outside ``bounds`` are dropped. Cells are
    half-open ``[lo, hi)`` along each axis, the last one closed.
    """
    if F < 1:
        raise ValueError("partition factor must be >= 1")
    res = _as_camera_resolution(resolution)
    b = bounds.as_array()
    if not (b[0] < b[1] and b[2] < b[3] and 0 < b[4] < b[5]):
        raise ValueError(f"invalid camera bounds {bounds!r}")
    scale = np.array([res[0] / (b[1] - b[0]), res[1] / (b[3] - b[2]), res[2] / (b[5] - b[4])])
    out = np.zeros(res, dtype=np.float64)
    kernels.get(backend).splat_to_camera(
        np.ascontiguousarray(scene.cell_prob, dtype=np.float64),
        np.ascontiguousarray(scene.lo, dtype=np.float64),
        np.ascontiguousarray(scene.cell_size / F),
        int(F),
        np.ascontiguousarray(cam.rotation),
        np.ascontiguousarray(cam.center),
        b,
        scale,
        out,
    )
    empty = not out.any()
    if empty:
        warnings.warn(f"camera {camera_id}: no scene mass inside the frustum", EmptyGridWarning,
                      stacklevel=2)
    return CameraGrid(camera_id, bounds, out, empty=empty)


def transmittance(raw: np.ndarray, density_scale: float = 1.0, inclusive: bool = False) -> np.ndarray:
    """``exp(-density_scale * accumulated mass)`` along the depth axis.

    The exclusive form sums only the cells strictly in front of each cell.
    """
    acc = np.cumsum(raw, axis=-1)
    if not inclusive:
        shifted = np.zeros_like(acc)
        shifted[..., 1:] = acc[..., :-1]
        acc = shifted
    return np.exp(-density_scale * acc)


def apply_view_dependency(grid: CameraGrid, density_scale: float = 1.0, inclusive: bool = False,
                          enabled: bool = True) -> CameraGrid:
    """Fill ``viewdep_prob = raw_prob * transmittance``; a plain copy when disabled."""
    if enabled:
        vd = grid.raw_prob * transmittance(grid.raw_prob, density_scale, inclusive)
    else:
        vd = grid.raw_prob.copy()
    return dataclasses.replace(grid, viewdep_prob=vd, normalized=False)


def normalize(grid: CameraGrid) -> CameraGrid:
    p = grid.viewdep_prob if grid.viewdep_prob is not None else grid.raw_prob
    total = float(p.sum())
    if not total > 0:
        raise DegenerateDistribution(f"camera {grid.camera_id}: grid has zero total mass")
    return dataclasses.replace(grid, viewdep_prob=p / total, normalized=True)


def build_camera_grid(scene: SceneGrid, cam: Camera, bounds: CameraBounds, resolution=(64, 64, 128),
                      F: int = 2, *, camera_id: int = 0, view_dependency: bool = True,
                      density_scale: float = 1.0, inclusive: bool = False,
                      backend: str | None = None) -> CameraGrid:
    """Interpolate, apply view dependency and normalize in one call."""
    grid = interpolate_camera_grid(scene, cam, bounds, resolution, F, camera_id=camera_id,
                                   backend=backend)
    grid = apply_view_dependency(grid, density_scale, inclusive, enabled=view_dependency)
    return normalize(grid)
