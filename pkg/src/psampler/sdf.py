"""Analytic signed distance fields (negative inside).

Every field is a callable mapping an ``(..., 3)`` array of world points to an
``(...)`` array of signed distances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .errors import ConfigError


class SdfField(Protocol):
    def __call__(self, x: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class Sphere:
    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 1.0

    def __call__(self, x):
        d = np.asarray(x, dtype=np.float64) - np.asarray(self.center, dtype=np.float64)
        return np.sqrt(np.einsum("...i,...i->...", d, d)) - self.radius


@dataclass(frozen=True)
class Box:
    center: tuple = (0.0, 0.0, 0.0)
    half_extents: tuple = (0.5, 0.5, 0.5)

    def __call__(self, x):
        q = np.abs(np.asarray(x, dtype=np.float64) - np.asarray(self.center, dtype=np.float64))
        q = q - np.asarray(self.half_extents, dtype=np.float64)
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(q.max(axis=-1), 0.0)
        return outside + inside


@dataclass(frozen=True)
class Slab:
    """Infinite wall of given thickness, perpendicular to one world axis."""

    axis: int = 2
    position: float = 0.0
    thickness: float = 0.1

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.abs(x[..., self.axis] - self.position) - 0.5 * self.thickness


@dataclass(frozen=True)
class Union:
    children: tuple

    def __call__(self, x):
        vals = [c(x) for c in self.children]
        out = vals[0]
        for v in vals[1:]:
            out = np.minimum(out, v)
        return out


@dataclass(frozen=True)
class Constant:
    value: float = 0.0

    def __call__(self, x):
        return np.full(np.asarray(x).shape[:-1], float(self.value))


class VoxelSdf:
    """Trilinearly interpolated SDF sampled at the cell centers of a box."""

    def __init__(self, values: np.ndarray, lo, hi):
        from scipy.interpolate import RegularGridInterpolator

        values = np.asarray(values, dtype=np.float64)
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        axes = [lo[k] + (np.arange(n) + 0.5) * (hi[k] - lo[k]) / n for k, n in enumerate(values.shape)]
        self._lo = np.array([a[0] for a in axes])
        self._hi = np.array([a[-1] for a in axes])
        self._interp = RegularGridInterpolator(axes, values, method="linear")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        flat = np.clip(x.reshape(-1, 3), self._lo, self._hi)
        return self._interp(flat).reshape(x.shape[:-1])

    @classmethod
    def from_dump(cls, path) -> "VoxelSdf":
        from .gridio import read_grid

        dump = read_grid(path)
        if dump.kind != 0:
            raise ConfigError(f"{path}: voxel SDF must be a scene-kind grid dump")
        b = dump.bounds
        return cls(dump.data.astype(np.float64), b[0::2], b[1::2])


def sdf_from_dict(d: dict, base_dir=None):
    """Build an SDF from its JSON description."""
    try:
        kind = d["type"]
        if kind == "sphere":
            return Sphere(tuple(d.get("center", (0.0, 0.0, 0.0))), float(d.get("radius", 1.0)))
        if kind == "box":
            return Box(tuple(d.get("center", (0.0, 0.0, 0.0))), tuple(d["half_extents"]))
        if kind in ("slab", "wall"):
            return Slab(int(d.get("axis", 2)), float(d["position"]), float(d["thickness"]))
        if kind == "union":
            return Union(tuple(sdf_from_dict(c, base_dir) for c in d["children"]))
        if kind == "voxel":
            from pathlib import Path

            p = Path(d["path"])
            if base_dir is not None and not p.is_absolute():
                p = Path(base_dir) / p
            return VoxelSdf.from_dump(p)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad shape entry {d!r}: {exc}") from exc
    raise ConfigError(f"unknown shape type {kind!r}")


def union_of(shapes: Sequence) -> SdfField:
    shapes = tuple(shapes)
    return shapes[0] if len(shapes) == 1 else Union(shapes)
