"""Pinhole camera model and the 3-dimensional image space.

A world point ``x`` maps to camera coordinates through ``h(x) = R^T (x - t)``
where ``R`` is the stored rotation and ``t`` the camera center. The image
space coordinates are ``g(xhat) = [xhat/zhat, yhat/zhat, zhat]``, i.e.
normalized image coordinates plus z-depth. Intrinsics only enter when pixel
positions are converted to normalized coordinates.

All transforms accept a single 3-vector or an ``(..., 3)`` array.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import BehindCamera, ConfigError, InvalidDepth, NoIntersection


class ImageSpacePoint(NamedTuple):
    u: float
    v: float
    lam: float


@dataclass(frozen=True)
class Camera:
    rotation: np.ndarray
    center: np.ndarray
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        ctr = np.asarray(self.center, dtype=np.float64).reshape(3)
        if not np.allclose(rot.T @ rot, np.eye(3), rtol=0.0, atol=1e-9):
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(rot) - 1.0) > 1e-9:
            raise ValueError("rotation must have determinant +1")
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be at least 1x1")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "center", ctr)

    @classmethod
    def look_at(cls, center, target, up=(0.0, 1.0, 0.0), *, fx, fy, cx, cy, width, height):
        """Camera at ``center`` whose optical (+z) axis points at ``target``."""
        center = np.asarray(center, dtype=np.float64)
        z = np.asarray(target, dtype=np.float64) - center
        z /= np.linalg.norm(z)
        x = np.cross(np.asarray(up, dtype=np.float64), z)
        if np.linalg.norm(x) < 1e-12:
            x = np.cross([1.0, 0.0, 0.0], z)
        x /= np.linalg.norm(x)
        y = np.cross(z, x)
        # columns are the camera axes in world coordinates, so R^T maps world -> camera
        rot = np.stack([x, y, z], axis=1)
        return cls(rot, center, fx, fy, cx, cy, width, height)

    def pixel_to_uv(self, px, py):
        return (np.asarray(px, dtype=np.float64) - self.cx) / self.fx, (
            np.asarray(py, dtype=np.float64) - self.cy
        ) / self.fy

    def uv_to_pixel(self, u, v):
        return np.asarray(u) * self.fx + self.cx, np.asarray(v) * self.fy + self.cy

    def to_dict(self) -> dict:
        return {
            "rotation": [float(a) for a in self.rotation.ravel()],
            "center": [float(a) for a in self.center],
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Camera":
        try:
            return cls(
                np.asarray(d["rotation"], dtype=np.float64).reshape(3, 3),
                np.asarray(d["center"], dtype=np.float64),
                float(d["fx"]),
                float(d["fy"]),
                float(d["cx"]),
                float(d["cy"]),
                int(d["width"]),
                int(d["height"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad camera entry: {exc}") from exc


def load_rig(path) -> list[Camera]:
    """Read a JSON camera rig (array of camera objects)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"camera rig not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if isinstance(data, dict):
        data = data.get("cameras")
    if not isinstance(data, list) or not data:
        raise ConfigError(f"{path}: expected a non-empty array of cameras")
    return [Camera.from_dict(d) for d in data]


def save_rig(path, cameras: Sequence[Camera]) -> None:
    Path(path).write_text(json.dumps([c.to_dict() for c in cameras], indent=2) + "\n")


def world_to_camera(cam: Camera, x) -> np.ndarray:
    d = np.asarray(x, dtype=np.float64) - cam.center
    return d @ cam.rotation


def camera_to_world(cam: Camera, xhat) -> np.ndarray:
    return np.asarray(xhat, dtype=np.float64) @ cam.rotation.T + cam.center


def camera_to_image(xhat) -> np.ndarray:
    xhat = np.asarray(xhat, dtype=np.float64)
    z = xhat[..., 2]
    if np.any(z <= 0):
        raise BehindCamera("point has non-positive camera depth")
    out = np.empty_like(xhat)
    out[..., 0] = xhat[..., 0] / z
    out[..., 1] = xhat[..., 1] / z
    out[..., 2] = z
    return out


def image_to_camera(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    lam = u[..., 2]
    if np.any(~(lam > 0)):
        raise InvalidDepth("image-space depth must be > 0")
    out = np.empty_like(u)
    out[..., 0] = u[..., 0] * lam
    out[..., 1] = u[..., 1] * lam
    out[..., 2] = lam
    return out


def project(cam: Camera, x) -> np.ndarray:
    """World point(s) to ``[u, v, lambda]``."""
    return camera_to_image(world_to_camera(cam, x))


def unproject(cam: Camera, u) -> np.ndarray:
    """Inverse of :func:`project`."""
    return camera_to_world(cam, image_to_camera(u))


def ray_from_sample(cam: Camera, u_tilde):
    """Ray through an image-space sample.

    Returns ``(origin, direction, depth)`` where ``origin`` is the camera
    center, ``direction`` is unit length and ``origin + depth * direction``
    recovers the unprojected point. ``depth`` is the Euclidean distance along
    the ray, not the z-depth of the sample.
    """
    p = unproject(cam, u_tilde)
    diff = p - cam.center
    depth = np.linalg.norm(diff, axis=-1)
    direction = diff / depth[..., None]
    origin = np.broadcast_to(cam.center, direction.shape).copy()
    return origin, direction, depth


@dataclass(frozen=True)
class SceneBoundary:
    """Origin-centered sphere (default) or axis-aligned box."""

    kind: str = "sphere"
    radius: float = 1.0
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    half_extents: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self):
        if self.kind not in ("sphere", "box"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64).reshape(3))
        object.__setattr__(
            self, "half_extents", np.asarray(self.half_extents, dtype=np.float64).reshape(3)
        )
        if self.kind == "sphere" and not self.radius > 0:
            raise ValueError("sphere radius must be positive")
        if self.kind == "box" and np.any(self.half_extents <= 0):
            raise ValueError("box half extents must be positive")

    @classmethod
    def sphere(cls, radius=1.0, center=(0.0, 0.0, 0.0)):
        return cls("sphere", float(radius), np.asarray(center, dtype=np.float64))

    @classmethod
    def box(cls, half_extents, center=(0.0, 0.0, 0.0)):
        return cls("box", 1.0, np.asarray(center, dtype=np.float64), np.asarray(half_extents))

    @classmethod
    def from_dict(cls, d: dict) -> "SceneBoundary":
        kind = d.get("type", "sphere")
        if kind == "sphere":
            return cls.sphere(d.get("radius", 1.0), d.get("center", (0.0, 0.0, 0.0)))
        if kind == "box":
            return cls.box(d["half_extents"], d.get("center", (0.0, 0.0, 0.0)))
        raise ConfigError(f"unknown boundary type {kind!r}")

    def aabb(self) -> tuple[np.ndarray, np.ndarray]:
        ext = np.full(3, self.radius) if self.kind == "sphere" else self.half_extents
        return self.center - ext, self.center + ext

    def contains(self, x) -> np.ndarray:
        d = np.asarray(x, dtype=np.float64) - self.center
        if self.kind == "sphere":
            return np.einsum("...i,...i->...", d, d) <= self.radius**2
        return np.all(np.abs(d) <= self.half_extents, axis=-1)

    def intersect(self, origin, direction):
        """Entry/exit parameters of the line ``origin + t * direction``.

        ``direction`` need not be unit length; ``t`` is in its units.
        Returns ``None`` when the line misses.
        """
        o = np.asarray(origin, dtype=np.float64) - self.center
        d = np.asarray(direction, dtype=np.float64)
        if self.kind == "sphere":
            a = d @ d
            b = 2.0 * (o @ d)
            c = o @ o - self.radius**2
            disc = b * b - 4.0 * a * c
            if disc < 0:
                return None
            sq = np.sqrt(disc)
            return (-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)
        t0, t1 = -np.inf, np.inf
        for k in range(3):
            if d[k] == 0.0:
                if abs(o[k]) > self.half_extents[k]:
                    return None
                continue
            a = (-self.half_extents[k] - o[k]) / d[k]
            b = (self.half_extents[k] - o[k]) / d[k]
            t0, t1 = max(t0, min(a, b)), min(t1, max(a, b))
        if t0 > t1:
            return None
        return t0, t1


class CameraBounds(NamedTuple):
    u_range: tuple[float, float]
    v_range: tuple[float, float]
    lambda_range: tuple[float, float]

    def as_array(self) -> np.ndarray:
        return np.array([*self.u_range, *self.v_range, *self.lambda_range], dtype=np.float64)

    @classmethod
    def from_array(cls, a) -> "CameraBounds":
        a = [float(x) for x in a]
        return cls((a[0], a[1]), (a[2], a[3]), (a[4], a[5]))

    def contains(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        lo = np.array([self.u_range[0], self.v_range[0], self.lambda_range[0]])
        hi = np.array([self.u_range[1], self.v_range[1], self.lambda_range[1]])
        return np.all((u >= lo) & (u <= hi), axis=-1)


# near bound when the camera sits inside the boundary
MIN_NEAR_FRACTION = 1e-3


def compute_bounds(cam: Camera, boundary: SceneBoundary) -> CameraBounds:
    """Image-space extents from the image corners and the central pixel ray."""
    corners_u, corners_v = cam.pixel_to_uv(
        [0.0, cam.width, 0.0, cam.width], [0.0, 0.0, cam.height, cam.height]
    )
    uc, vc = cam.pixel_to_uv(cam.width / 2.0, cam.height / 2.0)
    # unnormalized direction [u, v, 1]: the line parameter is the z-depth
    direction = cam.rotation @ np.array([float(uc), float(vc), 1.0])
    hit = boundary.intersect(cam.center, direction)
    if hit is None or hit[1] <= 0:
        raise NoIntersection("central pixel ray misses the scene boundary")
    near, far = hit
    near = max(near, far * MIN_NEAR_FRACTION)
    return CameraBounds(
        (float(corners_u.min()), float(corners_u.max())),
        (float(corners_v.min()), float(corners_v.max())),
        (float(near), float(far)),
    )
