"""Scene-space probability grid built from an SDF.

Each cell stores ``p(x) = phi_s(S(x))`` evaluated at its center, with
``phi_s`` the logistic density of scale ``s``. Values are left
unnormalized; every camera grid renormalizes its own projection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .geometry import SceneBoundary


def sigmoid_cdf(o, s):
    """Logistic CDF ``1 / (1 + exp(-s o))``."""
    so = s * np.asarray(o, dtype=np.float64)
    e = np.exp(-np.abs(so))
    return np.where(so >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def logistic_density(o, s, squared: bool = True):
    """Logistic density ``s e^{-so} / (1 + e^{-so})^2``, the derivative of :func:`sigmoid_cdf`.

    ``squared=False`` gives ``s e^{-so} / (1 + e^{-so})`` instead, kept only to
    compare against that variant of the formula; it is not a density.
    """
    so = s * np.asarray(o, dtype=np.float64)
    if not squared:
        e = np.exp(-np.abs(so))
        return np.where(so >= 0, s * e / (1.0 + e), s / (1.0 + e))
    e = np.exp(-np.abs(so))
    return s * e / (1.0 + e) ** 2


@dataclass(frozen=True)
class SceneGrid:
    lo: np.ndarray
    hi: np.ndarray
    cell_prob: np.ndarray  # shape (nx, ny, nz)
    s: float

    @property
    def resolution(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.cell_prob.shape)

    @property
    def cell_size(self) -> np.ndarray:
        return (self.hi - self.lo) / np.asarray(self.resolution, dtype=np.float64)

    def axis_centers(self, k: int) -> np.ndarray:
        n = self.resolution[k]
        return self.lo[k] + (np.arange(n) + 0.5) * self.cell_size[k]

    def cell_centers(self) -> np.ndarray:
        """``(nx, ny, nz, 3)`` array of cell centers."""
        grids = np.meshgrid(*(self.axis_centers(k) for k in range(3)), indexing="ij")
        return np.stack(grids, axis=-1)

    def bounds_array(self) -> np.ndarray:
        return np.array([self.lo[0], self.hi[0], self.lo[1], self.hi[1], self.lo[2], self.hi[2]])


def _as_resolution(resolution) -> tuple[int, int, int]:
    if np.isscalar(resolution):
        resolution = (resolution,) * 3
    res = tuple(int(r) for r in resolution)
    if len(res) != 3 or min(res) < 1:
        raise ValueError(f"invalid grid resolution {resolution!r}")
    return res


def build_scene_grid(sdf, boundary: SceneBoundary, resolution=128, s: float = 50.0,
                     squared: bool = True) -> SceneGrid:
    if not s > 0:
        raise ValueError("logistic scale s must be positive")
    res = _as_resolution(resolution)
    lo, hi = boundary.aabb()
    grid = SceneGrid(lo, hi, np.zeros(res), float(s))
    centers = grid.cell_centers()
    prob = logistic_density(sdf(centers), s, squared=squared)
    prob = np.ascontiguousarray(prob, dtype=np.float64)
    if not np.all(np.isfinite(prob)) or np.any(prob < 0):
        raise ValueError("SDF produced non-finite or negative cell probability")
    return SceneGrid(lo, hi, prob, float(s))


class PartitionedCell(NamedTuple):
    center: np.ndarray
    mass: float


class PartitionedCells(NamedTuple):
    """A batch of subcells: one z-slab of parent cells."""

    centers: np.ndarray  # (N, 3)
    mass: np.ndarray  # (N,)

    def __iter__(self) -> Iterator[PartitionedCell]:  # type: ignore[override]
        for c, m in zip(self.centers, self.mass):
            yield PartitionedCell(c, float(m))


def subcell_axis(grid: SceneGrid, k: int, F: int) -> np.ndarray:
    """Subcell center coordinates along axis ``k``, shape ``(n_k, F)``."""
    n = grid.resolution[k]
    sub = grid.cell_size[k] / F
    idx = (np.arange(n)[:, None] * F + np.arange(F)[None, :]).astype(np.float64)
    return grid.lo[k] + (idx + 0.5) * sub


def partition_cells(grid: SceneGrid, F: int) -> Iterator[PartitionedCells]:
    """Split every cell into ``F**3`` equal subcells of mass ``p / F**3``.

    Batches come one z-slab of parents at a time. Within a batch, parents are
    ordered with x fastest, then y; the subcells of a parent follow with x
    fastest, then y, then z.
    """
    if F < 1:
        raise ValueError("partition factor must be >= 1")
    nx, ny, nz = grid.resolution
    F3 = float(F**3)
    xs, ys, zs = (subcell_axis(grid, k, F) for k in range(3))
    shape = (ny, nx, F, F, F)  # (iy, ix, fz, fy, fx)
    X = np.broadcast_to(xs[None, :, None, None, :], shape).reshape(-1)
    Y = np.broadcast_to(ys[:, None, None, :, None], shape).reshape(-1)
    for iz in range(nz):
        Z = np.broadcast_to(zs[iz][None, None, :, None, None], shape).reshape(-1)
        mass = np.broadcast_to((grid.cell_prob[:, :, iz].T / F3)[:, :, None, None, None], shape)
        yield PartitionedCells(np.stack([X, Y, Z], axis=-1), mass.reshape(-1))
