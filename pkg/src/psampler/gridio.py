"""PSGD grid dumps, PNG heatmaps and CSV exports.

Dump layout (little-endian)::

    magic    4 bytes  b"PSGD"
    version  u32      1
    kind     u8       0 = scene grid, 1 = camera grid
    dims     3 x u32
    bounds   6 x f64  (lo0, hi0, lo1, hi1, lo2, hi2)
    payload  f32 array, first axis fastest
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"PSGD"
VERSION = 1
KIND_SCENE = 0
KIND_CAMERA = 1
_HEADER = struct.Struct("<4sIB3I6d")


class GridFormatError(ValueError):
    pass


@dataclass(frozen=True)
class GridDump:
    kind: int
    bounds: np.ndarray  # (6,)
    data: np.ndarray  # float32, shape dims

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.data.shape)


def encode_grid(kind: int, data: np.ndarray, bounds) -> bytes:
    data = np.asarray(data)
    if data.ndim != 3:
        raise ValueError("grid payload must be 3-dimensional")
    header = _HEADER.pack(MAGIC, VERSION, kind, *data.shape, *np.asarray(bounds, dtype=np.float64))
    payload = np.asarray(data, dtype="<f4").ravel(order="F").tobytes()
    return header + payload


def decode_grid(buf: bytes) -> GridDump:
    if len(buf) < _HEADER.size:
        raise GridFormatError("truncated header")
    magic, version, kind, *rest = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise GridFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise GridFormatError(f"unsupported version {version}")
    if kind not in (KIND_SCENE, KIND_CAMERA):
        raise GridFormatError(f"unknown grid kind {kind}")
    dims, bounds = tuple(rest[:3]), np.array(rest[3:], dtype=np.float64)
    n = int(np.prod(dims))
    payload = buf[_HEADER.size:]
    if len(payload) != 4 * n:
        raise GridFormatError(f"payload has {len(payload)} bytes, expected {4 * n}")
    data = np.frombuffer(payload, dtype="<f4").reshape(dims, order="F")
    return GridDump(kind, bounds, data)


def write_grid(path, kind: int, data: np.ndarray, bounds) -> None:
    Path(path).write_bytes(encode_grid(kind, data, bounds))


def read_grid(path) -> GridDump:
    return decode_grid(Path(path).read_bytes())


def uv_marginal_image(prob: np.ndarray) -> np.ndarray:
    """8-bit image of the depth-summed grid; row index is the v index."""
    m = np.asarray(prob, dtype=np.float64).sum(axis=2).T  # (Rv, Ru)
    peak = m.max()
    if peak > 0:
        m = m / peak
    return np.round(m * 255.0).astype(np.uint8)


def write_heatmap(path, prob: np.ndarray) -> None:
    from PIL import Image

    Image.fromarray(uv_marginal_image(prob)).save(path, format="PNG")


def write_grid_csv(path, prob: np.ndarray) -> None:
    prob = np.asarray(prob)
    Ru, Rv, Rl = prob.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u_idx", "v_idx", "lambda_idx", "p"])
        for il in range(Rl):
            for iv in range(Rv):
                for iu in range(Ru):
                    w.writerow([iu, iv, il, repr(float(prob[iu, iv, il]))])
