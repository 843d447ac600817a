"""Pure numpy fallback for the compiled kernels in ``_kernels.pyx``.

Floating point operations are performed in the same order as the compiled
loops so both backends produce bit-identical grids and samples.
"""

import numpy as np

_CHUNK = 16384


def splat_to_camera(cell_prob, lo, sub, F, R, t, bounds, scale, out):
    Ru, Rv, Rl = out.shape
    flat = out.reshape(-1)
    u0, u1, v0, v1, l0, l1 = bounds
    hits = 0
    for X, Y, Z, mass in _subcell_slabs(cell_prob, lo, sub, F):
        d0 = X - t[0]
        d1 = Y - t[1]
        d2 = Z - t[2]
        zc = R[0, 2] * d0 + R[1, 2] * d1 + R[2, 2] * d2
        xc = R[0, 0] * d0 + R[1, 0] * d1 + R[2, 0] * d2
        yc = R[0, 1] * d0 + R[1, 1] * d1 + R[2, 1] * d2
        front = zc > 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            u = xc / zc
            v = yc / zc
        keep = front & (u >= u0) & (u <= u1) & (v >= v0) & (v <= v1) & (zc >= l0) & (zc <= l1)
        if not keep.any():
            continue
        u, v, zc, m = u[keep], v[keep], zc[keep], mass[keep]
        iu = np.minimum(np.floor((u - u0) * scale[0]).astype(np.int64), Ru - 1)
        iv = np.minimum(np.floor((v - v0) * scale[1]).astype(np.int64), Rv - 1)
        il = np.minimum(np.floor((zc - l0) * scale[2]).astype(np.int64), Rl - 1)
        np.add.at(flat, (iu * Rv + iv) * Rl + il, m / (zc * zc))
        hits += int(keep.sum())
    return hits


def _subcell_slabs(cell_prob, lo, sub, F):
    """Subcell centers and masses, one z-slab of parents per batch, in kernel loop order."""
    nx, ny, nz = cell_prob.shape
    F3 = float(F * F * F)
    axes = []
    for k, n in enumerate((nx, ny, nz)):
        idx = (np.arange(n)[:, None] * F + np.arange(F)[None, :]).astype(np.float64)
        axes.append(lo[k] + (idx + 0.5) * sub[k])
    xs, ys, zs = axes
    shape = (ny, nx, F, F, F)
    X = np.broadcast_to(xs[None, :, None, None, :], shape).reshape(-1)
    Y = np.broadcast_to(ys[:, None, None, :, None], shape).reshape(-1)
    for iz in range(nz):
        Z = np.broadcast_to(zs[iz][None, None, :, None, None], shape).reshape(-1)
        mass = np.broadcast_to((cell_prob[:, :, iz].T / F3)[:, :, None, None, None], shape)
        yield X, Y, Z, mass.reshape(-1)


def _blend(cdf, rows, w):
    b = w[:, 0, None] * cdf[rows[:, 0]]
    for j in range(1, rows.shape[1]):
        b = b + w[:, j, None] * cdf[rows[:, j]]
    return b


def sample_blended(cdf, rows, weights, xi, bins, frac):
    N = xi.shape[0]
    B = cdf.shape[1]
    for start in range(0, N, _CHUNK):
        sl = slice(start, min(start + _CHUNK, N))
        r, w, x = rows[sl], weights[sl], xi[sl]
        b = _blend(cdf, r, w)
        target = x * b[:, B - 1]
        i = (b <= target[:, None]).sum(axis=1)
        prev = np.where(i > 0, b[np.arange(len(i)), np.maximum(i - 1, 0)], 0.0)
        over = i == B
        if over.any():
            for k in np.flatnonzero(over):
                j = B - 1
                while j > 0 and not (b[k, j] > b[k, j - 1]):
                    j -= 1
                i[k] = j
                prev[k] = b[k, j - 1] if j > 0 else 0.0
        hi = b[np.arange(len(i)), i]
        f = (target - prev) / (hi - prev)
        f = np.where(f < 0.0, 0.0, f)
        f = np.where(f >= 1.0, np.nextafter(1.0, 0.0), f)
        bins[sl] = i
        frac[sl] = f
