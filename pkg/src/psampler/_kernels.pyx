# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Semantics match ``_kernels_py`` operation for operation."""

from libc.math cimport floor, nextafter


def splat_to_camera(const double[:, :, ::1] cell_prob, const double[::1] lo,
                    const double[::1] sub, int F, const double[:, ::1] R,
                    const double[::1] t, const double[::1] bounds,
                    const double[::1] scale, double[:, :, ::1] out):
    """Project every subcell center and add ``(p / F^3) / z^2`` into its camera cell.

    ``sub`` is the subcell edge length per axis, ``bounds`` the camera grid
    extents ``(u0, u1, v0, v1, l0, l1)`` and ``scale`` the cells per unit
    along each image-space axis. Returns the number of subcells binned.
    """
    cdef Py_ssize_t nx = cell_prob.shape[0], ny = cell_prob.shape[1], nz = cell_prob.shape[2]
    cdef Py_ssize_t Ru = out.shape[0], Rv = out.shape[1], Rl = out.shape[2]
    cdef Py_ssize_t ix, iy, iz, fx, fy, fz, iu, iv, il
    cdef double F3 = <double>(F * F * F)
    cdef double m, x, y, z, d0, d1, d2, xc, yc, zc, u, v, fu, fv, fl
    cdef double u0 = bounds[0], u1 = bounds[1], v0 = bounds[2], v1 = bounds[3]
    cdef double l0 = bounds[4], l1 = bounds[5]
    cdef long long hits = 0
    with nogil:
        for iz in range(nz):
            for iy in range(ny):
                for ix in range(nx):
                    m = cell_prob[ix, iy, iz] / F3
                    for fz in range(F):
                        z = lo[2] + (<double>(iz * F + fz) + 0.5) * sub[2]
                        for fy in range(F):
                            y = lo[1] + (<double>(iy * F + fy) + 0.5) * sub[1]
                            for fx in range(F):
                                x = lo[0] + (<double>(ix * F + fx) + 0.5) * sub[0]
                                d0 = x - t[0]
                                d1 = y - t[1]
                                d2 = z - t[2]
                                zc = R[0, 2] * d0 + R[1, 2] * d1 + R[2, 2] * d2
                                if not (zc > 0.0):
                                    continue
                                xc = R[0, 0] * d0 + R[1, 0] * d1 + R[2, 0] * d2
                                yc = R[0, 1] * d0 + R[1, 1] * d1 + R[2, 1] * d2
                                u = xc / zc
                                v = yc / zc
                                if u < u0 or u > u1 or v < v0 or v > v1 or zc < l0 or zc > l1:
                                    continue
                                iu = <Py_ssize_t>floor((u - u0) * scale[0])
                                iv = <Py_ssize_t>floor((v - v0) * scale[1])
                                il = <Py_ssize_t>floor((zc - l0) * scale[2])
                                if iu >= Ru:
                                    iu = Ru - 1
                                if iv >= Rv:
                                    iv = Rv - 1
                                if il >= Rl:
                                    il = Rl - 1
                                out[iu, iv, il] += m / (zc * zc)
                                hits += 1
    return hits


cdef inline double _blend(const double[:, ::1] cdf, const long long[:, ::1] rows,
                          const double[:, ::1] w, Py_ssize_t n, Py_ssize_t i) noexcept nogil:
    cdef Py_ssize_t j
    cdef double b = w[n, 0] * cdf[rows[n, 0], i]
    for j in range(1, rows.shape[1]):
        b = b + w[n, j] * cdf[rows[n, j], i]
    return b


def sample_blended(const double[:, ::1] cdf, const long long[:, ::1] rows,
                   const double[:, ::1] weights, const double[::1] xi,
                   long long[::1] bins, double[::1] frac):
    """Inverse-CDF draw from a weighted blend of tabulated CDF rows.

    For sample ``n`` the blended CDF is ``sum_j weights[n, j] * cdf[rows[n, j]]``.
    Writes the chosen bin and the position inside it (in ``[0, 1)``).
    """
    cdef Py_ssize_t N = xi.shape[0], B = cdf.shape[1]
    cdef Py_ssize_t n, i
    cdef double total, target, b, prev, f
    with nogil:
        for n in range(N):
            total = _blend(cdf, rows, weights, n, B - 1)
            target = xi[n] * total
            prev = 0.0
            i = 0
            while i < B:
                b = _blend(cdf, rows, weights, n, i)
                if b > target:
                    break
                prev = b
                i += 1
            if i == B:
                # target rounded onto the top of the CDF: take the last non-empty bin
                i = B - 1
                b = _blend(cdf, rows, weights, n, i)
                prev = _blend(cdf, rows, weights, n, i - 1) if i > 0 else 0.0
                while i > 0 and not (b > prev):
                    i -= 1
                    b = prev
                    prev = _blend(cdf, rows, weights, n, i - 1) if i > 0 else 0.0
            f = (target - prev) / (b - prev)
            if f < 0.0:
                f = 0.0
            if f >= 1.0:
                f = nextafter(1.0, 0.0)
            bins[n] = i
            frac[n] = f
