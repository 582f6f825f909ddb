# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: haversine batches, stay-run scanning, mean shift.

Semantics must match gpsdemand.kernels.pure exactly; the test suite compares
the two backends on random inputs.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport M_PI, asin, cos, sin, sqrt

cnp.import_array()

cdef double EARTH_RADIUS_M = 6371008.8
cdef double DEG = M_PI / 180.0


cdef inline double _hav(double lon1, double lat1, double lon2, double lat2) nogil:
    cdef double p1 = lat1 * DEG
    cdef double p2 = lat2 * DEG
    cdef double dp = (lat2 - lat1) * DEG
    cdef double dl = (lon2 - lon1) * DEG
    cdef double a = sin(dp / 2) ** 2 + cos(p1) * cos(p2) * sin(dl / 2) ** 2
    if a > 1.0:
        a = 1.0
    return 2.0 * EARTH_RADIUS_M * asin(sqrt(a))


def haversine_m(double[::1] lon1, double[::1] lat1,
                double[::1] lon2, double[::1] lat2):
    cdef Py_ssize_t n = lon1.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            out[i] = _hav(lon1[i], lat1[i], lon2[i], lat2[i])
    return out_arr


def stay_runs(double[::1] lon, double[::1] lat, double[::1] ts,
              double dist_m, double min_stay_s):
    """Anchor-scan dwell detection over one time-sorted trace.

    Returns an (k, 2) int64 array of inclusive [start, end] index pairs.
    """
    cdef Py_ssize_t n = lon.shape[0]
    cdef list runs = []
    cdef Py_ssize_t i = 0, j
    while i < n - 1:
        j = i
        while j + 1 < n and _hav(lon[i], lat[i], lon[j + 1], lat[j + 1]) <= dist_m:
            j += 1
        if j > i and ts[j] - ts[i] >= min_stay_s:
            runs.append((i, j))
            i = j + 1
        else:
            i += 1
    if not runs:
        return np.empty((0, 2), dtype=np.int64)
    return np.asarray(runs, dtype=np.int64)


def mean_shift_modes(double[:, ::1] xy, double bandwidth,
                     double tol, int max_iter):
    """Flat-kernel mean shift in a planar metric; every point is a seed.

    Returns the converged seed positions (n, 2); mode merging is done by the
    caller.
    """
    cdef Py_ssize_t n = xy.shape[0]
    seeds_arr = np.array(xy, dtype=np.float64, copy=True)
    cdef double[:, ::1] seeds = seeds_arr
    cdef double bw2 = bandwidth * bandwidth
    cdef Py_ssize_t i, k, it
    cdef double sx, sy, mx, my, dx, dy, shift
    cdef long cnt
    with nogil:
        for i in range(n):
            for it in range(max_iter):
                sx = 0.0
                sy = 0.0
                cnt = 0
                for k in range(n):
                    dx = xy[k, 0] - seeds[i, 0]
                    dy = xy[k, 1] - seeds[i, 1]
                    if dx * dx + dy * dy <= bw2:
                        sx += xy[k, 0]
                        sy += xy[k, 1]
                        cnt += 1
                if cnt == 0:
                    break
                mx = sx / cnt
                my = sy / cnt
                dx = mx - seeds[i, 0]
                dy = my - seeds[i, 1]
                shift = sqrt(dx * dx + dy * dy)
                seeds[i, 0] = mx
                seeds[i, 1] = my
                if shift < tol:
                    break
    return seeds_arr
