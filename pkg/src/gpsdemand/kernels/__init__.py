"""Hot-kernel backend selection.

The compiled Cython extension (``gpsdemand._speedups``) is used when it built
successfully; otherwise the NumPy implementations take over. Set the
environment variable ``GPSDEMAND_PURE=1`` to force the pure backend.
"""

from __future__ import annotations

import os

import numpy as np

from . import pure
from .pure import EARTH_RADIUS_M

try:
    if os.environ.get("GPSDEMAND_PURE"):
        _compiled = None
    else:
        from gpsdemand import _speedups as _compiled
except ImportError:  # pragma: no cover - depends on build environment
    _compiled = None

BACKEND = "compiled" if _compiled is not None else "pure"


def haversine_m(lon1, lat1, lon2, lat2):
    """Great-circle distance in meters; inputs broadcast like ufunc operands."""
    lon1, lat1, lon2, lat2 = np.broadcast_arrays(
        np.asarray(lon1, dtype=np.float64),
        np.asarray(lat1, dtype=np.float64),
        np.asarray(lon2, dtype=np.float64),
        np.asarray(lat2, dtype=np.float64),
    )
    shape = lon1.shape
    if _compiled is not None:
        out = _compiled.haversine_m(
            np.ascontiguousarray(lon1).ravel(),
            np.ascontiguousarray(lat1).ravel(),
            np.ascontiguousarray(lon2).ravel(),
            np.ascontiguousarray(lat2).ravel(),
        )
        return out.reshape(shape) if shape else float(out[0])
    out = pure.haversine_m(lon1, lat1, lon2, lat2)
    return out if shape else float(out)


def stay_runs(lon, lat, ts, dist_m, min_stay_s):
    """Inclusive [start, end] index pairs of dwell runs in a sorted trace."""
    if _compiled is not None:
        return _compiled.stay_runs(
            np.ascontiguousarray(lon, dtype=np.float64),
            np.ascontiguousarray(lat, dtype=np.float64),
            np.ascontiguousarray(ts, dtype=np.float64),
            float(dist_m),
            float(min_stay_s),
        )
    return pure.stay_runs(lon, lat, ts, dist_m, min_stay_s)


def mean_shift_modes(xy, bandwidth, tol=1.0, max_iter=100):
    """Converged flat-kernel mean-shift seed positions for planar points."""
    xy = np.ascontiguousarray(xy, dtype=np.float64)
    if _compiled is not None:
        return _compiled.mean_shift_modes(xy, float(bandwidth), float(tol), int(max_iter))
    return pure.mean_shift_modes(xy, bandwidth, tol, max_iter)
