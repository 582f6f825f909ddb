"""Planar geometry helpers: local projection, polygon math, point-in-polygon."""

from __future__ import annotations

import math

import numpy as np

from .kernels import EARTH_RADIUS_M, haversine_m

__all__ = [
    "EARTH_RADIUS_M",
    "haversine_m",
    "local_plane",
    "polygon_centroid",
    "polygon_area_km2",
    "points_in_ring",
]


def local_plane(lon, lat, ref_lon: float, ref_lat: float):
    """Project lon/lat degrees to meters on an equirectangular plane at the ref point.

    Adequate for neighborhood-scale work (home clustering, GPS noise); not
    used for interzonal distances, which stay on the haversine.
    """
    k = math.pi / 180.0 * EARTH_RADIUS_M
    x = (np.asarray(lon, dtype=np.float64) - ref_lon) * k * math.cos(math.radians(ref_lat))
    y = (np.asarray(lat, dtype=np.float64) - ref_lat) * k
    return x, y


def unproject_local(x, y, ref_lon: float, ref_lat: float):
    """Inverse of :func:`local_plane`."""
    k = math.pi / 180.0 * EARTH_RADIUS_M
    lon = ref_lon + np.asarray(x, dtype=np.float64) / (k * math.cos(math.radians(ref_lat)))
    lat = ref_lat + np.asarray(y, dtype=np.float64) / k
    return lon, lat


def _ring_arrays(ring):
    arr = np.asarray(ring, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 4:
        raise ValueError("ring must be an (n>=4, 2) array of lon/lat pairs")
    if not (arr[0] == arr[-1]).all():
        raise ValueError("ring is not closed")
    return arr


def _shoelace(ring):
    arr = _ring_arrays(ring)
    x, y = arr[:-1, 0], arr[:-1, 1]
    xn, yn = arr[1:, 0], arr[1:, 1]
    cross = x * yn - xn * y
    return cross, x, y, xn, yn


def polygon_centroid(outer, holes=()):
    """Area-weighted centroid of a polygon in its own lon/lat coordinates."""
    # holes as negative area, winding-normalized
    cx_num = cy_num = area2 = 0.0
    for ring, sign in [(outer, 1.0)] + [(h, -1.0) for h in holes]:
        cross, x, y, xn, yn = _shoelace(ring)
        a2 = cross.sum()
        if a2 == 0.0:
            continue
        w = sign * abs(a2) / a2
        area2 += w * a2
        cx_num += w * ((x + xn) * cross).sum()
        cy_num += w * ((y + yn) * cross).sum()
    if area2 == 0.0:
        arr = _ring_arrays(outer)
        return float(arr[:-1, 0].mean()), float(arr[:-1, 1].mean())
    return float(cx_num / (3.0 * area2)), float(cy_num / (3.0 * area2))


def polygon_area_km2(outer, holes=(), ref_lat: float | None = None) -> float:
    """Approximate polygon area in km^2 via an equirectangular projection."""
    arr = _ring_arrays(outer)
    if ref_lat is None:
        ref_lat = float(arr[:, 1].mean())
    ref_lon = float(arr[:, 0].mean())
    total = 0.0
    for ring, sign in [(outer, 1.0)] + [(h, -1.0) for h in holes]:
        r = _ring_arrays(ring)
        x, y = local_plane(r[:, 0], r[:, 1], ref_lon, ref_lat)
        a2 = (x[:-1] * y[1:] - x[1:] * y[:-1]).sum()
        total += sign * abs(a2) / 2.0
    return total / 1e6


def points_in_ring(px, py, ring) -> np.ndarray:
    """Even-odd rule point-in-ring test, vectorized over points.

    Points exactly on an edge may land on either side; boundary ties are
    resolved by the caller (lowest zone id wins).
    """
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    arr = _ring_arrays(ring)
    x0, y0 = arr[:-1, 0], arr[:-1, 1]
    x1, y1 = arr[1:, 0], arr[1:, 1]
    inside = np.zeros(px.shape, dtype=bool)
    for i in range(x0.shape[0]):
        xa, ya, xb, yb = x0[i], y0[i], x1[i], y1[i]
        if ya == yb:
            continue
        cond = (ya > py) != (yb > py)
        with np.errstate(invalid="ignore"):
            xint = xa + (py - ya) * (xb - xa) / (yb - ya)
        inside ^= cond & (px < xint)
    return inside


def points_on_ring(px, py, ring) -> np.ndarray:
    """True where a point lies exactly on a ring edge (collinear and in range)."""
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    arr = _ring_arrays(ring)
    x0, y0 = arr[:-1, 0], arr[:-1, 1]
    x1, y1 = arr[1:, 0], arr[1:, 1]
    on = np.zeros(px.shape, dtype=bool)
    for i in range(x0.shape[0]):
        xa, ya, xb, yb = x0[i], y0[i], x1[i], y1[i]
        cross = (xb - xa) * (py - ya) - (yb - ya) * (px - xa)
        inbox = (
            (px >= min(xa, xb)) & (px <= max(xa, xb))
            & (py >= min(ya, yb)) & (py <= max(ya, yb))
        )
        on |= (cross == 0.0) & inbox
    return on


def points_in_polygon(px, py, outer, holes=()) -> np.ndarray:
    """Boundary-inclusive containment: even-odd interior or exactly on any ring."""
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    inside = points_in_ring(px, py, outer)
    boundary = points_on_ring(px, py, outer)
    for h in holes:
        inside ^= points_in_ring(px, py, h)
        boundary |= points_on_ring(px, py, h)
    return inside | boundary


def point_in_polygon(lon: float, lat: float, outer, holes=()) -> bool:
    """Boundary-inclusive containment for a single point."""
    return bool(points_in_polygon(np.asarray([lon]), np.asarray([lat]), outer, holes)[0])
