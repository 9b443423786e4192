"""
Geodetic <-> lunar-centered lunar-fixed conversions on a spherical Moon
"""
import math
from typing import Tuple

import numpy as np

from model.errors import DegenerateGeometryError
from model.models import Geodetic, Lclf


def geodetic_to_lclf(g: Geodetic) -> Lclf:
    cos_lat = math.cos(g.lat)
    return Lclf(g.radius * cos_lat * math.cos(g.lon),
                g.radius * cos_lat * math.sin(g.lon),
                g.radius * math.sin(g.lat))


def lclf_to_geodetic(p: Lclf) -> Geodetic:
    r = p.norm()
    if r == 0.0:
        raise DegenerateGeometryError("cannot convert the origin to geodetic coordinates")
    # atan2 keeps full precision near the poles, unlike asin(z / r)
    lat = math.atan2(p.z, math.hypot(p.x, p.y))
    lon = math.atan2(p.y, p.x)
    return Geodetic(lat, lon, r)


def geodetic_arrays_to_lclf(lat: np.ndarray, lon: np.ndarray, radius) -> np.ndarray:
    """Vectorized geodetic_to_lclf, returns an (N, 3) array"""
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    cos_lat = np.cos(lat)
    return np.stack([radius * cos_lat * np.cos(lon),
                     radius * cos_lat * np.sin(lon),
                     radius * np.sin(lat)], axis=-1)


def lclf_arrays_to_latlon(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    points = np.atleast_2d(points)
    lat = np.arctan2(points[:, 2], np.hypot(points[:, 0], points[:, 1]))
    lon = np.arctan2(points[:, 1], points[:, 0])
    return lat, lon
