"""
Data models shared across the navigation pipeline
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from model.errors import DegenerateGeometryError

R_MOON = 1_737_400.0        # m, spherical reference radius
MU_MOON = 4.9048695e12      # m^3/s^2


def normalize_lon(lon: float) -> float:
    """Wrap a longitude into (-pi, pi]"""
    wrapped = math.fmod(lon + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class Lclf:
    """Point or direction in the lunar-centered lunar-fixed frame (meters)"""
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.x, self.y, self.z)):
            raise DegenerateGeometryError(f"non-finite LCLF components: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    @classmethod
    def from_array(cls, a) -> "Lclf":
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class Geodetic:
    lat: float          # rad, [-pi/2, pi/2]
    lon: float          # rad, normalized into (-pi, pi]
    radius: float = R_MOON

    def __post_init__(self):
        if not (-math.pi / 2 <= self.lat <= math.pi / 2):
            raise ValueError(f"latitude out of range: {self.lat}")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"radius must be positive: {self.radius}")
        if not math.isfinite(self.lon):
            raise ValueError(f"longitude must be finite: {self.lon}")
        object.__setattr__(self, "lon", normalize_lon(self.lon))


@dataclass(frozen=True)
class GeoBox:
    """Latitude/longitude bounds in radians.

    lon_min > lon_max means the box crosses the date line (lon = pi).
    """
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    @property
    def wraps(self) -> bool:
        return self.lon_min > self.lon_max

    def split(self) -> Tuple["GeoBox", ...]:
        if not self.wraps:
            return (self,)
        return (GeoBox(self.lat_min, self.lat_max, self.lon_min, math.pi),
                GeoBox(self.lat_min, self.lat_max, -math.pi, self.lon_max))

    def contains(self, lat: float, lon: float) -> bool:
        if not (self.lat_min <= lat <= self.lat_max):
            return False
        if self.wraps:
            return lon >= self.lon_min or lon <= self.lon_max
        return self.lon_min <= lon <= self.lon_max


@dataclass(frozen=True)
class CameraModel:
    focal_px: float = 400.0
    width_px: int = 256
    height_px: int = 256
    cu: Optional[float] = None      # principal point, defaults to image center
    cv: Optional[float] = None

    def __post_init__(self):
        if not self.focal_px > 0:
            raise ValueError(f"focal_px must be positive: {self.focal_px}")
        if self.width_px <= 0 or self.height_px <= 0:
            raise ValueError(f"image size must be positive: {self.width_px}x{self.height_px}")
        if self.cu is None:
            object.__setattr__(self, "cu", self.width_px / 2.0)
        if self.cv is None:
            object.__setattr__(self, "cv", self.height_px / 2.0)
        if not (0 <= self.cu <= self.width_px and 0 <= self.cv <= self.height_px):
            raise ValueError(f"principal point ({self.cu}, {self.cv}) outside the image")

    @property
    def principal_point(self) -> Tuple[float, float]:
        return self.cu, self.cv

    def in_image(self, u: float, v: float, margin: float = 0.0) -> bool:
        """margin is a fraction of the image size added on each side"""
        mu = margin * self.width_px
        mv = margin * self.height_px
        return -mu <= u <= self.width_px + mu and -mv <= v <= self.height_px + mv


@dataclass(frozen=True, eq=False)
class CameraPose:
    position: Lclf
    # rows are the camera x (u, right), y (v, down) and z (boresight) axes in LCLF
    orientation: np.ndarray = field(repr=False)

    @property
    def boresight(self) -> np.ndarray:
        return self.orientation[2]


class CraterSource(str, Enum):
    SMALL_DB = "small_db"       # 5-20 km
    LARGE_DB = "large_db"       # > 20 km


@dataclass(frozen=True)
class CraterRecord:
    id: str
    center: Geodetic
    diameter: float             # m
    source: CraterSource = CraterSource.SMALL_DB

    def __post_init__(self):
        if not self.diameter > 0:
            raise ValueError(f"crater {self.id}: diameter must be positive, got {self.diameter}")


@dataclass(frozen=True)
class DetectedCrater:
    """Ellipse in image coordinates (pixels)"""
    u: float
    v: float
    major_axis: float
    minor_axis: float
    orientation: float = 0.0    # rad

    def __post_init__(self):
        if not (math.isfinite(self.u) and math.isfinite(self.v)):
            raise ValueError(f"detection center must be finite: ({self.u}, {self.v})")
        if not (self.major_axis >= self.minor_axis > 0):
            raise ValueError(f"invalid axes: major={self.major_axis} minor={self.minor_axis}")

    @property
    def center(self) -> Tuple[float, float]:
        return self.u, self.v

    @property
    def diameter(self) -> float:
        return 0.5 * (self.major_axis + self.minor_axis)


@dataclass(frozen=True)
class ExpectedCrater:
    record: CraterRecord
    u: float
    v: float
    diameter: float             # px

    @property
    def center(self) -> Tuple[float, float]:
        return self.u, self.v


@dataclass(frozen=True)
class CraterMatch:
    detection: DetectedCrater
    record: CraterRecord
    translation: Tuple[float, float]    # expected center - detected center, px
    cost: float
