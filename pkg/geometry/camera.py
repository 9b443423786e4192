"""
Nadir camera pose, pinhole projection and ground footprint
"""
import math
from typing import Optional, Tuple, Union, Sequence

import numpy as np

from geometry.frames import lclf_arrays_to_latlon
from model.errors import DegenerateGeometryError, NoFootprintError
from model.models import R_MOON, CameraModel, CameraPose, GeoBox, Lclf, normalize_lon

Vector = Union[Lclf, Sequence[float], np.ndarray]

# rays sampled along each image edge when bounding the footprint
_EDGE_SAMPLES = 9


def _as_vec(v: Vector) -> np.ndarray:
    if isinstance(v, Lclf):
        return v.as_array()
    return np.asarray(v, dtype=float).reshape(3)


def nadir_pose(position: Vector, reference_north: Vector, moon_radius: float = R_MOON) -> CameraPose:
    """Boresight toward the Moon center, image "up" along the projection of reference_north"""
    p = _as_vec(position)
    r = float(np.linalg.norm(p))
    if r == 0.0:
        raise DegenerateGeometryError("camera at the Moon center has no nadir direction")
    if r <= moon_radius:
        raise DegenerateGeometryError(f"camera radius {r:.1f} m is not above the surface")
    z_axis = -p / r
    north = _as_vec(reference_north)
    up = north - np.dot(north, z_axis) * z_axis
    up_norm = float(np.linalg.norm(up))
    if up_norm <= 1e-9 * max(float(np.linalg.norm(north)), 1e-300):
        raise DegenerateGeometryError("reference direction is collinear with the boresight")
    up /= up_norm
    y_axis = -up                    # v grows downward in the image
    x_axis = np.cross(y_axis, z_axis)
    orientation = np.vstack([x_axis, y_axis, z_axis])
    orientation.setflags(write=False)
    return CameraPose(Lclf.from_array(p), orientation)


def project(point: Vector, pose: CameraPose, cam: CameraModel,
            margin: float = 0.0) -> Optional[Tuple[float, float]]:
    """Pinhole projection; None when the point is behind the camera or outside the image"""
    d = pose.orientation @ (_as_vec(point) - pose.position.as_array())
    if d[2] <= 0.0:
        return None
    u = cam.cu + cam.focal_px * d[0] / d[2]
    v = cam.cv + cam.focal_px * d[1] / d[2]
    if not cam.in_image(u, v, margin):
        return None
    return float(u), float(v)


def project_points(points: np.ndarray, pose: CameraPose,
                   cam: CameraModel) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized projection without culling: returns (uv (N, 2), depth (N,))"""
    d = (np.atleast_2d(points) - pose.position.as_array()) @ pose.orientation.T
    depth = d[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        uv = np.stack([cam.cu + cam.focal_px * d[:, 0] / depth,
                       cam.cv + cam.focal_px * d[:, 1] / depth], axis=-1)
    return uv, depth


def pixel_ray(u: float, v: float, pose: CameraPose, cam: CameraModel) -> np.ndarray:
    """Unit line-of-sight through pixel (u, v), in LCLF"""
    ray = np.array([(u - cam.cu) / cam.focal_px, (v - cam.cv) / cam.focal_px, 1.0])
    ray = pose.orientation.T @ ray
    return ray / np.linalg.norm(ray)


def ray_sphere(origin: np.ndarray, direction: np.ndarray, radius: float = R_MOON) -> Optional[np.ndarray]:
    """Nearest forward intersection of a ray with the sphere, None on a miss"""
    b = float(np.dot(origin, direction))
    c = float(np.dot(origin, origin)) - radius * radius
    disc = b * b - c
    if disc < 0.0:
        return None
    t = -b - math.sqrt(disc)
    if t < 0.0:
        return None
    return origin + t * direction


def _visible_on_surface(point: np.ndarray, camera: np.ndarray) -> bool:
    return float(np.dot(point - camera, point)) < 0.0


def _boundary_pixels(cam: CameraModel) -> np.ndarray:
    us = np.linspace(0.0, cam.width_px, _EDGE_SAMPLES)
    vs = np.linspace(0.0, cam.height_px, _EDGE_SAMPLES)[1:-1]
    return np.concatenate([
        np.column_stack([us, np.zeros_like(us)]),
        np.column_stack([us, np.full_like(us, float(cam.height_px))]),
        np.column_stack([np.zeros_like(vs), vs]),
        np.column_stack([np.full_like(vs, float(cam.width_px)), vs]),
    ])


def _pixel_rays(uv: np.ndarray, pose: CameraPose, cam: CameraModel) -> np.ndarray:
    """Unit lines of sight (N, 3) through pixels uv (N, 2), in LCLF"""
    uv = np.atleast_2d(uv)
    rays = np.column_stack([(uv[:, 0] - cam.cu) / cam.focal_px, (uv[:, 1] - cam.cv) / cam.focal_px,
                            np.ones(len(uv))]) @ pose.orientation
    return rays / np.linalg.norm(rays, axis=1, keepdims=True)


def _ray_sphere_many(origin: np.ndarray, directions: np.ndarray,
                     radius: float = R_MOON) -> Optional[np.ndarray]:
    """Forward intersections (N, 3) for rays sharing an origin, None if any ray misses"""
    b = directions @ origin
    disc = b * b - (float(np.dot(origin, origin)) - radius * radius)
    if np.any(disc < 0.0):
        return None
    t = -b - np.sqrt(disc)
    if np.any(t < 0.0):
        return None
    return origin + t[:, None] * directions


def _inflate(lat_min, lat_max, lon_c, dlon_min, dlon_max, margin, full_lon=False) -> GeoBox:
    lat_pad = margin * (lat_max - lat_min)
    lat_min = max(lat_min - lat_pad, -math.pi / 2)
    lat_max = min(lat_max + lat_pad, math.pi / 2)
    lon_pad = margin * (dlon_max - dlon_min)
    dlon_min -= lon_pad
    dlon_max += lon_pad
    if full_lon or dlon_max - dlon_min >= 2.0 * math.pi:
        return GeoBox(lat_min, lat_max, -math.pi, math.pi)
    return GeoBox(lat_min, lat_max, normalize_lon(lon_c + dlon_min), normalize_lon(lon_c + dlon_max))


def footprint_bounds(pose: CameraPose, cam: CameraModel, margin: float = 0.1,
                     moon_radius: float = R_MOON) -> GeoBox:
    """Lat/lon box around the ground intersection of the viewing frustum.

    The box is inflated by `margin` times its extent on each side. When an image edge ray
    misses the Moon the visible horizon cap is bounded instead.
    """
    origin = pose.position.as_array()
    center = ray_sphere(origin, pose.boresight, moon_radius)
    if center is None:
        raise NoFootprintError("boresight does not intersect the Moon")
    (lat_c,), (lon_c,) = lclf_arrays_to_latlon(center)

    hits = _ray_sphere_many(origin, _pixel_rays(_boundary_pixels(cam), pose, cam), moon_radius)
    if hits is None:
        return _horizon_cap_bounds(origin, margin, moon_radius)
    lat, lon = lclf_arrays_to_latlon(hits)
    # wrapped into (-pi, pi] like normalize_lon
    dlon = math.pi - np.mod(math.pi - (lon - lon_c), 2.0 * math.pi)

    lat_min, lat_max = float(lat.min()), float(lat.max())
    full_lon = False
    for sign in (1.0, -1.0):
        pole = np.array([0.0, 0.0, sign * moon_radius])
        if _visible_on_surface(pole, origin) and project(pole, pose, cam) is not None:
            full_lon = True
            if sign > 0:
                lat_max = math.pi / 2
            else:
                lat_min = -math.pi / 2
    return _inflate(lat_min, lat_max, lon_c, float(dlon.min()), float(dlon.max()), margin, full_lon)


def _horizon_cap_bounds(origin: np.ndarray, margin: float, moon_radius: float) -> GeoBox:
    r = float(np.linalg.norm(origin))
    theta = math.acos(moon_radius / r)
    (lat0,), (lon0,) = lclf_arrays_to_latlon(origin)
    lat_min, lat_max = lat0 - theta, lat0 + theta
    if lat_max >= math.pi / 2 or lat_min <= -math.pi / 2:
        return _inflate(max(lat_min, -math.pi / 2), min(lat_max, math.pi / 2), lon0, -math.pi, math.pi,
                        margin, full_lon=True)
    dlon = math.asin(min(1.0, math.sin(theta) / math.cos(lat0)))
    return _inflate(lat_min, lat_max, lon0, -dlon, dlon, margin)
