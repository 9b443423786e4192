from geometry.frames import geodetic_to_lclf, lclf_to_geodetic, geodetic_arrays_to_lclf, lclf_arrays_to_latlon
from geometry.camera import nadir_pose, project, project_points, pixel_ray, ray_sphere, footprint_bounds

__all__ = [
    'geodetic_to_lclf', 'lclf_to_geodetic', 'geodetic_arrays_to_lclf', 'lclf_arrays_to_latlon',
    'nadir_pose', 'project', 'project_points', 'pixel_ray', 'ray_sphere', 'footprint_bounds',
]
