"""
Truth trajectories: circular orbit segments sampled at the filter rate
"""
import math
from dataclasses import dataclass

import numpy as np

from model.models import MU_MOON, R_MOON
from sim.config import TrialConfig

ALONG_TRACK = "along_track"
NORTH = "north"


@dataclass(frozen=True, eq=False)
class Truth:
    """Samples k = 0..n. U[k] is the acceleration that carries state k-1 to state k (U[0] is unused)."""
    X: np.ndarray       # (n + 1, 3) m
    V: np.ndarray       # (n + 1, 3) m/s
    U: np.ndarray       # (n + 1, 3) m/s^2
    up: np.ndarray      # (n + 1, 3) image "up" reference per step
    dT: float

    @property
    def n_steps(self) -> int:
        return len(self.X) - 1


def circular_speed(radius: float, mu: float = MU_MOON) -> float:
    return math.sqrt(mu / radius)


def _orbit_basis(rng: np.random.Generator, image_up: str, max_inclination_deg: float):
    if image_up == NORTH:
        cos_i = rng.uniform(math.cos(math.radians(max_inclination_deg)), 1.0)
    else:
        cos_i = rng.uniform(-1.0, 1.0)
    sin_i = math.sqrt(max(0.0, 1.0 - cos_i * cos_i))
    raan = rng.uniform(0.0, 2.0 * math.pi)
    e1 = np.array([math.cos(raan), math.sin(raan), 0.0])
    normal = np.array([sin_i * math.sin(raan), -sin_i * math.cos(raan), cos_i])
    e2 = np.cross(normal, e1)
    return e1, e2


def circular_segment(altitude_m: float, duration_s: float, dT: float, rng: np.random.Generator,
                     speed_mps: float = None, image_up: str = ALONG_TRACK, max_inclination_deg: float = 80.0,
                     mu: float = MU_MOON, moon_radius: float = R_MOON) -> Truth:
    """Circular orbit segment in a random plane with a random start phase.

    Positions lie exactly on the circle; velocities and accelerations are chosen so that
    V_k = V_{k-1} + U_k dT and X_k = X_{k-1} + V_{k-1} dT + U_k dT^2 / 2 hold exactly.
    """
    if not dT > 0 or duration_s < dT or altitude_m <= 0:
        raise ValueError(f"invalid trajectory parameters: altitude={altitude_m}, duration={duration_s}, dT={dT}")
    n = int(math.floor(duration_s / dT + 1e-9))
    r = moon_radius + altitude_m
    speed = speed_mps if speed_mps is not None else circular_speed(r, mu)
    phi = speed * dT / r

    e1, e2 = _orbit_basis(rng, image_up, max_inclination_deg)
    theta = rng.uniform(0.0, 2.0 * math.pi) + phi * np.arange(n + 1)
    c, s = np.cos(theta)[:, None], np.sin(theta)[:, None]
    X = r * (c * e1 + s * e2)
    tangent = -s * e1 + c * e2
    V = (2.0 * r * math.tan(phi / 2.0) / dT) * tangent
    U = np.zeros_like(V)
    U[1:] = (V[1:] - V[:-1]) / dT
    U[0] = -(speed * speed / r) * X[0] / r

    if image_up == NORTH:
        up = np.tile(np.array([0.0, 0.0, 1.0]), (n + 1, 1))
    else:
        up = tangent
    for a in (X, V, U, up):
        a.setflags(write=False)
    return Truth(X, V, U, up, dT)


def generate_trajectory(cfg: TrialConfig, rng: np.random.Generator) -> Truth:
    return circular_segment(cfg.altitude_m, cfg.duration_s, cfg.dT, rng, cfg.speed_mps, cfg.image_up,
                            cfg.max_inclination_deg)
