"""
Synthetic global crater catalog for self-contained runs
"""
import logging
import math

import numpy as np

from catalog.catalog import CraterCatalog, _source_for
from model.models import R_MOON, CraterRecord, Geodetic

logger = logging.getLogger(__name__)


def synthesize_catalog(n_craters: int, rng: np.random.Generator,
                       min_diameter: float = 5_000.0, max_diameter: float = 60_000.0,
                       slope: float = 2.0, id_prefix: str = "SYN") -> CraterCatalog:
    """Craters uniform on the sphere with a truncated power-law size distribution.

    The cumulative count above diameter D falls off as D**-slope between the two limits.
    """
    if n_craters < 0:
        raise ValueError(f"n_craters must be non-negative: {n_craters}")
    if not 0 < min_diameter < max_diameter:
        raise ValueError(f"invalid diameter range: [{min_diameter}, {max_diameter}]")
    if slope <= 0:
        raise ValueError(f"slope must be positive: {slope}")

    lat = np.arcsin(rng.uniform(-1.0, 1.0, n_craters))
    lon = rng.uniform(-math.pi, math.pi, n_craters)
    # inverse CDF of the truncated Pareto
    lo, hi = min_diameter ** -slope, max_diameter ** -slope
    diameter = (lo - rng.uniform(0.0, 1.0, n_craters) * (lo - hi)) ** (-1.0 / slope)

    width = max(6, len(str(n_craters)))
    records = tuple(
        CraterRecord(f"{id_prefix}{i:0{width}d}", Geodetic(float(lat[i]), float(lon[i]), R_MOON),
                     float(diameter[i]), _source_for(float(diameter[i])))
        for i in range(n_craters)
    )
    logger.info(f"Synthesized {n_craters} craters, diameters {min_diameter / 1000:.0f}-{max_diameter / 1000:.0f} km")
    return CraterCatalog(records)


def count_for_density(density_per_km2: float, moon_radius: float = R_MOON) -> int:
    area_km2 = 4.0 * math.pi * (moon_radius / 1000.0) ** 2
    return int(round(density_per_km2 * area_km2))
