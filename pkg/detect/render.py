"""
Synthetic rim-prediction masks: annular rings on a black background
"""
import math
from dataclasses import dataclass
from typing import Iterable, Tuple, Union

import numpy as np

from detect.mask import PredictionMask
from model.errors import MaskBoundsError


@dataclass(frozen=True)
class RimSpec:
    u: float
    v: float
    radius: float                   # px, semi-major axis
    axis_ratio: float = 1.0         # minor / major
    orientation: float = 0.0        # rad, major axis from +u toward +v

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"ring radius must be positive: {self.radius}")
        if not 0.0 < self.axis_ratio <= 1.0:
            raise ValueError(f"axis_ratio must be in (0, 1]: {self.axis_ratio}")


RimLike = Union[RimSpec, Tuple[float, float, float]]


def _as_spec(c: RimLike) -> RimSpec:
    return c if isinstance(c, RimSpec) else RimSpec(float(c[0]), float(c[1]), float(c[2]))


def render_rim_mask(craters: Iterable[RimLike], width: int = 256, height: int = 256,
                    thickness: float = 2.0, intensity: int = 255) -> PredictionMask:
    """Draw every pixel whose first-order distance to a rim ellipse is within thickness / 2.

    Pixel (row i, column j) is centered at (u, v) = (j, i). Overlapping rings are unioned.
    """
    if thickness <= 0:
        raise ValueError(f"thickness must be positive: {thickness}")
    if not 0 <= intensity <= 255:
        raise ValueError(f"intensity must be in [0, 255]: {intensity}")
    image = np.zeros((height, width), dtype=np.uint8)
    half = thickness / 2.0
    for crater in craters:
        spec = _as_spec(crater)
        a = spec.radius
        b = spec.radius * spec.axis_ratio
        reach = a + half
        if spec.u - a < 0 or spec.v - a < 0 or spec.u + a > width - 1 or spec.v + a > height - 1:
            raise MaskBoundsError(f"ring at ({spec.u}, {spec.v}) radius {a} leaves the {width}x{height} image")

        j0, j1 = max(0, math.floor(spec.u - reach)), min(width - 1, math.ceil(spec.u + reach))
        i0, i1 = max(0, math.floor(spec.v - reach)), min(height - 1, math.ceil(spec.v + reach))
        vv, uu = np.mgrid[i0:i1 + 1, j0:j1 + 1].astype(float)
        c, s = math.cos(spec.orientation), math.sin(spec.orientation)
        x = c * (uu - spec.u) + s * (vv - spec.v)
        y = -s * (uu - spec.u) + c * (vv - spec.v)
        f = x * x / (a * a) + y * y / (b * b) - 1.0
        grad = 2.0 * np.hypot(x / (a * a), y / (b * b))
        with np.errstate(divide="ignore", invalid="ignore"):
            dist = np.abs(f) / grad
        on = np.isfinite(dist) & (dist <= half)
        region = image[i0:i1 + 1, j0:j1 + 1]
        region[on] = np.maximum(region[on], intensity)
    return PredictionMask(image)
