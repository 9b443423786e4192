"""
Post-network stage of the crater detector: rim-prediction mask -> fitted ellipses
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import ndimage
from skimage.measure import EllipseModel
from skimage.morphology import skeletonize

from model.errors import MaskFormatError
from model.models import DetectedCrater

logger = logging.getLogger(__name__)

# 8-connectivity, so diagonal steps along a thinned rim stay one component
_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True, eq=False)
class PredictionMask:
    """8-bit grayscale image; bright pixels mark predicted crater rims"""
    intensities: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.intensities)
        if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
            raise MaskFormatError(f"mask must be a non-empty 2-D array, got shape {a.shape}")
        if a.dtype != np.uint8:
            if a.size and (np.any(a < 0) or np.any(a > 255) or not np.all(np.isfinite(a))):
                raise MaskFormatError("mask intensities must lie in [0, 255]")
            a = a.astype(np.uint8)
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "intensities", a)

    @property
    def width(self) -> int:
        return self.intensities.shape[1]

    @property
    def height(self) -> int:
        return self.intensities.shape[0]

    @classmethod
    def blank(cls, width: int = 256, height: int = 256) -> "PredictionMask":
        return cls(np.zeros((height, width), dtype=np.uint8))


@dataclass
class FitDiagnostics:
    chains: int = 0
    too_short: int = 0
    failed: int = 0
    too_elliptical: int = 0
    accepted: int = 0
    rejected_ratios: List[float] = field(default_factory=list)


def threshold_mask(m: PredictionMask, certainty: float = 0.90) -> PredictionMask:
    if not 0.0 < certainty < 1.0:
        raise ValueError(f"certainty must be in (0, 1), got {certainty}")
    on = m.intensities.astype(float) / 255.0 > certainty
    return PredictionMask(np.where(on, 255, 0).astype(np.uint8))


def erode_to_rims(binary: PredictionMask) -> PredictionMask:
    """Thin rim bands to single-pixel curves"""
    skeleton = skeletonize(binary.intensities > 0)
    return PredictionMask(skeleton.astype(np.uint8) * 255)


def extract_contours(skeleton: PredictionMask, min_pixels: int = 3) -> List[np.ndarray]:
    """One (N, 2) array of (u, v) pixel coordinates per 8-connected component with at least min_pixels"""
    labels, n = ndimage.label(skeleton.intensities > 0, structure=_EIGHT_CONNECTED)
    if n == 0:
        return []
    rows, cols = np.nonzero(labels)
    comp = labels[rows, cols]
    order = np.argsort(comp, kind="stable")
    rows, cols, comp = rows[order], cols[order], comp[order]
    bounds = np.searchsorted(comp, np.arange(1, n + 2))
    chains = []
    for k in range(n):
        lo, hi = bounds[k], bounds[k + 1]
        if hi - lo < min_pixels:
            continue
        chains.append(np.column_stack([cols[lo:hi], rows[lo:hi]]).astype(float))
    return chains


def _fit_one(chain: np.ndarray) -> Optional[DetectedCrater]:
    model = EllipseModel()
    try:
        with np.errstate(all="ignore"):
            ok = model.estimate(chain)
    except (np.linalg.LinAlgError, ValueError):
        return None
    if not ok or model.params is None:
        return None
    xc, yc, a, b, theta = (float(p) for p in model.params)
    if not all(math.isfinite(p) for p in (xc, yc, a, b, theta)):
        return None
    a, b = abs(a), abs(b)
    if min(a, b) <= 0.0:
        return None
    if b > a:
        a, b = b, a
        theta += math.pi / 2
    return DetectedCrater(xc, yc, 2.0 * a, 2.0 * b, math.fmod(theta, math.pi) % math.pi)


def fit_ellipses(chains: List[np.ndarray], min_axis_ratio: float = 0.85,
                 diagnostics: Optional[FitDiagnostics] = None) -> List[DetectedCrater]:
    """Least-squares ellipse per chain; chains under 5 pixels are skipped, elongated fits rejected"""
    diag = diagnostics if diagnostics is not None else FitDiagnostics()
    detections = []
    for chain in chains:
        diag.chains += 1
        if len(chain) < 5:
            diag.too_short += 1
            continue
        fitted = _fit_one(chain)
        if fitted is None:
            diag.failed += 1
            continue
        ratio = fitted.minor_axis / fitted.major_axis
        if ratio < min_axis_ratio:
            diag.too_elliptical += 1
            diag.rejected_ratios.append(ratio)
            continue
        diag.accepted += 1
        detections.append(fitted)
    logger.debug(f"Ellipse fit: {diag.accepted}/{diag.chains} accepted, {diag.too_short} short, "
                 f"{diag.failed} failed, {diag.too_elliptical} too elliptical")
    return detections


@dataclass
class MaskStages:
    binary: PredictionMask
    skeleton: PredictionMask
    chains: List[np.ndarray]
    detections: List[DetectedCrater]
    diagnostics: FitDiagnostics


def run_mask_pipeline(m: PredictionMask, certainty: float = 0.90, min_pixels: int = 3,
                      min_axis_ratio: float = 0.85) -> MaskStages:
    binary = threshold_mask(m, certainty)
    skeleton = erode_to_rims(binary)
    chains = extract_contours(skeleton, min_pixels)
    diagnostics = FitDiagnostics()
    detections = fit_ellipses(chains, min_axis_ratio, diagnostics)
    return MaskStages(binary, skeleton, chains, detections, diagnostics)


def detect_from_mask(m: PredictionMask, certainty: float = 0.90, min_pixels: int = 3,
                     min_axis_ratio: float = 0.85) -> List[DetectedCrater]:
    return run_mask_pipeline(m, certainty, min_pixels, min_axis_ratio).detections
