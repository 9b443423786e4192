"""
Crater identification: expected craters, least-squares pairing and consensus filtering
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from skimage.measure import ransac
from skimage.transform import AffineTransform

from catalog.catalog import DEFAULT_DIAM_RANGE, CraterCatalog, query_box_indices
from geometry.camera import footprint_bounds, project_points
from model.models import CameraModel, CameraPose, CraterMatch, DetectedCrater, ExpectedCrater

logger = logging.getLogger(__name__)

TRANSLATION = "translation"
AFFINE = "affine"
MIN_AFFINE_PAIRS = 6


@dataclass(frozen=True)
class MatchParams:
    gate_fraction: float = 0.15         # gate = (gate_fraction * width_px)^2, in cost units
    diameter_weight: float = 1.0
    inlier_tol_px: float = 5.0
    min_pairs: int = 3
    iterations: int = 100
    model: str = TRANSLATION
    expected_margin: float = 0.0        # fraction of the image size
    footprint_margin: float = 0.1
    min_diameter_m: float = DEFAULT_DIAM_RANGE[0]

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.min_pairs < 1:
            raise ValueError(f"min_pairs must be >= 1, got {self.min_pairs}")
        if self.model not in (TRANSLATION, AFFINE):
            raise ValueError(f"unknown consensus model: {self.model}")
        if self.inlier_tol_px <= 0 or self.gate_fraction <= 0:
            raise ValueError("inlier_tol_px and gate_fraction must be positive")

    def gate(self, cam: CameraModel) -> float:
        return (self.gate_fraction * cam.width_px) ** 2


@dataclass(frozen=True)
class CandidatePair:
    detection: DetectedCrater
    expected: ExpectedCrater
    cost: float

    @property
    def translation(self) -> Tuple[float, float]:
        return self.expected.u - self.detection.u, self.expected.v - self.detection.v


@dataclass(frozen=True)
class RansacResult:
    inliers: List[CandidatePair]
    outliers: List[CandidatePair]
    low_confidence: bool
    model: Optional[np.ndarray] = None      # (2,) translation or (2, 3) affine


@dataclass
class IdentifyDiagnostics:
    detections: int = 0
    expected: int = 0
    candidates: int = 0
    gated: int = 0
    outliers: int = 0
    low_confidence: bool = False


@dataclass
class Identification:
    matches: List[CraterMatch] = field(default_factory=list)
    diagnostics: IdentifyDiagnostics = field(default_factory=IdentifyDiagnostics)


def expected_craters(pose: CameraPose, cam: CameraModel, cat: CraterCatalog, margin: float = 0.0,
                     footprint_margin: float = 0.1,
                     diam_range: Tuple[float, float] = DEFAULT_DIAM_RANGE) -> List[ExpectedCrater]:
    """Catalog craters inside the footprint box projected with `pose`, in id order"""
    if len(cat) == 0:
        return []
    box = footprint_bounds(pose, cam, footprint_margin)
    idx = query_box_indices(cat, box, diam_range)
    if len(idx) == 0:
        return []
    uv, depth = project_points(cat.positions[idx], pose, cam)
    mu, mv = margin * cam.width_px, margin * cam.height_px
    with np.errstate(invalid="ignore"):
        keep = ((depth > 0) & (uv[:, 0] >= -mu) & (uv[:, 0] <= cam.width_px + mu)
                & (uv[:, 1] >= -mv) & (uv[:, 1] <= cam.height_px + mv))
    out = []
    for k in np.flatnonzero(keep):
        i = idx[k]
        diameter_px = cam.focal_px * cat.diameter[i] / depth[k]
        out.append(ExpectedCrater(cat.records[i], float(uv[k, 0]), float(uv[k, 1]), float(diameter_px)))
    return out


def lms_pair(detections: Sequence[DetectedCrater], expected: Sequence[ExpectedCrater], gate: float,
             weight: float = 1.0) -> List[CandidatePair]:
    """Greedy one-to-one pairing by ascending cost |dc|^2 + weight * dd^2, pairs above the gate dropped.

    Ties resolve by expected-crater id and then detection position, so the result does not
    depend on the input order. Output is sorted by expected-crater id.
    """
    if not detections or not expected:
        return []
    det = np.array([[d.u, d.v, d.diameter] for d in detections], dtype=float)
    exp = np.array([[e.u, e.v, e.diameter] for e in expected], dtype=float)
    du = det[:, None, 0] - exp[None, :, 0]
    dv = det[:, None, 1] - exp[None, :, 1]
    dd = det[:, None, 2] - exp[None, :, 2]
    cost = du * du + dv * dv + weight * dd * dd

    rows, cols = np.nonzero(cost <= gate)
    candidates = sorted(
        zip(rows.tolist(), cols.tolist()),
        key=lambda ij: (cost[ij], expected[ij[1]].record.id, det[ij[0], 0], det[ij[0], 1], det[ij[0], 2]),
    )
    used_det, used_exp = set(), set()
    pairs = []
    for i, j in candidates:
        if i in used_det or j in used_exp:
            continue
        used_det.add(i)
        used_exp.add(j)
        pairs.append(CandidatePair(detections[i], expected[j], float(cost[i, j])))
    pairs.sort(key=lambda p: p.expected.record.id)
    return pairs


def _translations(pairs: Sequence[CandidatePair]) -> np.ndarray:
    return np.array([p.translation for p in pairs], dtype=float).reshape(-1, 2)


def _translation_consensus(t: np.ndarray, tol: float, iterations: int,
                           rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    samples = rng.integers(len(t), size=iterations)
    hypotheses = t[samples]
    dist = np.linalg.norm(t[None, :, :] - hypotheses[:, None, :], axis=2)
    support = (dist <= tol).sum(axis=1)
    model = hypotheses[int(np.argmax(support))]
    inliers = np.linalg.norm(t - model, axis=1) <= tol
    # refit on the consensus set until it stops changing
    for _ in range(5):
        refit = t[inliers].mean(axis=0)
        refit_inliers = np.linalg.norm(t - refit, axis=1) <= tol
        if not refit_inliers.any() or refit_inliers.sum() < inliers.sum():
            break
        changed = not np.array_equal(refit_inliers, inliers)
        model, inliers = refit, refit_inliers
        if not changed:
            break
    return model, inliers


def _affine_consensus(src: np.ndarray, dst: np.ndarray, tol: float, iterations: int,
                      rng: np.random.Generator) -> Tuple[Optional[np.ndarray], np.ndarray]:
    fitted, inliers = ransac((src, dst), AffineTransform, min_samples=3, residual_threshold=tol,
                             max_trials=iterations, rng=rng)
    if fitted is None or inliers is None:
        return None, np.zeros(len(src), dtype=bool)
    return fitted.params[:2, :], np.asarray(inliers, dtype=bool)


def ransac_filter(pairs: Sequence[CandidatePair], rng: np.random.Generator, inlier_tol: float = 5.0,
                  min_pairs: int = 3, iterations: int = 100, model: str = TRANSLATION) -> RansacResult:
    """Split pairs into a translation-consistent (or affine-consistent) set and the rest"""
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if min_pairs < 1:
        raise ValueError(f"min_pairs must be >= 1, got {min_pairs}")
    pairs = list(pairs)
    if len(pairs) < min_pairs:
        return RansacResult(pairs, [], low_confidence=True)

    if model == AFFINE and len(pairs) >= MIN_AFFINE_PAIRS:
        src = np.array([p.detection.center for p in pairs], dtype=float)
        dst = np.array([p.expected.center for p in pairs], dtype=float)
        fitted, mask = _affine_consensus(src, dst, inlier_tol, iterations, rng)
        if fitted is not None:
            return RansacResult([p for p, m in zip(pairs, mask) if m],
                                [p for p, m in zip(pairs, mask) if not m], False, fitted)
        logger.debug("Affine consensus degenerate, falling back to translation")

    fitted, mask = _translation_consensus(_translations(pairs), inlier_tol, iterations, rng)
    return RansacResult([p for p, m in zip(pairs, mask) if m],
                        [p for p, m in zip(pairs, mask) if not m], False, fitted)


def identify(detections: Sequence[DetectedCrater], pose: CameraPose, cam: CameraModel, cat: CraterCatalog,
             params: MatchParams, rng: np.random.Generator) -> Identification:
    result = Identification()
    diag = result.diagnostics
    diag.detections = len(detections)
    if not detections:
        return result

    expected = expected_craters(pose, cam, cat, params.expected_margin, params.footprint_margin,
                                (params.min_diameter_m, np.inf))
    diag.expected = len(expected)
    pairs = lms_pair(detections, expected, params.gate(cam), params.diameter_weight)
    diag.candidates = len(pairs)
    diag.gated = len(detections) - len(pairs)
    consensus = ransac_filter(pairs, rng, params.inlier_tol_px, params.min_pairs, params.iterations, params.model)
    diag.outliers = len(consensus.outliers)
    diag.low_confidence = consensus.low_confidence

    result.matches = [CraterMatch(p.detection, p.expected.record, p.translation, p.cost) for p in consensus.inliers]
    logger.debug(f"identify: {diag.detections} detections, {diag.expected} expected, {diag.candidates} paired, "
                 f"{diag.outliers} rejected")
    return result
