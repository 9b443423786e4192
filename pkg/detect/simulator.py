"""
Statistical crater detector with per-crater detection persistence
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from model.models import CameraModel, DetectedCrater, ExpectedCrater

logger = logging.getLogger(__name__)

_SCALED_FIELDS = ("p_detect_new", "p_redetect", "center_noise", "diameter_noise", "false_rate", "mismatch_rate")


@dataclass(frozen=True)
class BrightnessResponse:
    """Multipliers applied to a profile's base parameters at one brightness offset"""
    p_detect_new: float = 1.0
    p_redetect: float = 1.0
    center_noise: float = 1.0
    diameter_noise: float = 1.0
    false_rate: float = 1.0
    mismatch_rate: float = 1.0

    def __post_init__(self):
        for name in _SCALED_FIELDS:
            if getattr(self, name) < 0:
                raise ValueError(f"brightness multiplier {name} must be non-negative")


@dataclass(frozen=True)
class DetectorProfile:
    name: str
    p_detect_new: float
    p_redetect: float
    center_noise: float = 0.0           # px, per axis
    diameter_noise: float = 0.0         # relative
    false_rate: float = 0.0             # expected false detections per frame
    mismatch_rate: float = 0.0          # fraction of false detections planted near a wrong crater
    mismatch_offset_px: float = 4.0     # per-axis std of a planted detection around that crater
    false_diameter_px: Tuple[float, float] = (10.0, 60.0)
    brightness_response: Mapping[float, BrightnessResponse] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("p_detect_new", "p_redetect", "mismatch_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"profile {self.name}: {name} must be a probability, got {value}")
        for name in ("center_noise", "diameter_noise", "false_rate", "mismatch_offset_px"):
            if getattr(self, name) < 0:
                raise ValueError(f"profile {self.name}: {name} must be non-negative")
        lo, hi = self.false_diameter_px
        if not 0 < lo <= hi:
            raise ValueError(f"profile {self.name}: invalid false_diameter_px {self.false_diameter_px}")

    def response(self, brightness: float) -> BrightnessResponse:
        """Piecewise-linear in the brightness offset; an unlisted zero offset is the identity"""
        table = dict(self.brightness_response)
        table.setdefault(0.0, BrightnessResponse())
        offsets = sorted(table)
        for o in offsets:
            if abs(o - brightness) < 1e-9:
                return table[o]
        values = {name: float(np.interp(brightness, offsets, [getattr(table[o], name) for o in offsets]))
                  for name in _SCALED_FIELDS}
        return BrightnessResponse(**values)

    def at_brightness(self, brightness: float) -> "DetectorProfile":
        """The profile with the brightness multipliers folded in (no further response table)"""
        r = self.response(brightness)
        scaled = {name: getattr(self, name) * getattr(r, name) for name in _SCALED_FIELDS}
        return replace(self, brightness_response={}, **scaled)


@dataclass(frozen=True)
class SimulatedDetection:
    detection: DetectedCrater
    true_id: Optional[str]              # None for false detections


def simulate_detections(visible: Sequence[ExpectedCrater], tracked_ids: Set[str], profile: DetectorProfile,
                        brightness: float, rng: np.random.Generator,
                        cam: CameraModel = CameraModel()) -> List[SimulatedDetection]:
    """One frame of detector output for the craters in view.

    A crater whose id is in tracked_ids is re-detected with p_redetect, any other with p_detect_new.
    """
    p = profile.at_brightness(brightness)
    out: List[SimulatedDetection] = []

    draws = rng.random(len(visible))
    detected = np.zeros(len(visible), dtype=bool)
    for k, crater in enumerate(visible):
        prob = p.p_redetect if crater.record.id in tracked_ids else p.p_detect_new
        detected[k] = draws[k] < prob
    noise = rng.standard_normal((int(detected.sum()), 3))
    for crater, n in zip((c for c, d in zip(visible, detected) if d), noise):
        diameter = max(crater.diameter * (1.0 + p.diameter_noise * n[2]), 0.5)
        det = DetectedCrater(crater.u + p.center_noise * n[0], crater.v + p.center_noise * n[1],
                             diameter, diameter, 0.0)
        out.append(SimulatedDetection(det, crater.record.id))

    n_false = int(rng.poisson(p.false_rate)) if p.false_rate > 0 else 0
    lo, hi = p.false_diameter_px
    for _ in range(n_false):
        # any visible crater is a wrong one for a false detection
        if visible and rng.random() < p.mismatch_rate:
            target = visible[int(rng.integers(len(visible)))]
            du, dv, dd = rng.standard_normal(3)
            diameter = max(target.diameter * (1.0 + p.diameter_noise * dd), 0.5)
            det = DetectedCrater(target.u + p.mismatch_offset_px * du, target.v + p.mismatch_offset_px * dv,
                                 diameter, diameter, 0.0)
        else:
            u, v = rng.uniform(0.0, cam.width_px), rng.uniform(0.0, cam.height_px)
            diameter = rng.uniform(lo, hi)
            det = DetectedCrater(u, v, diameter, diameter, 0.0)
        out.append(SimulatedDetection(det, None))
    return out


@dataclass
class DetectionStats:
    """Detector-level counters over one trajectory"""
    frames: int = 0
    detections: int = 0
    false_detections: int = 0
    hits: Dict[str, int] = field(default_factory=dict)

    def record(self, frame: Iterable[SimulatedDetection]) -> Set[str]:
        """Count one frame and return the true ids it emitted"""
        self.frames += 1
        emitted = set()
        for d in frame:
            self.detections += 1
            if d.true_id is None:
                self.false_detections += 1
            else:
                emitted.add(d.true_id)
                self.hits[d.true_id] = self.hits.get(d.true_id, 0) + 1
        return emitted

    @property
    def mean_track_length(self) -> float:
        return float(np.mean(list(self.hits.values()))) if self.hits else 0.0

    @property
    def mean_detections_per_frame(self) -> float:
        return self.detections / self.frames if self.frames else 0.0
