"""
Closed-loop trial: truth orbit -> simulated detections -> identification -> filter
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from catalog.catalog import CraterCatalog
from detect.simulator import DetectionStats, simulate_detections
from ekf import filter as ekf
from geometry.camera import nadir_pose
from match.matching import expected_craters, identify
from model.errors import DegenerateGeometryError, NoFootprintError
from model.models import CameraPose, Lclf
from sim.config import TrialConfig
from sim.trajectory import generate_trajectory

logger = logging.getLogger(__name__)

FLAG_OK = "ok"
FLAG_LOW_CONFIDENCE = "low_confidence"
FLAG_UPDATE_SKIPPED = "update_skipped"
FLAG_DIVERGED = "diverged"


@dataclass(frozen=True)
class StepRecord:
    t_s: float
    pos_err_m: float
    vel_err_mps: float
    n_matched: int
    n_rejected: int
    state_dim: int
    flag: str = FLAG_OK
    n_visible: int = 0
    n_detections: int = 0
    n_false_matches: int = 0


@dataclass
class TrialResult:
    trial: int
    steps: List[StepRecord] = field(default_factory=list)
    diverged: bool = False
    mean_track_len: float = 0.0             # detector hits per distinct crater
    mean_craters: float = 0.0               # detections per frame
    feature_track_len: float = 0.0          # matched sightings per filter feature
    max_consecutive_track: int = 0
    accepted_matches: int = 0
    false_matches: int = 0
    skipped_updates: int = 0

    @property
    def final_pos_err(self) -> float:
        return self.steps[-1].pos_err_m if self.steps else 0.0

    @property
    def final_vel_err(self) -> float:
        return self.steps[-1].vel_err_mps if self.steps else 0.0

    @property
    def false_match_fraction(self) -> float:
        return self.false_matches / self.accepted_matches if self.accepted_matches else 0.0


@dataclass(frozen=True)
class TrialStreams:
    orbit: np.random.Generator
    imu: np.random.Generator
    detector: np.random.Generator
    ransac: np.random.Generator


def trial_streams(seed: int, trial_index: int) -> TrialStreams:
    """Independent generators derived from (seed, trial index)"""
    children = np.random.SeedSequence([seed, trial_index]).spawn(4)
    return TrialStreams(*(np.random.default_rng(c) for c in children))


def _step_flag(diverged: bool, skipped: bool, low_confidence: bool) -> str:
    if diverged:
        return FLAG_DIVERGED
    if skipped:
        return FLAG_UPDATE_SKIPPED
    if low_confidence:
        return FLAG_LOW_CONFIDENCE
    return FLAG_OK


def run_trial(cfg: TrialConfig, catalog: CraterCatalog, trial_index: int = 0) -> TrialResult:
    streams = trial_streams(cfg.seed, trial_index)
    truth = generate_trajectory(cfg, streams.orbit)
    cam = cfg.camera
    diam_range = (cfg.match.min_diameter_m, np.inf)
    result = TrialResult(trial_index)
    stats = DetectionStats()
    tracked_ids = set()

    state = ekf.init(truth.V[0], truth.X[0], cfg.filter)
    logger.debug(f"Trial {trial_index}: {truth.n_steps} steps, profile {cfg.profile.name}, "
                 f"brightness {cfg.brightness:+.2f}")

    for k in range(1, truth.n_steps + 1):
        U_meas = truth.U[k] + streams.imu.normal(0.0, cfg.imu_noise_std, 3)
        ekf.propagate(state, U_meas, cfg.dT, cfg.filter)

        pose_true = nadir_pose(truth.X[k], truth.up[k])
        visible = expected_craters(pose_true, cam, catalog, 0.0, cfg.match.footprint_margin, diam_range)
        frame = simulate_detections(visible, tracked_ids, cfg.profile, cfg.brightness, streams.detector, cam)
        tracked_ids = stats.record(frame)
        true_id_of: Dict[int, Optional[str]] = {id(d.detection): d.true_id for d in frame}

        diverged = False
        skipped_before = state.skipped_updates
        n_matched = n_rejected = n_false = 0
        low_confidence = False
        try:
            pose_est = nadir_pose(state.X, truth.up[k])
            ident = identify([d.detection for d in frame], pose_est, cam, catalog, cfg.match, streams.ransac)
        except (DegenerateGeometryError, NoFootprintError) as e:
            logger.warning(f"Trial {trial_index} step {k}: estimated pose unusable ({e})")
            diverged = True
        else:
            n_matched = len(ident.matches)
            n_rejected = ident.diagnostics.outliers
            low_confidence = ident.diagnostics.low_confidence and n_matched > 0
            n_false = sum(1 for m in ident.matches if true_id_of.get(id(m.detection)) != m.record.id)

            attitude = CameraPose(Lclf.from_array(state.X), pose_true.orientation)
            observations = [ob for ob in (ekf.measure_from_match(state, m, cam, attitude, cfg.filter)
                                          for m in ident.matches) if ob is not None]
            ekf.update(state, ekf.observations_for_update(observations, cfg.filter), cfg.filter)
            ekf.marginalize_stale(state, cfg.filter)

        pos_err = float(np.linalg.norm(state.X - truth.X[k]))
        vel_err = float(np.linalg.norm(state.V - truth.V[k]))
        if not np.isfinite(pos_err) or pos_err > cfg.bailout_m:
            diverged = True
        result.accepted_matches += n_matched
        result.false_matches += n_false
        result.steps.append(StepRecord(k * cfg.dT, pos_err, vel_err, n_matched, n_rejected, state.dim,
                                       _step_flag(diverged, state.skipped_updates > skipped_before, low_confidence),
                                       len(visible), len(frame), n_false))
        if diverged:
            result.diverged = True
            logger.warning(f"Trial {trial_index} diverged at t={k * cfg.dT:.1f} s, position error {pos_err:.1f} m")
            break

    result.mean_track_len = stats.mean_track_length
    result.mean_craters = stats.mean_detections_per_frame
    totals = [t.total for t in state.track_lengths.values()]
    result.feature_track_len = float(np.mean(totals)) if totals else 0.0
    result.max_consecutive_track = max((t.longest for t in state.track_lengths.values()), default=0)
    result.skipped_updates = state.skipped_updates
    logger.info(f"Trial {trial_index} ({cfg.profile.name}, {cfg.brightness:+.2f}): final position error "
                f"{result.final_pos_err:.3f} m, velocity error {result.final_vel_err:.4f} m/s, "
                f"{len(state.track_lengths)} craters tracked, {state.n_features} features in the state")
    return result
