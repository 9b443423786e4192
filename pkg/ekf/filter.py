"""
Feature-augmenting extended Kalman filter.

State layout is [V_c(3), X_c(3), X_F1(3), ..., X_FN(3)] in LCLF. Each crater feature is measured
as the unit line of sight z = (X_F - X_c) / |X_F - X_c|.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from geometry.frames import geodetic_to_lclf
from model.errors import DegenerateGeometryError, DuplicateFeatureError, MeasurementError, UnknownFeatureError
from model.models import CameraModel, CameraPose, CraterMatch, CraterRecord

logger = logging.getLogger(__name__)

UNIT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class FilterParams:
    accel_noise_std: float = 0.1            # m/s^2, white acceleration per step
    meas_noise_std: float = 1.5 / 400.0     # per unit-vector component
    feature_init_std: float = 50.0          # m
    init_pos_std: float = 1.0               # m
    init_vel_std: float = 0.1               # m/s
    update_on_first_sighting: bool = False
    stale_after_steps: int = 20             # features unseen this long are marginalized out, 0 keeps all

    def __post_init__(self):
        for name in ("accel_noise_std", "meas_noise_std", "feature_init_std", "init_pos_std", "init_vel_std"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive, got {value}")
        if self.stale_after_steps < 0:
            raise ValueError(f"stale_after_steps must be non-negative, got {self.stale_after_steps}")


@dataclass
class TrackCount:
    consecutive: int = 0
    total: int = 0
    last_step: int = -1
    longest: int = 0


@dataclass
class NavState:
    x: np.ndarray
    P: np.ndarray
    features: Dict[str, int] = field(default_factory=dict)     # crater id -> registry index, insertion order
    k: int = 0
    track_lengths: Dict[str, TrackCount] = field(default_factory=dict)
    skipped_updates: int = 0

    @property
    def V(self) -> np.ndarray:
        return self.x[0:3]

    @property
    def X(self) -> np.ndarray:
        return self.x[3:6]

    @property
    def dim(self) -> int:
        return len(self.x)

    @property
    def n_features(self) -> int:
        return len(self.features)

    def feature_position(self, i: int) -> np.ndarray:
        return self.x[_feature_slice(i)]

    def copy(self) -> "NavState":
        return NavState(self.x.copy(), self.P.copy(), dict(self.features), self.k,
                        {cid: TrackCount(t.consecutive, t.total, t.last_step, t.longest)
                         for cid, t in self.track_lengths.items()},
                        self.skipped_updates)


@dataclass(frozen=True)
class Observation:
    index: int                  # feature registry index
    z: np.ndarray               # measured unit vector, camera -> feature
    record_id: str = ""
    first_sighting: bool = False


def _feature_slice(i: int) -> slice:
    return slice(6 + 3 * i, 9 + 3 * i)


def init(V: np.ndarray, X: np.ndarray, params: FilterParams) -> NavState:
    x = np.concatenate([np.asarray(V, dtype=float).reshape(3), np.asarray(X, dtype=float).reshape(3)])
    P = np.diag([params.init_vel_std ** 2] * 3 + [params.init_pos_std ** 2] * 3)
    return NavState(x, P)


def propagate(s: NavState, U: np.ndarray, dT: float, params: FilterParams) -> NavState:
    """Constant-acceleration step over dT driven by the measured acceleration U (in place)"""
    if not dT > 0:
        raise ValueError(f"dT must be positive, got {dT}")
    U = np.asarray(U, dtype=float).reshape(3)
    V_prev = s.x[0:3].copy()
    s.x[0:3] += U * dT
    s.x[3:6] += V_prev * dT + U * (dT * dT / 2.0)

    # P <- F P F^T with F = I + dT * E(X <- V)
    s.P[3:6, :] += dT * s.P[0:3, :]
    s.P[:, 3:6] += dT * s.P[:, 0:3]
    G = np.vstack([dT * np.eye(3), (dT * dT / 2.0) * np.eye(3)])
    s.P[0:6, 0:6] += params.accel_noise_std ** 2 * (G @ G.T)
    s.k += 1
    return s


def initialize_feature(s: NavState, record: CraterRecord, params: FilterParams) -> NavState:
    """Append the crater's catalog position to the state with an uncorrelated prior"""
    if record.id in s.features:
        raise DuplicateFeatureError(f"crater {record.id} is already a feature")
    position = geodetic_to_lclf(record.center).as_array()
    n = s.dim
    P = np.zeros((n + 3, n + 3))
    P[:n, :n] = s.P
    P[n:, n:] = np.eye(3) * params.feature_init_std ** 2
    s.x = np.concatenate([s.x, position])
    s.P = P
    s.features[record.id] = len(s.features)
    return s


def _line_of_sight(s: NavState, i: int) -> Tuple[np.ndarray, float]:
    if not 0 <= i < s.n_features:
        raise UnknownFeatureError(f"feature index {i} not registered (have {s.n_features})")
    d = s.feature_position(i) - s.X
    r = float(np.linalg.norm(d))
    if r == 0.0 or not math.isfinite(r):
        raise DegenerateGeometryError(f"feature {i} coincides with the camera")
    return d / r, r


def predict_measurement(s: NavState, i: int) -> np.ndarray:
    z, _ = _line_of_sight(s, i)
    return z


def _jacobian_blocks(s: NavState, i: int) -> Tuple[np.ndarray, np.ndarray]:
    """(z, dz/dX_F); dz/dX_c is the negative of the feature block"""
    z, r = _line_of_sight(s, i)
    return z, (np.eye(3) - np.outer(z, z)) / r


def measurement_jacobian(s: NavState, i: int) -> np.ndarray:
    """Dense 3 x dim rows: -(I - zz^T)/|d| on X_c, +(I - zz^T)/|d| on X_Fi, zero elsewhere"""
    _, hf = _jacobian_blocks(s, i)
    H = np.zeros((3, s.dim))
    H[:, 3:6] = -hf
    H[:, _feature_slice(i)] = hf
    return H


def update(s: NavState, observations: Sequence[Observation], params: FilterParams) -> NavState:
    """Stacked EKF update over the observed features, Joseph-form covariance (in place)"""
    if not observations:
        return s
    seen = set()
    for ob in observations:
        if not 0 <= ob.index < s.n_features:
            raise UnknownFeatureError(f"feature index {ob.index} not registered (have {s.n_features})")
        if ob.index in seen:
            raise MeasurementError(f"feature {ob.index} observed twice in one update")
        seen.add(ob.index)
        norm = float(np.linalg.norm(ob.z))
        if abs(norm - 1.0) > UNIT_TOLERANCE:
            raise MeasurementError(f"observation of feature {ob.index} is not unit length ({norm:.9f})")
    ordered = sorted(observations, key=lambda ob: ob.index)

    m = len(ordered)
    n = s.dim
    residual = np.empty(3 * m)
    blocks = []
    for k, ob in enumerate(ordered):
        z_pred, hf = _jacobian_blocks(s, ob.index)
        residual[3 * k:3 * k + 3] = ob.z - z_pred
        blocks.append((_feature_slice(ob.index), hf))

    # P H^T and H P H^T using only the camera and observed feature columns
    PHt = np.empty((n, 3 * m))
    for k, (fs, hf) in enumerate(blocks):
        PHt[:, 3 * k:3 * k + 3] = (s.P[:, fs] - s.P[:, 3:6]) @ hf.T
    S = np.empty((3 * m, 3 * m))
    for k, (fs, hf) in enumerate(blocks):
        S[3 * k:3 * k + 3, :] = hf @ (PHt[fs, :] - PHt[3:6, :])
    S += np.eye(3 * m) * params.meas_noise_std ** 2
    S = 0.5 * (S + S.T)

    try:
        factor = cho_factor(S, lower=True, check_finite=True)
    except (LinAlgError, ValueError) as e:
        s.skipped_updates += 1
        logger.warning(f"Step {s.k}: innovation covariance not positive definite, update skipped ({e})")
        return s
    K = cho_solve(factor, PHt.T).T

    s.x = s.x + K @ residual
    KPHt = K @ PHt.T
    P = s.P - KPHt - KPHt.T + K @ S @ K.T
    s.P = 0.5 * (P + P.T)
    return s


def back_project(u: float, v: float, pose: CameraPose, cam: CameraModel) -> Optional[np.ndarray]:
    """Unit line of sight through pixel (u, v) in LCLF, None when it is not finite"""
    ray = np.array([(u - cam.cu) / cam.focal_px, (v - cam.cv) / cam.focal_px, 1.0])
    if not np.all(np.isfinite(ray)):
        return None
    los = pose.orientation.T @ ray
    norm = float(np.linalg.norm(los))
    if not math.isfinite(norm) or norm == 0.0:
        return None
    return los / norm


def _count_sighting(s: NavState, crater_id: str) -> None:
    t = s.track_lengths.setdefault(crater_id, TrackCount())
    if t.last_step == s.k:
        return
    t.consecutive = t.consecutive + 1 if t.last_step == s.k - 1 else 1
    t.total += 1
    t.last_step = s.k
    t.longest = max(t.longest, t.consecutive)


def measure_from_match(s: NavState, m: CraterMatch, cam: CameraModel, pose: CameraPose,
                       params: FilterParams) -> Optional[Observation]:
    """Turn an accepted match into an observation, registering the crater on first sighting.

    Only the attitude of `pose` is used. Returns None when the detection cannot be back-projected.
    """
    z = back_project(m.detection.u, m.detection.v, pose, cam)
    if z is None:
        logger.debug(f"Step {s.k}: dropped degenerate back-projection for {m.record.id}")
        return None
    first = m.record.id not in s.features
    if first:
        initialize_feature(s, m.record, params)
    _count_sighting(s, m.record.id)
    return Observation(s.features[m.record.id], z, m.record.id, first)


def marginalize_features(s: NavState, crater_ids: Sequence[str]) -> NavState:
    """Remove features from the state (exact Gaussian marginal); remaining indices are compacted in order"""
    drop = set(crater_ids)
    unknown = drop - set(s.features)
    if unknown:
        raise UnknownFeatureError(f"not features: {sorted(unknown)}")
    if not drop:
        return s
    kept = [cid for cid in s.features if cid not in drop]
    cols = np.concatenate([np.arange(6)] + [np.arange(6 + 3 * s.features[cid], 9 + 3 * s.features[cid])
                                            for cid in kept]).astype(int)
    s.x = s.x[cols]
    s.P = s.P[np.ix_(cols, cols)]
    s.features = {cid: i for i, cid in enumerate(kept)}
    return s


def marginalize_stale(s: NavState, params: FilterParams) -> List[str]:
    """Marginalize features whose last matched sighting is more than stale_after_steps old"""
    if params.stale_after_steps <= 0:
        return []
    stale = [cid for cid in s.features
             if cid in s.track_lengths and s.k - s.track_lengths[cid].last_step > params.stale_after_steps]
    if stale:
        marginalize_features(s, stale)
        logger.debug(f"Step {s.k}: marginalized {len(stale)} stale features, {s.n_features} remain")
    return stale


def position_marginal(s: NavState) -> np.ndarray:
    return s.P[3:6, 3:6]


def feature_marginal(s: NavState, i: int) -> np.ndarray:
    fs = _feature_slice(i)
    return s.P[fs, fs]


def observations_for_update(observations: Sequence[Observation], params: FilterParams) -> List[Observation]:
    if params.update_on_first_sighting:
        return list(observations)
    return [ob for ob in observations if not ob.first_sighting]
