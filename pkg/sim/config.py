"""
Run configuration: YAML defaults + user file + overrides, validated with pydantic
"""
import copy
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from detect.simulator import BrightnessResponse, DetectorProfile
from ekf.filter import FilterParams
from match.matching import MatchParams
from model.errors import ConfigError
from model.models import CameraModel
from resources.default_config import get_default_config
from resources.detector_profiles import get_detector_profiles

MIN_MEAS_NOISE_STD = 1e-6


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TrialSection(_Section):
    altitude_m: float = Field(100_000.0, gt=0, description="Circular orbit altitude above the reference sphere")
    speed_mps: Optional[float] = Field(None, gt=0, description="Orbital speed; circular speed when null")
    duration_s: float = Field(500.0, gt=0, description="Trajectory length")
    dT: float = Field(2.5, gt=0, description="Time between filter updates")
    imu_noise_std: float = Field(0.1, ge=0, description="Per-axis accelerometer noise, m/s^2")
    image_up: Literal["along_track", "north"] = Field("along_track", description="Image up reference direction")
    max_inclination_deg: float = Field(80.0, gt=0, le=90, description="Inclination cap when image_up is north")
    bailout_m: float = Field(10_000.0, gt=0, description="Position error at which a trial is abandoned")

    @model_validator(mode="after")
    def _duration_covers_a_step(self):
        if self.duration_s < self.dT:
            raise ValueError(f"duration_s ({self.duration_s}) must be at least dT ({self.dT})")
        return self


class DetectorSection(_Section):
    profile: str = Field("lunanet", description="Detector preset name")
    brightness: float = Field(0.0, ge=-1.0, le=1.0, description="Image brightness offset, e.g. -0.3 / 0 / +0.3")


class CameraSection(_Section):
    focal_px: float = Field(400.0, gt=0)
    width_px: int = Field(256, gt=0)
    height_px: int = Field(256, gt=0)
    cu: Optional[float] = Field(None, description="Principal point u; image center when null")
    cv: Optional[float] = Field(None, description="Principal point v; image center when null")


class FilterSection(_Section):
    accel_noise_std: float = Field(0.1, gt=0)
    meas_noise_std: Optional[float] = Field(None, gt=0, description="Unit-vector noise; center_noise/focal when null")
    feature_init_std: float = Field(50.0, gt=0)
    init_pos_std: float = Field(1.0, gt=0)
    init_vel_std: float = Field(0.1, gt=0)
    update_on_first_sighting: bool = False
    stale_after_steps: int = Field(20, ge=0, description="Steps without a sighting before a feature is dropped")


class MatchSection(_Section):
    gate_fraction: float = Field(0.15, gt=0)
    diameter_weight: float = Field(1.0, ge=0)
    inlier_tol_px: float = Field(5.0, gt=0)
    min_pairs: int = Field(3, ge=1)
    iterations: int = Field(100, ge=1)
    model: Literal["translation", "affine"] = "translation"
    expected_margin: float = Field(0.05, ge=0)
    footprint_margin: float = Field(0.1, ge=0)
    min_diameter_km: float = Field(5.0, ge=0)


class SyntheticCatalogSection(_Section):
    density_per_km2: float = Field(0.0053, gt=0)
    min_diameter_km: float = Field(5.0, gt=0)
    max_diameter_km: float = Field(60.0, gt=0)
    slope: float = Field(2.0, gt=0)
    seed: int = 2024

    @model_validator(mode="after")
    def _ordered(self):
        if self.max_diameter_km <= self.min_diameter_km:
            raise ValueError("max_diameter_km must exceed min_diameter_km")
        return self


class CatalogSection(_Section):
    path: Optional[str] = Field(None, description="Catalog file; a synthetic catalog is generated when null")
    synthetic: SyntheticCatalogSection = Field(default_factory=SyntheticCatalogSection)


class MonteCarloSection(_Section):
    trials: int = Field(100, ge=1)
    seed: int = Field(0, ge=0)
    workers: Optional[int] = Field(None, ge=1)
    include_diverged: bool = True


class CompareSection(_Section):
    profiles: List[str] = Field(default_factory=lambda: ["lunanet", "trinary"], min_length=1)
    brightness: List[float] = Field(default_factory=lambda: [-0.3, 0.0, 0.3], min_length=1)
    trials: int = Field(20, ge=1)


class ProfileSection(_Section):
    p_detect_new: float = Field(..., ge=0, le=1)
    p_redetect: float = Field(..., ge=0, le=1)
    center_noise: float = Field(0.0, ge=0)
    diameter_noise: float = Field(0.0, ge=0)
    false_rate: float = Field(0.0, ge=0)
    mismatch_rate: float = Field(0.0, ge=0, le=1)
    mismatch_offset_px: float = Field(4.0, ge=0)
    false_diameter_px: Tuple[float, float] = (10.0, 60.0)
    brightness_response: Dict[float, Dict[str, float]] = Field(default_factory=dict)

    @field_validator("brightness_response")
    @classmethod
    def _known_multipliers(cls, v):
        allowed = set(BrightnessResponse.__dataclass_fields__)
        for offset, multipliers in v.items():
            unknown = set(multipliers) - allowed
            if unknown:
                raise ValueError(f"unknown multipliers at {offset}: {sorted(unknown)}")
            if any(m < 0 for m in multipliers.values()):
                raise ValueError(f"negative multiplier at {offset}")
        return v

    def to_profile(self, name: str) -> DetectorProfile:
        response = {float(o): BrightnessResponse(**m) for o, m in self.brightness_response.items()}
        return DetectorProfile(name, self.p_detect_new, self.p_redetect, self.center_noise, self.diameter_noise,
                               self.false_rate, self.mismatch_rate, self.mismatch_offset_px,
                               tuple(self.false_diameter_px), response)


class RunConfig(_Section):
    trial: TrialSection = Field(default_factory=TrialSection)
    detector: DetectorSection = Field(default_factory=DetectorSection)
    camera: CameraSection = Field(default_factory=CameraSection)
    filter: FilterSection = Field(default_factory=FilterSection)
    match: MatchSection = Field(default_factory=MatchSection)
    catalog: CatalogSection = Field(default_factory=CatalogSection)
    monte_carlo: MonteCarloSection = Field(default_factory=MonteCarloSection)
    compare: CompareSection = Field(default_factory=CompareSection)
    profiles: Dict[str, ProfileSection] = Field(default_factory=dict, description="Presets merged over the built-ins")

    def detector_profiles(self) -> Dict[str, DetectorProfile]:
        return {name: section.to_profile(name) for name, section in self.profiles.items()}

    def profile(self, name: str) -> DetectorProfile:
        if name not in self.profiles:
            raise ConfigError("detector.profile", f"unknown detector profile '{name}' "
                                                  f"(known: {', '.join(sorted(self.profiles))})")
        return self.profiles[name].to_profile(name)

    def camera_model(self) -> CameraModel:
        try:
            return CameraModel(self.camera.focal_px, self.camera.width_px, self.camera.height_px,
                               self.camera.cu, self.camera.cv)
        except ValueError as e:
            raise ConfigError("camera", str(e)) from e

    def filter_params(self, profile: DetectorProfile, brightness: float) -> FilterParams:
        meas = self.filter.meas_noise_std
        if meas is None:
            center_noise = profile.at_brightness(brightness).center_noise
            meas = max(center_noise / self.camera.focal_px, MIN_MEAS_NOISE_STD)
        return FilterParams(self.filter.accel_noise_std, meas, self.filter.feature_init_std,
                            self.filter.init_pos_std, self.filter.init_vel_std, self.filter.update_on_first_sighting,
                            self.filter.stale_after_steps)

    def match_params(self) -> MatchParams:
        m = self.match
        return MatchParams(m.gate_fraction, m.diameter_weight, m.inlier_tol_px, m.min_pairs, m.iterations, m.model,
                           m.expected_margin, m.footprint_margin, m.min_diameter_km * 1000.0)


def deep_merge(base: Dict[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def set_dotted(data: Dict[str, Any], dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        node = node.setdefault(key, {})
    node[keys[-1]] = value


def _key_path(error: ValidationError) -> Tuple[str, str]:
    first = error.errors()[0]
    key = ".".join(str(part) for part in first["loc"]) or "<root>"
    return key, first["msg"]


def build_config(user: Optional[Mapping[str, Any]] = None,
                 overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Defaults <- user mapping <- dotted-key overrides, then validation"""
    data = get_default_config()
    data["profiles"] = get_detector_profiles()
    if user:
        if not isinstance(user, Mapping):
            raise ConfigError("<root>", "configuration must be a mapping")
        data = deep_merge(data, user)
    for dotted, value in (overrides or {}).items():
        if value is not None:
            set_dotted(data, dotted, value)
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(*_key_path(e)) from e
    try:
        profiles = cfg.detector_profiles()
    except ValueError as e:
        raise ConfigError("profiles", str(e)) from e
    cfg.profile(cfg.detector.profile)
    for name in cfg.compare.profiles:
        if name not in cfg.profiles:
            raise ConfigError("compare.profiles", f"unknown detector profile '{name}'")
    offsets = set(cfg.compare.brightness) | {cfg.detector.brightness}
    for name, profile in profiles.items():
        for b in sorted(offsets):
            try:
                profile.at_brightness(b)
            except ValueError as e:
                raise ConfigError(f"profiles.{name}.brightness_response", f"at brightness {b}: {e}") from e
    return cfg


def load_config(path: Optional[Union[str, Path]] = None,
                overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    user = None
    if path is not None:
        with open(path, "r", encoding="utf-8") as f:
            try:
                user = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise ConfigError("<file>", f"invalid YAML in {path}: {e}") from e
    return build_config(user or {}, overrides)


def dump_config(cfg: RunConfig) -> Dict[str, Any]:
    """Fully materialized configuration, suitable for yaml.safe_dump and for build_config"""
    data = cfg.model_dump(mode="json")
    for profile in data.get("profiles", {}).values():
        profile["false_diameter_px"] = list(profile["false_diameter_px"])
    return data


def steps_for(duration_s: float, dT: float) -> int:
    return int(math.floor(duration_s / dT + 1e-9))


@dataclass(frozen=True)
class TrialConfig:
    """Everything one closed-loop trajectory needs, with all defaults resolved"""
    profile: DetectorProfile
    camera: CameraModel = CameraModel()
    filter: FilterParams = FilterParams()
    match: MatchParams = MatchParams()
    altitude_m: float = 100_000.0
    speed_mps: Optional[float] = None
    duration_s: float = 500.0
    dT: float = 2.5
    imu_noise_std: float = 0.1
    brightness: float = 0.0
    seed: int = 0
    image_up: str = "along_track"
    max_inclination_deg: float = 80.0
    bailout_m: float = 10_000.0

    def __post_init__(self):
        if not self.dT > 0:
            raise ValueError(f"dT must be positive, got {self.dT}")
        if self.duration_s < self.dT:
            raise ValueError(f"duration_s ({self.duration_s}) must be at least dT ({self.dT})")
        if not self.altitude_m > 0:
            raise ValueError(f"altitude_m must be positive, got {self.altitude_m}")

    @property
    def n_steps(self) -> int:
        return steps_for(self.duration_s, self.dT)


def trial_config(cfg: RunConfig, profile_name: Optional[str] = None, brightness: Optional[float] = None,
                 seed: Optional[int] = None) -> TrialConfig:
    name = profile_name if profile_name is not None else cfg.detector.profile
    b = brightness if brightness is not None else cfg.detector.brightness
    profile = cfg.profile(name)
    t = cfg.trial
    return TrialConfig(profile=profile, camera=cfg.camera_model(), filter=cfg.filter_params(profile, b),
                       match=cfg.match_params(), altitude_m=t.altitude_m, speed_mps=t.speed_mps,
                       duration_s=t.duration_s, dT=t.dT, imu_noise_std=t.imu_noise_std, brightness=b,
                       seed=seed if seed is not None else cfg.monte_carlo.seed, image_up=t.image_up,
                       max_inclination_deg=t.max_inclination_deg, bailout_m=t.bailout_m)
