"""
Data models shared by every stage of the pipeline
"""
from model.errors import (
    TrnError, DegenerateGeometryError, NoFootprintError, CatalogError, CatalogParseError,
    DuplicateCraterError, CatalogMergeError, MaskError, MaskFormatError, MaskBoundsError,
    FilterError, DuplicateFeatureError, UnknownFeatureError, MeasurementError, ConfigError, AllTrialsDivergedError,
)
from model.models import (
    R_MOON, MU_MOON, normalize_lon, Lclf, Geodetic, GeoBox, CameraModel, CameraPose,
    CraterSource, CraterRecord, DetectedCrater, ExpectedCrater, CraterMatch,
)

__all__ = [
    'R_MOON', 'MU_MOON', 'normalize_lon', 'Lclf', 'Geodetic', 'GeoBox', 'CameraModel', 'CameraPose',
    'CraterSource', 'CraterRecord', 'DetectedCrater', 'ExpectedCrater', 'CraterMatch',
    'TrnError', 'DegenerateGeometryError', 'NoFootprintError', 'CatalogError', 'CatalogParseError',
    'DuplicateCraterError', 'CatalogMergeError', 'MaskError', 'MaskFormatError', 'MaskBoundsError',
    'FilterError', 'DuplicateFeatureError', 'UnknownFeatureError', 'MeasurementError', 'ConfigError',
    'AllTrialsDivergedError',
]
