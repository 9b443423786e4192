from typing import Iterable, Optional


class TrnError(Exception):
    """Base class for all navigation toolkit errors"""


class DegenerateGeometryError(TrnError):
    pass


class NoFootprintError(TrnError):
    pass


class CatalogError(TrnError):
    pass


class CatalogParseError(CatalogError):
    def __init__(self, path: str, line: Optional[int], message: str):
        self.path = path
        self.line = line
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {message}")


class DuplicateCraterError(CatalogError):
    pass


class CatalogMergeError(CatalogError):
    def __init__(self, ids: Iterable[str]):
        self.ids = sorted(ids)
        super().__init__(f"crater id collision on merge: {', '.join(self.ids)}")


class MaskError(TrnError):
    pass


class MaskFormatError(MaskError):
    pass


class MaskBoundsError(MaskError):
    pass


class FilterError(TrnError):
    pass


class DuplicateFeatureError(FilterError):
    pass


class UnknownFeatureError(FilterError):
    pass


class MeasurementError(FilterError):
    pass


class ConfigError(TrnError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class AllTrialsDivergedError(TrnError):
    pass
