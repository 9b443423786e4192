"""
Known-crater database: file loading, merging and lat/lon box queries
"""
import csv
import hashlib
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np

from geometry.frames import geodetic_arrays_to_lclf
from model.errors import CatalogMergeError, CatalogParseError, DuplicateCraterError
from model.models import R_MOON, CraterRecord, CraterSource, GeoBox, Geodetic, normalize_lon

logger = logging.getLogger(__name__)

HEADER = ["id", "lat_deg", "lon_deg", "diameter_km"]
DEFAULT_DIAM_RANGE = (5_000.0, math.inf)
LARGE_DB_MIN_DIAMETER = 20_000.0    # m


@dataclass(frozen=True, eq=False)
class CraterCatalog:
    """Immutable crater set, ordered by id, with a latitude-sorted index"""
    records: Tuple[CraterRecord, ...]
    lat: np.ndarray = field(init=False, repr=False)
    lon: np.ndarray = field(init=False, repr=False)
    diameter: np.ndarray = field(init=False, repr=False)
    positions: np.ndarray = field(init=False, repr=False)    # (N, 3) LCLF surface points
    _by_lat: np.ndarray = field(init=False, repr=False)
    _lat_sorted: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        records = tuple(sorted(self.records, key=lambda r: r.id))
        for prev, cur in zip(records, records[1:]):
            if prev.id == cur.id:
                raise DuplicateCraterError(f"duplicate crater id: {cur.id}")
        object.__setattr__(self, "records", records)

        lat = np.array([r.center.lat for r in records], dtype=float)
        lon = np.array([r.center.lon for r in records], dtype=float)
        radius = np.array([r.center.radius for r in records], dtype=float)
        diameter = np.array([r.diameter for r in records], dtype=float)
        positions = geodetic_arrays_to_lclf(lat, lon, radius).reshape(-1, 3)
        by_lat = np.argsort(lat, kind="stable")
        for name, value in (("lat", lat), ("lon", lon), ("diameter", diameter), ("positions", positions),
                            ("_by_lat", by_lat), ("_lat_sorted", lat[by_lat])):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def ids(self) -> List[str]:
        return [r.id for r in self.records]

    def checksum(self) -> str:
        """sha256 over the canonical file serialization"""
        digest = hashlib.sha256()
        for row in _rows(self.records):
            digest.update((",".join(row) + "\n").encode("utf-8"))
        return digest.hexdigest()


def _rows(records: Iterable[CraterRecord]):
    for r in records:
        yield [r.id, repr(math.degrees(r.center.lat)), repr(math.degrees(r.center.lon)), repr(r.diameter / 1000.0)]


def _source_for(diameter: float) -> CraterSource:
    return CraterSource.LARGE_DB if diameter > LARGE_DB_MIN_DIAMETER else CraterSource.SMALL_DB


def _parse_row(path: str, line_no: int, row: List[str], source: Optional[CraterSource]) -> CraterRecord:
    if len(row) != len(HEADER):
        raise CatalogParseError(path, line_no, f"expected {len(HEADER)} fields, got {len(row)}")
    crater_id = row[0].strip()
    if not crater_id:
        raise CatalogParseError(path, line_no, "empty crater id")
    try:
        lat_deg, lon_deg, diameter_km = (float(v) for v in row[1:])
    except ValueError as e:
        raise CatalogParseError(path, line_no, f"non-numeric field: {e}") from e
    if not all(math.isfinite(v) for v in (lat_deg, lon_deg, diameter_km)):
        raise CatalogParseError(path, line_no, "non-finite field")
    if not -90.0 <= lat_deg <= 90.0:
        raise CatalogParseError(path, line_no, f"latitude out of range: {lat_deg}")
    if not -180.0 <= lon_deg <= 360.0:
        raise CatalogParseError(path, line_no, f"longitude out of range: {lon_deg}")
    if diameter_km <= 0.0:
        raise CatalogParseError(path, line_no, f"diameter must be positive, got {diameter_km}")
    diameter = diameter_km * 1000.0
    center = Geodetic(math.radians(lat_deg), normalize_lon(math.radians(lon_deg)), R_MOON)
    return CraterRecord(crater_id, center, diameter, source or _source_for(diameter))


def load_catalog(path: Union[str, Path], source: Optional[CraterSource] = None) -> CraterCatalog:
    """Read a `id,lat_deg,lon_deg,diameter_km` file. `#` lines and blank lines are skipped.

    Without an explicit source each record is tagged by its diameter (> 20 km is the large database).
    """
    path = str(path)
    try:
        f = open(path, "r", encoding="utf-8-sig", newline="")
    except OSError as e:
        raise CatalogParseError(path, None, f"cannot open catalog: {e.strerror or e}") from e

    records = []
    seen = {}
    header_seen = False
    with f:
        for line_no, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            row = next(csv.reader([stripped]))
            if not header_seen:
                if [c.strip() for c in row] != HEADER:
                    raise CatalogParseError(path, line_no, f"expected header {','.join(HEADER)}")
                header_seen = True
                continue
            record = _parse_row(path, line_no, row, source)
            if record.id in seen:
                raise DuplicateCraterError(
                    f"{path}:{line_no}: duplicate crater id {record.id} (first on line {seen[record.id]})")
            seen[record.id] = line_no
            records.append(record)

    if not header_seen:
        raise CatalogParseError(path, None, "missing header row")
    logger.info(f"Loaded {len(records)} craters from {path}")
    return CraterCatalog(tuple(records))


def save_catalog(cat: CraterCatalog, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(HEADER)
        writer.writerows(_rows(cat.records))


def merge(a: CraterCatalog, b: CraterCatalog) -> CraterCatalog:
    collisions = set(a.ids()) & set(b.ids())
    if collisions:
        raise CatalogMergeError(collisions)
    return CraterCatalog(a.records + b.records)


def query_box_indices(cat: CraterCatalog, box: GeoBox,
                      diam_range: Tuple[float, float] = DEFAULT_DIAM_RANGE) -> np.ndarray:
    """Indices into cat.records (ascending, hence id order) of craters inside the box"""
    found = []
    for part in box.split():
        lo = np.searchsorted(cat._lat_sorted, part.lat_min, side="left")
        hi = np.searchsorted(cat._lat_sorted, part.lat_max, side="right")
        idx = cat._by_lat[lo:hi]
        lon = cat.lon[idx]
        diam = cat.diameter[idx]
        keep = ((lon >= part.lon_min) & (lon <= part.lon_max)
                & (diam >= diam_range[0]) & (diam <= diam_range[1]))
        found.append(idx[keep])
    if not found:
        return np.empty(0, dtype=np.intp)
    return np.unique(np.concatenate(found))


def query_box(cat: CraterCatalog, box: GeoBox,
              diam_range: Tuple[float, float] = DEFAULT_DIAM_RANGE) -> List[CraterRecord]:
    return [cat.records[i] for i in query_box_indices(cat, box, diam_range)]
