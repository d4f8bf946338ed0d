"""OpenCellID CSV ingestion and local projection."""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

log = logging.getLogger(__name__)

EARTH_RADIUS_M = 6_371_000.0
COLUMNS = (
    "radio",
    "mcc",
    "net",
    "area",
    "cell",
    "unit",
    "lon",
    "lat",
    "range",
    "samples",
    "changeable",
    "created",
    "updated",
    "averageSignal",
)
REQUIRED = ("radio", "mcc", "net", "cell", "lon", "lat", "range")

DUBLIN_BBOX = (53.320, -6.305, 53.356, -6.187)  # lat_min, lon_min, lat_max, lon_max
DUBLIN_CENTER = (53.343, -6.262)


class MissingColumnsError(ValueError):
    def __init__(self, missing):
        self.missing = tuple(missing)
        super().__init__(f"missing OpenCellID columns: {', '.join(self.missing)}")


@dataclass(frozen=True)
class Cell:
    id: int
    lat: float
    lon: float
    x: float  # metres east of the window centre
    y: float  # metres north of the window centre
    radius: float
    radio: str = "LTE"
    mcc: int = 0
    net: int = 0
    area: int = 0


@dataclass(frozen=True)
class Window:
    center: tuple[float, float] = DUBLIN_CENTER
    width: float = 400.0  # east-west extent, metres
    height: float = 500.0  # north-south extent, metres


@dataclass
class IngestReport:
    cells: list[Cell]
    rows: int
    malformed: int
    filtered: int
    outside_bbox: int
    outside_window: int


def project(lat: float, lon: float, center: tuple[float, float]) -> tuple[float, float]:
    """Equirectangular projection to metres relative to ``center``."""
    lat0, lon0 = center
    x = math.radians(lon - lon0) * math.cos(math.radians(lat0)) * EARTH_RADIUS_M
    y = math.radians(lat - lat0) * EARTH_RADIUS_M
    return x, y


def unproject(x: float, y: float, center: tuple[float, float]) -> tuple[float, float]:
    lat0, lon0 = center
    lat = lat0 + math.degrees(y / EARTH_RADIUS_M)
    lon = lon0 + math.degrees(x / (EARTH_RADIUS_M * math.cos(math.radians(lat0))))
    return lat, lon


def _rows(path: Path):
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None:
            return None, []
        if first and first[0].strip().lower() == "radio":
            header = [h.strip() for h in first]
            return header, list(reader)
        # headerless dump: standard column order
        return list(COLUMNS[: len(first)]) if len(first) <= len(COLUMNS) else list(COLUMNS), [first, *reader]


def ingest_report(
    path: str | Path,
    mcc: int | None = 272,
    net: int | None = 1,
    radio: str | None = "LTE",
    bbox: tuple[float, float, float, float] | None = DUBLIN_BBOX,
    window: Window | None = Window(),
) -> IngestReport:
    path = Path(path)
    header, rows = _rows(path)
    if header is None:
        warnings.warn(f"{path}: empty OpenCellID file", RuntimeWarning, stacklevel=2)
        return IngestReport([], 0, 0, 0, 0, 0)
    missing = [c for c in REQUIRED if c not in header]
    if missing:
        raise MissingColumnsError(missing)
    col = {name: i for i, name in enumerate(header)}
    cells: list[Cell] = []
    malformed = filtered = out_bbox = out_win = 0
    for r in rows:
        if not r or all(not c.strip() for c in r):
            continue
        try:
            rec_radio = r[col["radio"]].strip()
            rec_mcc = int(r[col["mcc"]])
            rec_net = int(r[col["net"]])
            cid = int(r[col["cell"]])
            lon = float(r[col["lon"]])
            lat = float(r[col["lat"]])
            rng = float(r[col["range"]])
            area = int(r[col["area"]]) if "area" in col and r[col["area"]].strip() else 0
        except (ValueError, IndexError):
            malformed += 1
            continue
        if (radio and rec_radio.upper() != radio.upper()) or (mcc is not None and rec_mcc != mcc) or (
            net is not None and rec_net != net
        ):
            filtered += 1
            continue
        if bbox is not None:
            lat_min, lon_min, lat_max, lon_max = bbox
            if not (lat_min <= lat <= lat_max and lon_min <= lon <= lon_max):
                out_bbox += 1
                continue
        center = window.center if window is not None else (lat, lon)
        x, y = project(lat, lon, center)
        if window is not None and (abs(x) > window.width / 2 or abs(y) > window.height / 2):
            out_win += 1
            continue
        cells.append(Cell(cid, lat, lon, x, y, rng, rec_radio, rec_mcc, rec_net, area))
    if malformed:
        log.warning("%s: skipped %d malformed rows", path, malformed)
    cells.sort(key=lambda c: (c.id, c.area))
    return IngestReport(cells, len(rows), malformed, filtered, out_bbox, out_win)


def ingest_opencellid(path, **kw) -> list[Cell]:
    return ingest_report(path, **kw).cells


def write_positions(cells, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "x", "y", "radius"])
        for c in cells:
            w.writerow([c.id, f"{c.x:.3f}", f"{c.y:.3f}", f"{c.radius:g}"])
