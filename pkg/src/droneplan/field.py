"""Raster field: altitude plus road-importance layers that all planning runs on.

Grids are stored row-major with the top row first (ASCII-grid convention).
The grid origin is the center of the lower-left cell, i.e. cell
(n_rows - 1, 0). Cell size is in meters while coordinates are WGS84
degrees; conversions use a local equirectangular projection anchored at
the origin so that cell <-> lat/lon round-trips exactly.
"""

import csv
import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .errors import BoundsError, ConfigError, DimensionError, ParseError
from .geo import METERS_PER_DEG_LAT, haversine_m, meters_per_deg_lon, point_segment_distance, to_local_m

ROAD_CLASSES = ("none", "regional", "national", "divided", "motorway")
CLASS_WEIGHTS = {
    "none": 0.0,
    "regional": 1.0,
    "national": math.sqrt(2.0),
    "divided": math.sqrt(3.0),
    "motorway": 2.0,
}
CLASS_CODES = {name: i for i, name in enumerate(ROAD_CLASSES)}

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")

# Sensing stencils, offsets relative to the center cell. The center itself is
# always sensed (a drone films the cell it flies over); the named rule adds
# 4, 8 or 12 surrounding cells.
_ORTHO = ((-1, 0), (1, 0), (0, -1), (0, 1))
_DIAG = ((-1, -1), (-1, 1), (1, -1), (1, 1))
_ORTHO2 = ((-2, 0), (2, 0), (0, -2), (0, 2))
STENCILS = {
    4: ((0, 0),) + _ORTHO,
    8: ((0, 0),) + _ORTHO + _DIAG,
    12: ((0, 0),) + _ORTHO + _DIAG + _ORTHO2,
}

MOORE_OFFSETS = _ORTHO + _DIAG


def stencil_offsets(knn_rule):
    try:
        return STENCILS[int(knn_rule)]
    except (KeyError, ValueError):
        raise ConfigError(f"knn_rule must be one of 4, 8, 12, got {knn_rule!r}")


@dataclass(frozen=True)
class GridMeta:
    n_rows: int
    n_cols: int
    cell_size_m: float = 100.0
    origin_lat: float = 18.0
    origin_lon: float = -67.0
    nodata: float = -9999.0

    def __post_init__(self):
        if self.n_rows < 1 or self.n_cols < 1:
            raise DimensionError(f"grid must be at least 1x1, got {self.n_rows}x{self.n_cols}")
        if self.cell_size_m <= 0:
            raise ConfigError(f"cell_size_m must be positive, got {self.cell_size_m}")

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)


@dataclass(frozen=True)
class Polyline:
    road_class: str
    vertices: tuple  # ((lat, lon), ...)

    def __post_init__(self):
        if self.road_class not in CLASS_WEIGHTS:
            raise ConfigError(f"unknown road class {self.road_class!r}")
        if len(self.vertices) < 2:
            raise ConfigError("polyline needs at least 2 vertices")


@dataclass
class Field:
    """Immutable after construction; safe to share across concurrent walkers."""

    meta: GridMeta
    altitude: np.ndarray        # float64, nodata cells hold meta.nodata
    nodata_mask: np.ndarray     # bool, True where altitude is missing
    importance: np.ndarray      # float64 >= 0
    road_class: np.ndarray      # int8 codes into ROAD_CLASSES
    _sense_cache: dict = dc_field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        shape = self.meta.shape
        for name in ("altitude", "nodata_mask", "importance", "road_class"):
            layer = getattr(self, name)
            if layer.shape != shape:
                raise DimensionError(f"{name} layer is {layer.shape}, meta says {shape}")
        if np.any(self.importance < 0):
            raise ConfigError("importance must be non-negative everywhere")

    def in_bounds(self, row, col):
        return 0 <= row < self.meta.n_rows and 0 <= col < self.meta.n_cols

    def feasible(self, row, col):
        """A cell a drone may occupy: inside the grid and not NODATA."""
        return self.in_bounds(row, col) and not self.nodata_mask[row, col]

    def stencil_sums(self, knn_rule):
        """Base importance summed over the sensing stencil, per cell (cached)."""
        rule = int(knn_rule)
        if rule not in self._sense_cache:
            acc = np.zeros(self.meta.shape, dtype=np.float64)
            for dr, dc in stencil_offsets(rule):
                acc += _shifted(self.importance, dr, dc)
            self._sense_cache[rule] = acc
        return self._sense_cache[rule]


def _shifted(layer, dr, dc):
    """Layer translated by (dr, dc) with zero fill outside the grid."""
    out = np.zeros_like(layer)
    rows, cols = layer.shape
    r0, r1 = max(0, -dr), min(rows, rows - dr)
    c0, c1 = max(0, -dc), min(cols, cols - dc)
    if r0 < r1 and c0 < c1:
        out[r0:r1, c0:c1] = layer[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
    return out


# ---------------------------------------------------------------------------
# ASCII grid parsing / serialization


def parse_grid(text):
    """Parse an ASCII-grid document into (values, nodata_mask, GridMeta).

    Header: ncols, nrows, xllcorner, yllcorner, cellsize, NODATA_value
    (any order, case-insensitive), followed by nrows whitespace-separated
    rows, top row first. xllcorner/yllcorner are degrees of the lower-left
    cell corner; cellsize is meters.
    """
    lines = text.splitlines()
    header = {}
    data_start = None
    for i, line in enumerate(lines):
        stripped = line.strip()
        if not stripped:
            continue
        parts = stripped.split()
        key = parts[0].lower()
        if key in _HEADER_KEYS:
            if len(parts) != 2:
                raise ParseError(f"header {parts[0]!r} needs exactly one value", line=i + 1)
            try:
                header[key] = float(parts[1])
            except ValueError:
                raise ParseError(f"header {parts[0]!r} has non-numeric value {parts[1]!r}", line=i + 1)
        else:
            data_start = i
            break
    if data_start is None:
        data_start = len(lines)
    for key in _HEADER_KEYS:
        if key not in header:
            raise ParseError(f"missing header key {key!r}", line=data_start)

    n_cols = int(header["ncols"])
    n_rows = int(header["nrows"])
    cell = header["cellsize"]
    nodata = header["nodata_value"]
    half_lat = (cell / 2.0) / METERS_PER_DEG_LAT
    origin_lat = header["yllcorner"] + half_lat
    origin_lon = header["xllcorner"] + (cell / 2.0) / meters_per_deg_lon(origin_lat)
    meta = GridMeta(n_rows=n_rows, n_cols=n_cols, cell_size_m=cell,
                    origin_lat=origin_lat, origin_lon=origin_lon, nodata=nodata)

    rows = []
    for i in range(data_start, len(lines)):
        stripped = lines[i].strip()
        if not stripped:
            continue
        try:
            row = [float(v) for v in stripped.split()]
        except ValueError:
            raise ParseError("non-numeric cell value", line=i + 1)
        if len(row) != n_cols:
            raise DimensionError(f"line {i + 1}: row has {len(row)} values, expected {n_cols}")
        rows.append(row)
    if len(rows) != n_rows:
        raise DimensionError(f"grid has {len(rows)} data rows, header says {n_rows}")

    values = np.array(rows, dtype=np.float64)
    mask = values == nodata
    return values, mask, meta


def serialize_grid(values, meta, nodata_mask=None):
    """Inverse of parse_grid; parse_grid(serialize_grid(x)) round-trips."""
    if values.shape != meta.shape:
        raise DimensionError(f"layer is {values.shape}, meta says {meta.shape}")
    out = values.copy()
    if nodata_mask is not None:
        out[nodata_mask] = meta.nodata
    half_lat = (meta.cell_size_m / 2.0) / METERS_PER_DEG_LAT
    yll = meta.origin_lat - half_lat
    xll = meta.origin_lon - (meta.cell_size_m / 2.0) / meters_per_deg_lon(meta.origin_lat)
    lines = [
        f"ncols {meta.n_cols}",
        f"nrows {meta.n_rows}",
        f"xllcorner {xll!r}",
        f"yllcorner {yll!r}",
        f"cellsize {meta.cell_size_m!r}",
        f"NODATA_value {meta.nodata!r}",
    ]
    for r in range(meta.n_rows):
        lines.append(" ".join(repr(float(v)) for v in out[r]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Coordinate transforms


def latlon_to_cell(meta, lat, lon):
    """(lat, lon) -> (row, col) of the containing cell; BoundsError outside."""
    x, y = to_local_m(lat, lon, meta.origin_lat, meta.origin_lon)
    col = int(round(x / meta.cell_size_m))
    row_from_bottom = int(round(y / meta.cell_size_m))
    row = meta.n_rows - 1 - row_from_bottom
    if not (0 <= row < meta.n_rows and 0 <= col < meta.n_cols):
        raise BoundsError(f"({lat}, {lon}) falls outside the {meta.n_rows}x{meta.n_cols} grid")
    return row, col


def cell_to_latlon(meta, row, col):
    """Center of cell (row, col) in degrees."""
    if not (0 <= row < meta.n_rows and 0 <= col < meta.n_cols):
        raise BoundsError(f"cell ({row}, {col}) outside {meta.n_rows}x{meta.n_cols} grid")
    row_from_bottom = meta.n_rows - 1 - row
    lat = meta.origin_lat + row_from_bottom * meta.cell_size_m / METERS_PER_DEG_LAT
    lon = meta.origin_lon + col * meta.cell_size_m / meters_per_deg_lon(meta.origin_lat)
    return lat, lon


def cell_distance_m(meta, cell_a, cell_b):
    """Haversine distance between two cell centers."""
    lat1, lon1 = cell_to_latlon(meta, *cell_a)
    lat2, lon2 = cell_to_latlon(meta, *cell_b)
    return haversine_m(lat1, lon1, lat2, lon2)


# ---------------------------------------------------------------------------
# Road rasterization


def rasterize_roads(polylines, meta, buffer_m=50.0):
    """Burn buffered polylines into an importance layer.

    A cell carries a road class iff its center lies within buffer_m of any
    segment of that class; where classes overlap the highest importance wins.
    Returns (importance, class_codes).
    """
    importance = np.zeros(meta.shape, dtype=np.float64)
    codes = np.zeros(meta.shape, dtype=np.int8)
    cell = meta.cell_size_m
    for line in polylines:
        weight = CLASS_WEIGHTS[line.road_class]
        if weight <= 0.0:
            continue
        code = CLASS_CODES[line.road_class]
        pts = [to_local_m(lat, lon, meta.origin_lat, meta.origin_lon) for lat, lon in line.vertices]
        for (ax, ay), (bx, by) in zip(pts, pts[1:]):
            lo_c = int(math.floor((min(ax, bx) - buffer_m) / cell))
            hi_c = int(math.ceil((max(ax, bx) + buffer_m) / cell))
            lo_b = int(math.floor((min(ay, by) - buffer_m) / cell))
            hi_b = int(math.ceil((max(ay, by) + buffer_m) / cell))
            lo_c, hi_c = max(lo_c, 0), min(hi_c, meta.n_cols - 1)
            lo_b, hi_b = max(lo_b, 0), min(hi_b, meta.n_rows - 1)
            for rb in range(lo_b, hi_b + 1):
                row = meta.n_rows - 1 - rb
                cy = rb * cell
                for c in range(lo_c, hi_c + 1):
                    if point_segment_distance(c * cell, cy, ax, ay, bx, by) <= buffer_m:
                        if weight > importance[row, c]:
                            importance[row, c] = weight
                            codes[row, c] = code
    return importance, codes


def build_field(meta, altitude, nodata_mask, polylines, buffer_m=50.0):
    importance, codes = rasterize_roads(polylines, meta, buffer_m)
    return Field(meta=meta, altitude=altitude, nodata_mask=nodata_mask,
                 importance=importance, road_class=codes)


# ---------------------------------------------------------------------------
# Synthetic fields for tests and demos

SYNTH_TEMPLATES = ("flat", "loop-road", "grid-of-roads", "moat")


@dataclass(frozen=True)
class SynthSpec:
    template: str
    n_rows: int = 101
    n_cols: int = 101
    cell_size_m: float = 100.0
    origin_lat: float = 18.0
    origin_lon: float = -67.0
    margin: int = 20
    spacing: int = 10
    road_class: str = "motorway"


def synth_field(spec):
    """Deterministic synthetic Field for a given SynthSpec."""
    if spec.template not in SYNTH_TEMPLATES:
        raise ConfigError(f"unknown synthetic template {spec.template!r}")
    meta = GridMeta(n_rows=spec.n_rows, n_cols=spec.n_cols, cell_size_m=spec.cell_size_m,
                    origin_lat=spec.origin_lat, origin_lon=spec.origin_lon)
    altitude = np.zeros(meta.shape, dtype=np.float64)
    mask = np.zeros(meta.shape, dtype=bool)
    importance = np.zeros(meta.shape, dtype=np.float64)
    codes = np.zeros(meta.shape, dtype=np.int8)
    weight = CLASS_WEIGHTS[spec.road_class]
    code = CLASS_CODES[spec.road_class]

    if spec.template == "loop-road":
        m = spec.margin
        if not (0 <= m < min(spec.n_rows, spec.n_cols) // 2):
            raise ConfigError(f"margin {m} does not fit a {spec.n_rows}x{spec.n_cols} grid")
        top, bottom = m, spec.n_rows - 1 - m
        left, right = m, spec.n_cols - 1 - m
        importance[top, left:right + 1] = weight
        importance[bottom, left:right + 1] = weight
        importance[top:bottom + 1, left] = weight
        importance[top:bottom + 1, right] = weight
        codes[importance > 0] = code
    elif spec.template == "grid-of-roads":
        importance[::spec.spacing, :] = weight
        importance[:, ::spec.spacing] = weight
        codes[importance > 0] = code
    elif spec.template == "moat":
        r0, c0 = spec.n_rows // 2, spec.n_cols // 2
        for dr, dc in MOORE_OFFSETS:
            mask[r0 + dr, c0 + dc] = True
        altitude[mask] = meta.nodata

    return Field(meta=meta, altitude=altitude, nodata_mask=mask,
                 importance=importance, road_class=codes)


# ---------------------------------------------------------------------------
# File formats: roads, destinations, field bundle, PGM


def parse_roads(text):
    """One road per line: `<class><TAB><lat>,<lon> <lat>,<lon> ...`."""
    polylines = []
    for i, line in enumerate(text.splitlines()):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "\t" not in stripped:
            raise ParseError("expected `<class><TAB><points>`", line=i + 1)
        cls, _, rest = stripped.partition("\t")
        cls = cls.strip()
        if cls not in CLASS_WEIGHTS:
            raise ParseError(f"unknown road class {cls!r}", line=i + 1)
        vertices = []
        for token in rest.split():
            try:
                lat_s, lon_s = token.split(",")
                vertices.append((float(lat_s), float(lon_s)))
            except ValueError:
                raise ParseError(f"bad vertex {token!r}, expected `lat,lon`", line=i + 1)
        if len(vertices) < 2:
            raise ParseError("polyline needs at least 2 vertices", line=i + 1)
        polylines.append(Polyline(road_class=cls, vertices=tuple(vertices)))
    return polylines


def read_roads(path):
    return parse_roads(Path(path).read_text())


@dataclass(frozen=True)
class Destination:
    name: str
    lat: float
    lon: float
    demand: tuple  # (med1_per_day, med2_per_day, med3_per_day)


def read_destinations(path):
    """CSV `name,lat,lon,med1_per_day,med2_per_day,med3_per_day`."""
    destinations = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"name", "lat", "lon", "med1_per_day", "med2_per_day", "med3_per_day"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ParseError(f"destinations CSV must have columns {sorted(required)}")
        for i, row in enumerate(reader):
            try:
                destinations.append(Destination(
                    name=row["name"].strip(),
                    lat=float(row["lat"]),
                    lon=float(row["lon"]),
                    demand=(int(row["med1_per_day"]), int(row["med2_per_day"]), int(row["med3_per_day"])),
                ))
            except (ValueError, AttributeError):
                raise ParseError("bad destination row", line=i + 2)
    return destinations


BUNDLE_FILES = ("altitude.asc", "importance.asc", "meta.json")


def save_field_bundle(fld, out_dir):
    """Write altitude + importance grids + metadata JSON; returns file paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / name for name in BUNDLE_FILES]
    paths[0].write_text(serialize_grid(fld.altitude, fld.meta, fld.nodata_mask))
    paths[1].write_text(serialize_grid(fld.importance, fld.meta))
    meta = fld.meta
    paths[2].write_text(json.dumps({
        "n_rows": meta.n_rows, "n_cols": meta.n_cols, "cell_size_m": meta.cell_size_m,
        "origin_lat": meta.origin_lat, "origin_lon": meta.origin_lon, "nodata": meta.nodata,
        "class_weights": {k: v for k, v in CLASS_WEIGHTS.items()},
    }, indent=2))
    return [str(p) for p in paths]


def load_field_bundle(bundle_dir):
    """Rebuild a Field from a saved bundle.

    Road classes are recovered from the importance values, which at build
    time are exactly the class weights.
    """
    bundle = Path(bundle_dir)
    for name in BUNDLE_FILES:
        if not (bundle / name).exists():
            raise FileNotFoundError(f"field bundle is missing {name} in {bundle}")
    altitude, mask, meta_a = parse_grid((bundle / "altitude.asc").read_text())
    importance, _, meta_i = parse_grid((bundle / "importance.asc").read_text())
    if meta_a.shape != meta_i.shape:
        raise DimensionError(f"altitude {meta_a.shape} and importance {meta_i.shape} differ")
    codes = np.zeros(meta_a.shape, dtype=np.int8)
    for name, weight in CLASS_WEIGHTS.items():
        if weight > 0:
            codes[np.isclose(importance, weight)] = CLASS_CODES[name]
    return Field(meta=meta_a, altitude=altitude, nodata_mask=mask,
                 importance=importance, road_class=codes)


def write_pgm(levels, path, maxval=255):
    """Write an integer 2-D array as an ASCII PGM image."""
    arr = np.asarray(levels)
    clipped = np.clip(arr, 0, maxval).astype(int)
    lines = ["P2", f"{arr.shape[1]} {arr.shape[0]}", str(maxval)]
    for r in range(arr.shape[0]):
        lines.append(" ".join(str(v) for v in clipped[r]))
    Path(path).write_text("\n".join(lines) + "\n")
