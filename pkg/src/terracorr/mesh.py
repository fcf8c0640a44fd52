"""Triangulated terrain databases: loading, LOD handling, summary, bounding box.

Two open input formats are supported:

* ``trimesh-obj`` -- plain text, ``v x y z`` vertex lines (meters, local,
  x east / y north / z up), ``g lodN`` starts LOD group N, ``f i j k``
  triangle lines with 1-based vertex indices wound counter-clockwise seen
  from above.
* ``heightfield-asc`` -- ESRI-style ASCII grid (``ncols``/``nrows``/
  ``xllcorner``/``yllcorner``/``cellsize``/``nodata_value`` headers, then
  elevations north row first), triangulated along the SW-NE cell diagonal.

A sidecar ``<file>.meta.json`` (or ``<stem>.meta.json``) supplies geodetic
extents and the reference origin; without it the geographic extents default
to the local coordinate bounds and are flagged as such.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .geodesy import geodetic_to_local, local_to_geodetic

log = logging.getLogger(__name__)

MIN_TRIANGLE_AREA = 1e-12  # m^2; anything smaller is treated as degenerate


class TdbFormat(str, Enum):
    TRIMESH_OBJ = "trimesh-obj"
    HEIGHTFIELD_ASC = "heightfield-asc"


class MeshFormatError(ValueError):
    """A terrain file could not be parsed; carries path and line number."""

    def __init__(self, message: str, path=None, line: int | None = None):
        loc = ""
        if path is not None:
            loc += f"{path}: "
        if line is not None:
            message = f"{message}, line {line}"
        super().__init__(loc + message)
        self.path = path
        self.line = line


@dataclass
class TriangleMesh:
    """Indexed triangle soup in local meters (x east, y north, z up).

    Triangle winding is CCW seen from the outward (up) side; the right-hand
    rule on the winding gives the outward normal.
    """

    vertices: np.ndarray  # (V, 3) float64
    triangles: np.ndarray  # (T, 3) int32
    name: str = "mesh"

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3))
        self.triangles = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int32).reshape(-1, 3))
        if self.triangles.size:
            lo, hi = int(self.triangles.min()), int(self.triangles.max())
            if lo < 0 or hi >= len(self.vertices):
                raise ValueError(f"triangle vertex index {hi if hi >= len(self.vertices) else lo} "
                                 f"out of range for {len(self.vertices)} vertices")

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def triangle_count(self) -> int:
        return len(self.triangles)

    def corners(self) -> np.ndarray:
        """Per-triangle corner coordinates, shape (T, 3, 3)."""
        return self.vertices[self.triangles]

    def centroids(self) -> np.ndarray:
        return self.corners().mean(axis=1)

    def xy_extents(self) -> tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax) over all vertices."""
        v = self.vertices
        return float(v[:, 0].min()), float(v[:, 0].max()), float(v[:, 1].min()), float(v[:, 1].max())

    def z_extents(self) -> tuple[float, float]:
        v = self.vertices
        return float(v[:, 2].min()), float(v[:, 2].max())


@dataclass
class GeoExtents:
    """Geodetic extents in degrees plus elevation extents in meters.

    When ``from_sidecar`` is False no metadata file was found and lat/lon
    carry the local y/x bounds in meters instead of degrees.
    """

    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float
    elev_min: float
    elev_max: float
    from_sidecar: bool = True

    def __post_init__(self):
        if self.lat_min > self.lat_max or self.lon_min > self.lon_max or self.elev_min > self.elev_max:
            raise ValueError("extents require min <= max on every axis")


@dataclass
class LoadLog:
    dropped_degenerate: int = 0
    notes: list[str] = field(default_factory=list)


@dataclass
class TerrainDatabase:
    """A loaded terrain database: one or more LOD meshes plus metadata."""

    lods: list[TriangleMesh]
    geo_extents: GeoExtents
    reference_origin: tuple[float, float] | None  # (lat, lon) degrees -> local (0, 0)
    source_path: str
    load_log: LoadLog = field(default_factory=LoadLog)

    def __post_init__(self):
        if not self.lods:
            raise ValueError("a terrain database needs at least one LOD")

    @property
    def lod_count(self) -> int:
        return len(self.lods)

    def to_local(self, lat: float, lon: float) -> tuple[float, float]:
        """Project geodetic degrees onto this database's local plane."""
        if self.reference_origin is None:
            raise ValueError("no reference origin: load with a sidecar metadata file")
        return geodetic_to_local(lat, lon, *self.reference_origin)

    def to_geodetic(self, x: float, y: float) -> tuple[float, float]:
        if self.reference_origin is None:
            raise ValueError("no reference origin: load with a sidecar metadata file")
        return local_to_geodetic(x, y, *self.reference_origin)


@dataclass
class TdbSummary:
    vertex_count: int
    triangle_count: int
    lod_count: int
    extents: GeoExtents


@dataclass
class BoundingBox:
    """Axis-aligned enclosure guaranteeing every traced ray a finite length.

    Walls sit at the mesh x/y extents; ceiling and floor clear the highest
    eyepoint / lowest vertex by the construction margin.
    """

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    floor_z: float
    ceiling_z: float

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([self.xmin, self.ymin, self.floor_z])
        hi = np.array([self.xmax, self.ymax, self.ceiling_z])
        return lo, hi

    def contains(self, p, strict: bool = True) -> bool:
        lo, hi = self.bounds()
        p = np.asarray(p, dtype=np.float64)
        if strict:
            return bool(np.all(p > lo) and np.all(p < hi))
        return bool(np.all(p >= lo) and np.all(p <= hi))


@dataclass
class Heightfield:
    """Regular elevation grid; row 0 of ``elevations`` is the southernmost."""

    ncols: int
    nrows: int
    cell_size: float
    origin: tuple[float, float]  # local (x, y) of the southwest post
    elevations: np.ndarray  # (nrows, ncols) float64
    nodata: float = -9999.0

    def __post_init__(self):
        if self.ncols < 2 or self.nrows < 2:
            raise ValueError("heightfield needs at least 2x2 posts")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        self.elevations = np.asarray(self.elevations, dtype=np.float64).reshape(self.nrows, self.ncols)

    def valid_mask(self) -> np.ndarray:
        return self.elevations != self.nodata


def triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Unsigned area of each triangle."""
    corners = vertices[triangles]
    e1 = corners[:, 1] - corners[:, 0]
    e2 = corners[:, 2] - corners[:, 0]
    cross = np.cross(e1, e2)
    return 0.5 * np.linalg.norm(cross, axis=1)


def _drop_degenerate(vertices, triangles, name):
    """Remove zero-area triangles, compact to referenced vertices."""
    triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    if len(triangles):
        keep = triangle_areas(vertices, triangles) >= MIN_TRIANGLE_AREA
        dropped = int(len(triangles) - keep.sum())
        triangles = triangles[keep]
    else:
        dropped = 0
    # compact: each LOD owns exactly the vertices its triangles reference
    used, inverse = np.unique(triangles.ravel(), return_inverse=True) if len(triangles) else (np.array([], dtype=np.int64), np.array([], dtype=np.int64))
    mesh = TriangleMesh(vertices[used], inverse.reshape(-1, 3).astype(np.int32), name=name)
    return mesh, dropped


_LOD_GROUP = re.compile(r"^lod(\d+)$")


def _parse_trimesh(path: Path) -> tuple[list[TriangleMesh], LoadLog]:
    vertices: list[tuple[float, float, float]] = []
    groups: dict[int, list[tuple[int, int, int]]] = {}
    current = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) != 4:
                    raise MeshFormatError("vertex line needs 3 coordinates", path, lineno)
                try:
                    vertices.append((float(parts[1]), float(parts[2]), float(parts[3])))
                except ValueError:
                    raise MeshFormatError("non-numeric vertex coordinate", path, lineno) from None
            elif tag == "g":
                if len(parts) != 2:
                    raise MeshFormatError("group line needs one name", path, lineno)
                m = _LOD_GROUP.match(parts[1])
                if not m:
                    raise MeshFormatError(f"unknown group {parts[1]!r}, expected lodN", path, lineno)
                current = int(m.group(1))
                groups.setdefault(current, [])
            elif tag == "f":
                if len(parts) != 4:
                    raise MeshFormatError("face line needs 3 vertex indices", path, lineno)
                try:
                    idx = tuple(int(p) for p in parts[1:])
                except ValueError:
                    raise MeshFormatError("non-integer vertex index", path, lineno) from None
                for i in idx:
                    if i < 1 or i > len(vertices):
                        raise MeshFormatError(f"index out of range ({i} of {len(vertices)})", path, lineno)
                groups.setdefault(current, []).append(tuple(i - 1 for i in idx))
            else:
                raise MeshFormatError(f"unknown record {tag!r}", path, lineno)
    if not vertices:
        raise MeshFormatError("no vertices", path)
    lw = LoadLog()
    lods = []
    for n in sorted(groups):
        mesh, dropped = _drop_degenerate(np.array(vertices), groups[n], name=f"lod{n}")
        lw.dropped_degenerate += dropped
        if mesh.triangle_count:
            lods.append(mesh)
        elif groups[n]:
            lw.notes.append(f"lod{n}: all {len(groups[n])} triangles degenerate, group dropped")
    if lw.dropped_degenerate:
        lw.notes.append(f"dropped {lw.dropped_degenerate} degenerate triangle(s)")
        log.info("%s: dropped %d degenerate triangle(s)", path, lw.dropped_degenerate)
    if not lods:
        raise MeshFormatError("zero triangles after cleanup", path)
    return lods, lw


_HF_HEADERS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


def _parse_heightfield(path: Path) -> Heightfield:
    headers: dict[str, float] = {}
    rows: list[list[float]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            key = parts[0].lower()
            if key in _HF_HEADERS:
                if len(parts) != 2:
                    raise MeshFormatError(f"header {key} needs one value", path, lineno)
                try:
                    headers[key] = float(parts[1])
                except ValueError:
                    raise MeshFormatError(f"non-numeric header value for {key}", path, lineno) from None
            else:
                try:
                    rows.append([float(p) for p in parts])
                except ValueError:
                    raise MeshFormatError("non-numeric elevation", path, lineno) from None
    for key in ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize"):
        if key not in headers:
            raise MeshFormatError(f"missing header {key}", path)
    ncols, nrows = int(headers["ncols"]), int(headers["nrows"])
    flat = [v for row in rows for v in row]
    if len(flat) != ncols * nrows:
        raise MeshFormatError(f"expected {ncols * nrows} elevations, found {len(flat)}", path)
    data = np.array(flat, dtype=np.float64).reshape(nrows, ncols)
    return Heightfield(
        ncols=ncols,
        nrows=nrows,
        cell_size=headers["cellsize"],
        origin=(headers["xllcorner"], headers["yllcorner"]),
        elevations=data[::-1],  # file is north row first; store south row first
        nodata=headers.get("nodata_value", -9999.0),
    )


def triangulate_heightfield(hf: Heightfield) -> TriangleMesh:
    """Fixed SW-NE diagonal split; cells touching a nodata post become holes.

    The split direction is deliberately pinned because the choice changes
    downstream correlation numbers; keeping it fixed makes runs reproducible.
    """
    valid = hf.valid_mask()
    if not valid.any():
        raise ValueError("heightfield is entirely nodata: zero triangles")
    x0, y0 = hf.origin
    cols = np.arange(hf.ncols) * hf.cell_size + x0
    rowsy = np.arange(hf.nrows) * hf.cell_size + y0
    xs, ys = np.meshgrid(cols, rowsy)  # (nrows, ncols)
    verts = np.stack([xs, ys, hf.elevations], axis=-1).reshape(-1, 3)

    def post(r, c):
        return r * hf.ncols + c

    tris = []
    for r in range(hf.nrows - 1):
        for c in range(hf.ncols - 1):
            if not (valid[r, c] and valid[r, c + 1] and valid[r + 1, c] and valid[r + 1, c + 1]):
                continue
            sw, se = post(r, c), post(r, c + 1)
            nw, ne = post(r + 1, c), post(r + 1, c + 1)
            tris.append((sw, se, ne))
            tris.append((sw, ne, nw))
    mesh, _ = _drop_degenerate(verts, np.array(tris, dtype=np.int64).reshape(-1, 3), name="heightfield")
    return mesh


def _find_sidecar(path: Path) -> Path | None:
    for candidate in (Path(str(path) + ".meta.json"), path.with_suffix(".meta.json")):
        if candidate.exists():
            return candidate
    return None


def load_tdb(path, format: TdbFormat | str | None = None) -> TerrainDatabase:
    """Load a terrain database; format inferred from the extension if omitted."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if format is None:
        format = TdbFormat.HEIGHTFIELD_ASC if path.suffix.lower() == ".asc" else TdbFormat.TRIMESH_OBJ
    format = TdbFormat(format)

    if format is TdbFormat.TRIMESH_OBJ:
        lods, loadlog = _parse_trimesh(path)
    else:
        hf = _parse_heightfield(path)
        mesh = triangulate_heightfield(hf)
        if mesh.triangle_count == 0:
            raise MeshFormatError("zero triangles after cleanup", path)
        lods, loadlog = [mesh], LoadLog()

    zmin = min(m.z_extents()[0] for m in lods)
    zmax = max(m.z_extents()[1] for m in lods)
    sidecar = _find_sidecar(path)
    if sidecar is not None:
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
        try:
            extents = GeoExtents(meta["lat_min"], meta["lat_max"], meta["lon_min"], meta["lon_max"],
                                 zmin, zmax, from_sidecar=True)
            origin = (float(meta["ref_lat"]), float(meta["ref_lon"]))
        except KeyError as exc:
            raise MeshFormatError(f"sidecar {sidecar.name} missing field {exc}", path) from None
    else:
        xmin = min(m.xy_extents()[0] for m in lods)
        xmax = max(m.xy_extents()[1] for m in lods)
        ymin = min(m.xy_extents()[2] for m in lods)
        ymax = max(m.xy_extents()[3] for m in lods)
        extents = GeoExtents(ymin, ymax, xmin, xmax, zmin, zmax, from_sidecar=False)
        origin = None
        loadlog.notes.append("no sidecar metadata: geographic extents default to local bounds")

    return TerrainDatabase(lods=lods, geo_extents=extents, reference_origin=origin,
                           source_path=str(path), load_log=loadlog)


def tdb_summary(tdb: TerrainDatabase) -> TdbSummary:
    """Counts are totals over every LOD; extents echo the stored metadata."""
    return TdbSummary(
        vertex_count=sum(m.vertex_count for m in tdb.lods),
        triangle_count=sum(m.triangle_count for m in tdb.lods),
        lod_count=tdb.lod_count,
        extents=tdb.geo_extents,
    )


def select_lod(tdb: TerrainDatabase, lod_index: int) -> TriangleMesh:
    """Pick the mesh all subsequent tests for this database will use."""
    if not 0 <= lod_index < tdb.lod_count:
        raise IndexError(f"lod_index {lod_index} out of range (database has {tdb.lod_count} LODs)")
    return tdb.lods[lod_index]


def compute_bounding_box(mesh: TriangleMesh, max_eyepoint_z: float, margin: float = 1.0) -> BoundingBox:
    """Walls at the mesh x/y extents, ceiling/floor cleared by ``margin``."""
    if mesh.triangle_count == 0 or mesh.vertex_count == 0:
        raise ValueError("cannot bound an empty mesh")
    if margin <= 0:
        raise ValueError("margin must be positive")
    xmin, xmax, ymin, ymax = mesh.xy_extents()
    zmin, zmax = mesh.z_extents()
    return BoundingBox(
        xmin=xmin, xmax=xmax, ymin=ymin, ymax=ymax,
        floor_z=zmin - margin,
        ceiling_z=max(zmax, max_eyepoint_z) + margin,
    )
