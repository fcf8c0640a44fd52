"""Terrain blocks, test locations, eyepoint stacks, and ray directions.

All generators here are deterministic: locations sit on cell centers of a
near-square sub-grid inside each block, eyepoints stack vertically above
ground, and directions sweep azimuth (clockwise from north) and pitch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .accel import SpatialIndex, prepare_mesh
from .kernels import RAY_EPS
from .mesh import BoundingBox, TriangleMesh


@dataclass(frozen=True)
class Rect:
    """Axis-aligned horizontal rectangle in local meters."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    def intersect(self, other: "Rect") -> "Rect | None":
        r = Rect(max(self.xmin, other.xmin), min(self.xmax, other.xmax),
                 max(self.ymin, other.ymin), min(self.ymax, other.ymax))
        if r.width <= 0 or r.height <= 0:
            return None
        return r


@dataclass
class BlockGrid:
    """Uniform rows x cols split of the common AOI.

    Row 0 is the southernmost row, column 0 the westernmost; block (r, c)
    therefore reads like a map grid with north upward.
    """

    rows: int
    cols: int
    aoi: Rect

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be >= 1")

    def block(self, r: int, c: int) -> Rect:
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            raise IndexError(f"block ({r}, {c}) outside {self.rows}x{self.cols} grid")
        w = self.aoi.width / self.cols
        h = self.aoi.height / self.rows
        return Rect(self.aoi.xmin + c * w, self.aoi.xmin + (c + 1) * w,
                    self.aoi.ymin + r * h, self.aoi.ymin + (r + 1) * h)

    def blocks(self):
        """All (r, c) pairs in row-major order, south row first."""
        for r in range(self.rows):
            for c in range(self.cols):
                yield r, c


@dataclass
class TestLocation:
    block: tuple[int, int]
    index: int  # within its block
    x: float
    y: float
    ground_z_a: float | None = None
    ground_z_b: float | None = None

    __test__ = False  # keep pytest from collecting this as a test class


@dataclass(frozen=True)
class EyepointSpec:
    """Vertical stack of eyepoints above ground at each test location."""

    count_per_location: int = 1
    agl0: float = 2.0  # AGL of the lowest eyepoint
    dz: float = 1.0  # spacing between stacked eyepoints

    def __post_init__(self):
        if self.count_per_location < 1:
            raise ValueError("count_per_location must be >= 1")
        if self.agl0 <= 0:
            raise ValueError("agl0 must be positive")
        if self.count_per_location > 1 and self.dz <= 0:
            raise ValueError("dz must be positive when stacking more than one eyepoint")

    def max_z_above_ground(self) -> float:
        return self.agl0 + (self.count_per_location - 1) * self.dz


@dataclass(frozen=True)
class DirectionSpec:
    """Azimuth/pitch sweep; azimuth degrees clockwise from north (+y)."""

    az_start: float = 0.0
    az_step: float = 45.0
    az_count: int = 8
    pitch_start: float = 0.0
    pitch_step: float = 0.0
    pitch_count: int = 1

    def __post_init__(self):
        if self.az_count < 1 or self.pitch_count < 1:
            raise ValueError("az_count and pitch_count must be >= 1")
        for p in self.pitches():
            if not -90.0 < p < 90.0:
                raise ValueError(f"pitch {p} outside the open interval (-90, 90) degrees")

    def azimuths(self) -> list[float]:
        return [self.az_start + i * self.az_step for i in range(self.az_count)]

    def pitches(self) -> list[float]:
        return [self.pitch_start + i * self.pitch_step for i in range(self.pitch_count)]

    @property
    def count(self) -> int:
        return self.az_count * self.pitch_count


def build_block_grid(extents_a: Rect, extents_b: Rect, rows: int, cols: int) -> BlockGrid:
    """Grid over the intersection of the two horizontal extents."""
    aoi = extents_a.intersect(extents_b)
    if aoi is None:
        raise ValueError("terrain extents are disjoint: no common area of interest")
    return BlockGrid(rows=rows, cols=cols, aoi=aoi)


def generate_test_locations(grid: BlockGrid, per_block: int) -> list[TestLocation]:
    """Evenly spread locations: cell centers of an r x c sub-grid per block.

    r = floor(sqrt(per_block)), c = ceil(per_block / r); cells are taken
    row-major (south row first, west to east) until per_block are placed.
    """
    if per_block < 1:
        raise ValueError("per_block must be >= 1")
    sub_r = int(math.floor(math.sqrt(per_block)))
    sub_c = int(math.ceil(per_block / sub_r))
    out: list[TestLocation] = []
    for r, c in grid.blocks():
        rect = grid.block(r, c)
        placed = 0
        for j in range(sub_r):
            for i in range(sub_c):
                if placed == per_block:
                    break
                x = rect.xmin + (i + 0.5) * rect.width / sub_c
                y = rect.ymin + (j + 0.5) * rect.height / sub_r
                out.append(TestLocation(block=(r, c), index=placed, x=x, y=y))
                placed += 1
    return out


def ground_elevation(mesh: TriangleMesh, box: BoundingBox, xy, index: SpatialIndex | None = None) -> float | None:
    """Elevation of the nearest surface under (x, y), or None over a hole.

    Traced as a downward ray from above the box ceiling, so stacked surfaces
    resolve to the topmost one.
    """
    x, y = float(xy[0]), float(xy[1])
    if not (box.xmin <= x <= box.xmax and box.ymin <= y <= box.ymax):
        raise ValueError(f"({x}, {y}) outside the bounding box walls")
    start_z = box.ceiling_z + 1.0
    origin = np.array([x, y, start_z])
    down = np.array([0.0, 0.0, -1.0])
    if index is not None:
        idx, t = kernels.ray_mesh_bvh(origin, down, index.prepared.v0, index.prepared.e1,
                                      index.prepared.e2, *index.bvh_arrays(), RAY_EPS)
    else:
        prep = prepare_mesh(mesh)
        idx, t = kernels.ray_mesh_brute(origin, down, prep.v0, prep.e1, prep.e2, RAY_EPS)
    if idx < 0:
        return None
    return start_z - t


def build_eyepoints(loc: TestLocation, ground_z: float, spec: EyepointSpec) -> list[np.ndarray]:
    """Eyepoint i sits at ground + agl0 + i*dz above (x, y)."""
    return [np.array([loc.x, loc.y, ground_z + spec.agl0 + i * spec.dz])
            for i in range(spec.count_per_location)]


def direction_vector(azimuth_deg: float, pitch_deg: float) -> np.ndarray:
    """Unit vector for azimuth (clockwise from north) and pitch above horizontal."""
    if not -90.0 < pitch_deg < 90.0:
        raise ValueError(f"pitch {pitch_deg} outside the open interval (-90, 90) degrees")
    az = math.radians(azimuth_deg)
    pitch = math.radians(pitch_deg)
    cp = math.cos(pitch)
    return np.array([math.sin(az) * cp, math.cos(az) * cp, math.sin(pitch)])


def generate_directions(spec: DirectionSpec) -> list[np.ndarray]:
    """Azimuth-major sweep: all pitches of the first azimuth, then the next."""
    return [direction_vector(az, p) for az in spec.azimuths() for p in spec.pitches()]
