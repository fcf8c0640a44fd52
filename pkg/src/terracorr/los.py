"""Line-of-sight ray tests over a pair of prepared terrain meshes.

Every ray starts at an eyepoint inside the bounding box and therefore ends
somewhere: on terrain, or on one of the box's invisible walls, its ceiling,
or its floor.  Corresponding rays (same horizontal position, same direction,
per-terrain AGL altitude) are traced in both databases and compared by hit
kind and length.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import kernels
from .accel import SpatialIndex, build_accelerator, prepare_mesh
from .kernels import RAY_EPS
from .mesh import BoundingBox, TriangleMesh, compute_bounding_box
from .sampling import (BlockGrid, DirectionSpec, EyepointSpec, TestLocation,
                       generate_directions)


class HitKind(str, Enum):
    TERRAIN = "TERRAIN"
    WALL = "WALL"
    CEILING = "CEILING"
    FLOOR = "FLOOR"


_KIND_BY_CODE = {kernels.TERRAIN: HitKind.TERRAIN, kernels.WALL: HitKind.WALL,
                 kernels.CEILING: HitKind.CEILING, kernels.FLOOR: HitKind.FLOOR}


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray  # unit length

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64))
        object.__setattr__(self, "direction", np.asarray(self.direction, dtype=np.float64))
        n = float(np.linalg.norm(self.direction))
        if abs(n - 1.0) > 1e-12:
            raise ValueError(f"direction must be unit length, |d| = {n}")

    def at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction


@dataclass(frozen=True)
class RayHit:
    kind: HitKind
    length: float
    point: np.ndarray


@dataclass
class RayPairResult:
    """One corresponding ray traced in both databases."""

    block: tuple[int, int]
    loc_idx: int
    eye_idx: int
    dir_idx: int
    azimuth_deg: float
    pitch_deg: float
    eye_x: float
    eye_y: float
    eye_z_a: float
    eye_z_b: float
    hit_a: HitKind
    len_a: float
    hit_b: HitKind
    len_b: float

    @property
    def delta(self) -> float:
        return self.len_a - self.len_b

    @property
    def blocked_mismatch(self) -> bool:
        return (self.hit_a is HitKind.TERRAIN) != (self.hit_b is HitKind.TERRAIN)


@dataclass
class BlockAggregate:
    ray_count: int = 0
    mismatch_count: int = 0
    mean_abs_delta: float = 0.0
    max_abs_delta: float = 0.0


@dataclass
class LosResultSet:
    config: dict
    records: list[RayPairResult]
    skipped_locations: int
    block_aggregates: dict[tuple[int, int], BlockAggregate] = field(default_factory=dict)

    def recompute_aggregates(self) -> dict[tuple[int, int], BlockAggregate]:
        """Aggregates rebuilt from the record list (consistency check)."""
        sums: dict[tuple[int, int], list] = {}
        for rec in self.records:
            s = sums.setdefault(rec.block, [0, 0, 0.0, 0.0])
            s[0] += 1
            s[1] += int(rec.blocked_mismatch)
            s[2] += abs(rec.delta)
            s[3] = max(s[3], abs(rec.delta))
        return {blk: BlockAggregate(n, m, tot / n, mx) for blk, (n, m, tot, mx) in sums.items()}


def ray_triangle_intersect(ray: Ray, triangle) -> float | None:
    """Distance to a front-facing triangle hit, or None.

    Rear-facing triangles (direction against the outward normal at >= 0 dot)
    are excluded; hits closer than the self-intersection guard are rejected.
    """
    tri = np.asarray(triangle, dtype=np.float64).reshape(3, 3)
    t = kernels.ray_triangle(ray.origin, ray.direction, tri[0], tri[1], tri[2], RAY_EPS)
    return None if t < 0 else float(t)


def ray_box_intersect(ray: Ray, box: BoundingBox) -> tuple[HitKind, float]:
    """Exit face and distance for a ray starting strictly inside the box."""
    if not box.contains(ray.origin, strict=True):
        raise ValueError(f"ray origin {ray.origin.tolist()} is not strictly inside the box")
    lo, hi = box.bounds()
    face, t = kernels.ray_box_exit(ray.origin, ray.direction, lo, hi)
    return _KIND_BY_CODE[face], float(t)


def trace_ray(mesh: TriangleMesh, index: SpatialIndex | None, box: BoundingBox, ray: Ray) -> RayHit:
    """Nearest front-facing terrain hit if any, else the box exit."""
    if not box.contains(ray.origin, strict=True):
        raise ValueError(f"ray origin {ray.origin.tolist()} is not strictly inside the box")
    if index is not None:
        prep = index.prepared
        idx, t = kernels.ray_mesh_bvh(ray.origin, ray.direction, prep.v0, prep.e1, prep.e2,
                                      *index.bvh_arrays(), RAY_EPS)
    else:
        prep = prepare_mesh(mesh)
        idx, t = kernels.ray_mesh_brute(ray.origin, ray.direction, prep.v0, prep.e1, prep.e2, RAY_EPS)
    if idx >= 0:
        return RayHit(HitKind.TERRAIN, float(t), ray.at(float(t)))
    lo, hi = box.bounds()
    face, t = kernels.ray_box_exit(ray.origin, ray.direction, lo, hi)
    return RayHit(_KIND_BY_CODE[face], float(t), ray.at(float(t)))


def _ground_batch(index: SpatialIndex, box: BoundingBox, xys: np.ndarray) -> np.ndarray:
    """Topmost surface elevation per (x, y); NaN over holes."""
    n = len(xys)
    start_z = box.ceiling_z + 1.0
    origins = np.column_stack([xys, np.full(n, start_z)])
    downs = np.tile(np.array([0.0, 0.0, -1.0]), (n, 1))
    out_idx = np.empty(n, dtype=np.intp)
    out_t = np.empty(n, dtype=np.float64)
    prep = index.prepared
    kernels.mesh_hits_batch(origins, downs, prep.v0, prep.e1, prep.e2,
                            index.bvh_arrays(), RAY_EPS, out_idx, out_t)
    ground = start_z - out_t
    ground[out_idx < 0] = np.nan
    return ground


def _trace_chunks(origins, directions, index, box, workers):
    """Trace rays in `workers` contiguous chunks; output independent of chunking."""
    n = len(origins)
    out_kind = np.empty(n, dtype=np.int8)
    out_t = np.empty(n, dtype=np.float64)
    lo, hi = box.bounds()
    prep = index.prepared
    bvh = index.bvh_arrays()

    def run(sl: slice):
        kernels.trace_batch(origins[sl], directions[sl], prep.v0, prep.e1, prep.e2,
                            bvh, lo, hi, RAY_EPS, out_kind[sl], out_t[sl])

    if workers <= 1 or n == 0:
        run(slice(0, n))
    else:
        bounds = np.linspace(0, n, workers + 1, dtype=int)
        slices = [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ThreadPoolExecutor(max_workers=len(slices)) as pool:
            for f in [pool.submit(run, sl) for sl in slices]:
                f.result()
    return out_kind, out_t


def run_los_test(mesh_a: TriangleMesh, mesh_b: TriangleMesh, grid: BlockGrid,
                 locations: list[TestLocation], eyepoints: EyepointSpec,
                 directions: DirectionSpec, *, margin: float = 1.0, workers: int = 1,
                 index_a: SpatialIndex | None = None, index_b: SpatialIndex | None = None,
                 progress=None) -> LosResultSet:
    """Trace every location x eyepoint x direction pair in both databases.

    Locations over a hole in either database are skipped in both.  Output
    ordering is fixed (block row-major, then location, eyepoint, direction)
    and byte-identical for any worker count.
    """
    index_a = index_a or build_accelerator(mesh_a)
    index_b = index_b or build_accelerator(mesh_b)

    locations = sorted(locations, key=lambda l: (l.block, l.index))
    dir_list = generate_directions(directions)
    dir_array = np.array(dir_list).reshape(-1, 3)
    az_pitch = [(az, p) for az in directions.azimuths() for p in directions.pitches()]
    n_dirs = len(dir_list)
    n_eyes = eyepoints.count_per_location

    # ground lookup boxes only need to clear the mesh itself
    box_a0 = compute_bounding_box(mesh_a, mesh_a.z_extents()[1], margin)
    box_b0 = compute_bounding_box(mesh_b, mesh_b.z_extents()[1], margin)
    xys = np.array([[l.x, l.y] for l in locations]).reshape(-1, 2)
    ground_a = _ground_batch(index_a, box_a0, xys)
    ground_b = _ground_batch(index_b, box_b0, xys)
    for loc, ga, gb in zip(locations, ground_a, ground_b):
        loc.ground_z_a = None if np.isnan(ga) else float(ga)
        loc.ground_z_b = None if np.isnan(gb) else float(gb)

    usable = [i for i, l in enumerate(locations)
              if l.ground_z_a is not None and l.ground_z_b is not None]
    skipped = len(locations) - len(usable)
    if not usable:
        raise ValueError("no usable test locations: every location is over a hole")

    top = eyepoints.max_z_above_ground()
    box_a = compute_bounding_box(mesh_a, float(ground_a[usable].max()) + top, margin)
    box_b = compute_bounding_box(mesh_b, float(ground_b[usable].max()) + top, margin)

    n_rays = len(usable) * n_eyes * n_dirs
    origins_a = np.empty((n_rays, 3))
    origins_b = np.empty((n_rays, 3))
    dirs = np.empty((n_rays, 3))
    k = 0
    for li in usable:
        loc = locations[li]
        for e in range(n_eyes):
            za = loc.ground_z_a + eyepoints.agl0 + e * eyepoints.dz
            zb = loc.ground_z_b + eyepoints.agl0 + e * eyepoints.dz
            sl = slice(k, k + n_dirs)
            origins_a[sl, 0] = loc.x
            origins_a[sl, 1] = loc.y
            origins_a[sl, 2] = za
            origins_b[sl, 0] = loc.x
            origins_b[sl, 1] = loc.y
            origins_b[sl, 2] = zb
            dirs[sl] = dir_array
            k += n_dirs

    kind_a, t_a = _trace_chunks(origins_a, dirs, index_a, box_a, workers)
    if progress is not None:
        progress(0.5)
    kind_b, t_b = _trace_chunks(origins_b, dirs, index_b, box_b, workers)

    records: list[RayPairResult] = []
    k = 0
    for li in usable:
        loc = locations[li]
        for e in range(n_eyes):
            for d in range(n_dirs):
                az, pitch = az_pitch[d]
                records.append(RayPairResult(
                    block=loc.block, loc_idx=loc.index, eye_idx=e, dir_idx=d,
                    azimuth_deg=az, pitch_deg=pitch,
                    eye_x=loc.x, eye_y=loc.y,
                    eye_z_a=float(origins_a[k, 2]), eye_z_b=float(origins_b[k, 2]),
                    hit_a=_KIND_BY_CODE[int(kind_a[k])], len_a=float(t_a[k]),
                    hit_b=_KIND_BY_CODE[int(kind_b[k])], len_b=float(t_b[k]),
                ))
                k += 1
    if progress is not None:
        progress(1.0)

    config = {
        "rows": grid.rows, "cols": grid.cols,
        "aoi": [grid.aoi.xmin, grid.aoi.xmax, grid.aoi.ymin, grid.aoi.ymax],
        "locations": len(locations), "eyepoints": n_eyes,
        "agl0": eyepoints.agl0, "dz": eyepoints.dz,
        "directions": n_dirs, "margin": margin,
    }
    result = LosResultSet(config=config, records=records, skipped_locations=skipped)
    aggregates = result.recompute_aggregates()
    for r, c in grid.blocks():
        aggregates.setdefault((r, c), BlockAggregate())
    result.block_aggregates = dict(sorted(aggregates.items()))
    return result
