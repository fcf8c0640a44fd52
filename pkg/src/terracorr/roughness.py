"""Terrain roughness as the 3D dispersion of unit triangle normals.

The metric is the Euclidean norm of the component-wise population standard
deviation of the normals.  Because the normals are unit vectors it always
lands in [0, 1]: 0 for any planar surface regardless of tilt, approaching 1
as normals scatter over the sphere.  Normals are not area-weighted (each
triangle counts once), so sliver-heavy meshes skew the value.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import TriangleMesh
from .sampling import BlockGrid


@dataclass
class NormalSet:
    """Unit normals of a mesh region, one per triangle."""

    normals: np.ndarray  # (N, 3) float64, each row unit length

    def __post_init__(self):
        self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        if len(self.normals) < 1:
            raise ValueError("a normal set needs at least one normal")
        norms = np.linalg.norm(self.normals, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ValueError("normals must be unit length within 1e-9")

    @classmethod
    def from_mesh(cls, mesh: TriangleMesh) -> "NormalSet":
        return cls(triangle_normals(mesh))

    @property
    def count(self) -> int:
        return len(self.normals)


@dataclass
class RoughnessResult:
    mean_normal: np.ndarray  # (3,)
    dispersion: np.ndarray  # (3,) component-wise population std
    roughness: float  # |dispersion|, in [0, 1]
    count: int  # triangles contributing


def triangle_normal(a, b, c) -> np.ndarray:
    """Right-hand-rule unit normal of one triangle's winding."""
    a = np.asarray(a, dtype=np.float64)
    cross = np.cross(np.asarray(b, dtype=np.float64) - a, np.asarray(c, dtype=np.float64) - a)
    n = np.linalg.norm(cross)
    if n == 0.0:
        raise ValueError("degenerate triangle has no normal")
    return cross / n


def triangle_normals(mesh: TriangleMesh) -> np.ndarray:
    """Unit normals for every triangle, in triangle order."""
    corners = mesh.corners()
    cross = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    norms = np.linalg.norm(cross, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("mesh contains degenerate triangles")
    return cross / norms[:, None]


def mean_normal(normal_set: NormalSet) -> np.ndarray:
    """Component-wise arithmetic mean of the normals (denominator N)."""
    return normal_set.normals.mean(axis=0)


def normal_dispersion(normal_set: NormalSet) -> np.ndarray:
    """Component-wise population standard deviation (denominator N)."""
    n = normal_set.normals
    return np.sqrt(((n - n.mean(axis=0)) ** 2).mean(axis=0))


def roughness(normal_set: NormalSet) -> float:
    """Norm of the dispersion vector; 0 flat, up to 1."""
    return float(np.linalg.norm(normal_dispersion(normal_set)))


def roughness_result(normal_set: NormalSet) -> RoughnessResult:
    disp = normal_dispersion(normal_set)
    return RoughnessResult(
        mean_normal=mean_normal(normal_set),
        dispersion=disp,
        roughness=float(np.linalg.norm(disp)),
        count=normal_set.count,
    )


def mesh_roughness(mesh: TriangleMesh) -> RoughnessResult:
    return roughness_result(NormalSet.from_mesh(mesh))


def _axis_block_index(values: np.ndarray, vmin: float, vmax: float, n: int) -> np.ndarray:
    """Block index per value; exact boundaries fall to the lower block."""
    raw = (values - vmin) * n / (vmax - vmin)
    idx = np.floor(raw)
    tie = (raw == idx) & (idx > 0)
    idx[tie] -= 1
    out = idx.astype(np.int64)
    out[(values < vmin) | (values > vmax)] = -1
    return out


def assign_triangles_to_blocks(mesh: TriangleMesh, grid: BlockGrid) -> np.ndarray:
    """Flat block index per triangle by centroid containment; -1 outside the AOI.

    A centroid exactly on an internal boundary belongs to the south/west
    (lower-indexed) block.
    """
    cen = mesh.centroids()
    aoi = grid.aoi
    ci = _axis_block_index(cen[:, 0], aoi.xmin, aoi.xmax, grid.cols)
    ri = _axis_block_index(cen[:, 1], aoi.ymin, aoi.ymax, grid.rows)
    flat = ri * grid.cols + ci
    flat[(ri < 0) | (ci < 0)] = -1
    return flat


def block_roughness(mesh: TriangleMesh, grid: BlockGrid) -> dict[tuple[int, int], RoughnessResult]:
    """RoughnessResult per nonempty block; blocks with no triangles are absent."""
    flat = assign_triangles_to_blocks(mesh, grid)
    normals = triangle_normals(mesh)
    out: dict[tuple[int, int], RoughnessResult] = {}
    for r, c in grid.blocks():
        mask = flat == r * grid.cols + c
        if not mask.any():
            continue
        out[(r, c)] = roughness_result(NormalSet(normals[mask]))
    return out
