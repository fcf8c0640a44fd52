"""Spatial acceleration for mesh ray queries.

A median-split bounding volume hierarchy over triangles, flattened into
arrays the kernels can traverse without object overhead.  Traversal is
required to reproduce the exhaustive scan exactly: same hit kind, same
triangle on distance ties (lowest original index wins).
"""
from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

from .mesh import TriangleMesh

LEAF_SIZE = 8
MAX_DEPTH = 60


@dataclass
class PreparedMesh:
    """Per-triangle arrays consumed by the ray kernels (original order)."""

    v0: np.ndarray  # (T, 3) first corner
    e1: np.ndarray  # (T, 3) second corner - first
    e2: np.ndarray  # (T, 3) third corner - first
    triangle_count: int


@dataclass
class SpatialIndex:
    """PreparedMesh plus flattened BVH arrays.

    Internal node i: children at i+1 and node_child[i], node_count[i] == 0.
    Leaf: prim_index[node_start[i] : node_start[i] + node_count[i]] holds the
    original triangle indices, ascending.
    """

    prepared: PreparedMesh
    node_min: np.ndarray  # (N, 3)
    node_max: np.ndarray  # (N, 3)
    node_child: np.ndarray  # (N,) int32
    node_start: np.ndarray  # (N,) int32
    node_count: np.ndarray  # (N,) int32
    prim_index: np.ndarray  # (T,) int32

    def bvh_arrays(self):
        return (self.node_min, self.node_max, self.node_child,
                self.node_start, self.node_count, self.prim_index)


def prepare_mesh(mesh: TriangleMesh) -> PreparedMesh:
    corners = mesh.corners()
    v0 = np.ascontiguousarray(corners[:, 0])
    e1 = np.ascontiguousarray(corners[:, 1] - corners[:, 0])
    e2 = np.ascontiguousarray(corners[:, 2] - corners[:, 0])
    return PreparedMesh(v0=v0, e1=e1, e2=e2, triangle_count=mesh.triangle_count)


def build_accelerator(mesh: TriangleMesh, leaf_size: int = LEAF_SIZE) -> SpatialIndex:
    """Deterministic BVH: split the longest centroid axis at the median."""
    if mesh.triangle_count == 0:
        raise ValueError("cannot index an empty mesh")
    prepared = prepare_mesh(mesh)
    corners = mesh.corners()
    tri_lo = corners.min(axis=1)
    tri_hi = corners.max(axis=1)
    centroids = corners.mean(axis=1)

    node_min: list[np.ndarray] = []
    node_max: list[np.ndarray] = []
    node_child: list[int] = []
    node_start: list[int] = []
    node_count: list[int] = []
    prim_index: list[int] = []

    def emit(idx: np.ndarray, depth: int) -> int:
        me = len(node_min)
        node_min.append(tri_lo[idx].min(axis=0))
        node_max.append(tri_hi[idx].max(axis=0))
        node_child.append(-1)
        node_start.append(-1)
        node_count.append(0)

        cen = centroids[idx]
        extent = cen.max(axis=0) - cen.min(axis=0)
        axis = int(np.argmax(extent))
        if len(idx) <= leaf_size or depth >= MAX_DEPTH or extent[axis] <= 0.0:
            node_start[me] = len(prim_index)
            node_count[me] = len(idx)
            prim_index.extend(sorted(int(i) for i in idx))
            return me
        order = idx[np.lexsort((idx, cen[:, axis]))]
        mid = len(order) // 2
        emit(order[:mid], depth + 1)
        node_child[me] = emit(order[mid:], depth + 1)
        return me

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, MAX_DEPTH * 4 + 100))
    try:
        emit(np.arange(mesh.triangle_count, dtype=np.int64), 0)
    finally:
        sys.setrecursionlimit(limit)

    return SpatialIndex(
        prepared=prepared,
        node_min=np.ascontiguousarray(np.array(node_min, dtype=np.float64)),
        node_max=np.ascontiguousarray(np.array(node_max, dtype=np.float64)),
        node_child=np.array(node_child, dtype=np.int32),
        node_start=np.array(node_start, dtype=np.int32),
        node_count=np.array(node_count, dtype=np.int32),
        prim_index=np.array(prim_index, dtype=np.int32),
    )
