"""Pure numpy/Python ray kernels; import-time fallback for the compiled core.

Semantics here are the contract: the compiled module in ``_native.pyx``
mirrors these functions operation for operation.  Hit kind codes are
0 TERRAIN, 1 WALL, 2 CEILING, 3 FLOOR.
"""
from __future__ import annotations

import numpy as np

DET_EPS = 1e-12  # determinant below this: parallel or rear-facing, no hit

TERRAIN, WALL, CEILING, FLOOR = 0, 1, 2, 3


def ray_triangle(origin, direction, a, b, c, t_min: float) -> float:
    """Front-face-only intersection distance, or -1.0.

    Rear-facing triangles (ray direction against the winding normal at a
    non-negative angle) never hit; edge and vertex grazing count as hits.
    """
    ax, ay, az = float(a[0]), float(a[1]), float(a[2])
    e1x, e1y, e1z = float(b[0]) - ax, float(b[1]) - ay, float(b[2]) - az
    e2x, e2y, e2z = float(c[0]) - ax, float(c[1]) - ay, float(c[2]) - az
    return _mt(float(origin[0]), float(origin[1]), float(origin[2]),
               float(direction[0]), float(direction[1]), float(direction[2]),
               ax, ay, az, e1x, e1y, e1z, e2x, e2y, e2z, t_min)


def _mt(ox, oy, oz, dx, dy, dz, ax, ay, az, e1x, e1y, e1z, e2x, e2y, e2z, t_min):
    px = dy * e2z - dz * e2y
    py = dz * e2x - dx * e2z
    pz = dx * e2y - dy * e2x
    det = e1x * px + e1y * py + e1z * pz
    if det <= DET_EPS:
        return -1.0
    inv = 1.0 / det
    tx, ty, tz = ox - ax, oy - ay, oz - az
    u = (tx * px + ty * py + tz * pz) * inv
    if u < 0.0:
        return -1.0
    qx = ty * e1z - tz * e1y
    qy = tz * e1x - tx * e1z
    qz = tx * e1y - ty * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return -1.0
    t = (e2x * qx + e2y * qy + e2z * qz) * inv
    if t <= t_min:
        return -1.0
    return t


def ray_mesh_brute(origin, direction, v0, e1, e2, t_min: float):
    """Exhaustive scan over every triangle; ties go to the lowest index."""
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    px = d[1] * e2[:, 2] - d[2] * e2[:, 1]
    py = d[2] * e2[:, 0] - d[0] * e2[:, 2]
    pz = d[0] * e2[:, 1] - d[1] * e2[:, 0]
    det = e1[:, 0] * px + e1[:, 1] * py + e1[:, 2] * pz
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
        tx = o[0] - v0[:, 0]
        ty = o[1] - v0[:, 1]
        tz = o[2] - v0[:, 2]
        u = (tx * px + ty * py + tz * pz) * inv
        qx = ty * e1[:, 2] - tz * e1[:, 1]
        qy = tz * e1[:, 0] - tx * e1[:, 2]
        qz = tx * e1[:, 1] - ty * e1[:, 0]
        v = (d[0] * qx + d[1] * qy + d[2] * qz) * inv
        t = (e2[:, 0] * qx + e2[:, 1] * qy + e2[:, 2] * qz) * inv
    valid = (det > DET_EPS) & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > t_min)
    if not valid.any():
        return -1, np.inf
    t = np.where(valid, t, np.inf)
    idx = int(np.argmin(t))  # argmin returns the first minimum: lowest index wins ties
    return idx, float(t[idx])


def _slab_entry(ox, oy, oz, dx, dy, dz, nmin, nmax):
    """Entry distance of the ray into an AABB, or None if it misses."""
    t0, t1 = -np.inf, np.inf
    for o, d, lo, hi in ((ox, dx, nmin[0], nmax[0]), (oy, dy, nmin[1], nmax[1]), (oz, dz, nmin[2], nmax[2])):
        if d != 0.0:
            ta = (lo - o) / d
            tb = (hi - o) / d
            if ta > tb:
                ta, tb = tb, ta
            if ta > t0:
                t0 = ta
            if tb < t1:
                t1 = tb
        elif o < lo or o > hi:
            return None
    entry = t0 if t0 > 0.0 else 0.0
    if t1 < entry:
        return None
    return entry


def ray_mesh_bvh(origin, direction, v0, e1, e2,
                 node_min, node_max, node_child, node_start, node_count, prim_index,
                 t_min: float):
    """BVH traversal returning the identical nearest hit as the brute scan."""
    ox, oy, oz = float(origin[0]), float(origin[1]), float(origin[2])
    dx, dy, dz = float(direction[0]), float(direction[1]), float(direction[2])
    best_t = np.inf
    best_i = -1
    stack = [0]
    while stack:
        node = stack.pop()
        entry = _slab_entry(ox, oy, oz, dx, dy, dz, node_min[node], node_max[node])
        if entry is None or entry > best_t:
            continue
        count = node_count[node]
        if count > 0:
            start = node_start[node]
            for slot in range(start, start + count):
                i = int(prim_index[slot])
                t = _mt(ox, oy, oz, dx, dy, dz,
                        v0[i, 0], v0[i, 1], v0[i, 2],
                        e1[i, 0], e1[i, 1], e1[i, 2],
                        e2[i, 0], e2[i, 1], e2[i, 2], t_min)
                if t >= 0.0 and (t < best_t or (t == best_t and i < best_i)):
                    best_t = t
                    best_i = i
        else:
            left = node + 1
            right = int(node_child[node])
            el = _slab_entry(ox, oy, oz, dx, dy, dz, node_min[left], node_max[left])
            er = _slab_entry(ox, oy, oz, dx, dy, dz, node_min[right], node_max[right])
            # push far first so the near child is explored first
            if el is not None and er is not None:
                if el <= er:
                    stack.append(right)
                    stack.append(left)
                else:
                    stack.append(left)
                    stack.append(right)
            elif el is not None:
                stack.append(left)
            elif er is not None:
                stack.append(right)
    return best_i, best_t


def ray_box_exit(origin, direction, bmin, bmax):
    """Nearest exit face for a ray starting strictly inside the box.

    Axis ties resolve x before y before z, identically in both kernels.
    """
    ox, oy, oz = float(origin[0]), float(origin[1]), float(origin[2])
    dx, dy, dz = float(direction[0]), float(direction[1]), float(direction[2])
    tx = ((bmax[0] - ox) / dx if dx > 0.0 else (bmin[0] - ox) / dx) if dx != 0.0 else np.inf
    ty = ((bmax[1] - oy) / dy if dy > 0.0 else (bmin[1] - oy) / dy) if dy != 0.0 else np.inf
    tz = ((bmax[2] - oz) / dz if dz > 0.0 else (bmin[2] - oz) / dz) if dz != 0.0 else np.inf
    face, best = WALL, tx
    if ty < best:
        face, best = WALL, ty
    if tz < best:
        face, best = (CEILING if dz > 0.0 else FLOOR), tz
    return face, float(best)


def _mesh_hit(origin, direction, v0, e1, e2, bvh, t_min):
    if bvh is None:
        return ray_mesh_brute(origin, direction, v0, e1, e2, t_min)
    return ray_mesh_bvh(origin, direction, v0, e1, e2, *bvh, t_min)


def mesh_hits_batch(origins, directions, v0, e1, e2, bvh, t_min, out_idx, out_t):
    """Nearest terrain hit per ray, -1 index / inf distance for misses."""
    for k in range(len(origins)):
        idx, t = _mesh_hit(origins[k], directions[k], v0, e1, e2, bvh, t_min)
        out_idx[k] = idx
        out_t[k] = t


def trace_batch(origins, directions, v0, e1, e2, bvh, bmin, bmax, t_min, out_kind, out_t):
    """Terrain hit if any front-facing triangle intersects, else box exit."""
    for k in range(len(origins)):
        idx, t = _mesh_hit(origins[k], directions[k], v0, e1, e2, bvh, t_min)
        if idx >= 0:
            out_kind[k] = TERRAIN
            out_t[k] = t
        else:
            face, t = ray_box_exit(origins[k], directions[k], bmin, bmax)
            out_kind[k] = face
            out_t[k] = t
