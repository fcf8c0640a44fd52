# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled ray kernels; behavior mirrors ``_pure`` operation for operation."""

from libc.math cimport INFINITY

cdef double DET_EPS = 1e-12

cdef int TERRAIN = 0
cdef int WALL = 1
cdef int CEILING = 2
cdef int FLOOR = 3

# Traversal stack depth; the builder caps tree depth well below this.
cdef enum:
    MAX_STACK = 128


cdef inline double _mt(double ox, double oy, double oz,
                       double dx, double dy, double dz,
                       double ax, double ay, double az,
                       double e1x, double e1y, double e1z,
                       double e2x, double e2y, double e2z,
                       double t_min) noexcept nogil:
    cdef double px = dy * e2z - dz * e2y
    cdef double py = dz * e2x - dx * e2z
    cdef double pz = dx * e2y - dy * e2x
    cdef double det = e1x * px + e1y * py + e1z * pz
    if det <= DET_EPS:
        return -1.0
    cdef double inv = 1.0 / det
    cdef double tx = ox - ax
    cdef double ty = oy - ay
    cdef double tz = oz - az
    cdef double u = (tx * px + ty * py + tz * pz) * inv
    if u < 0.0:
        return -1.0
    cdef double qx = ty * e1z - tz * e1y
    cdef double qy = tz * e1x - tx * e1z
    cdef double qz = tx * e1y - ty * e1x
    cdef double v = (dx * qx + dy * qy + dz * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return -1.0
    cdef double t = (e2x * qx + e2y * qy + e2z * qz) * inv
    if t <= t_min:
        return -1.0
    return t


cdef inline int _brute(double ox, double oy, double oz,
                       double dx, double dy, double dz,
                       double[:, ::1] v0, double[:, ::1] e1, double[:, ::1] e2,
                       double t_min, double* t_out) noexcept nogil:
    cdef Py_ssize_t i, n = v0.shape[0]
    cdef int best_i = -1
    cdef double best_t = INFINITY
    cdef double t
    for i in range(n):
        t = _mt(ox, oy, oz, dx, dy, dz,
                v0[i, 0], v0[i, 1], v0[i, 2],
                e1[i, 0], e1[i, 1], e1[i, 2],
                e2[i, 0], e2[i, 1], e2[i, 2], t_min)
        if t >= 0.0 and t < best_t:
            best_t = t
            best_i = <int>i
    t_out[0] = best_t
    return best_i


cdef inline int _slab_entry(double ox, double oy, double oz,
                            double dx, double dy, double dz,
                            double nx0, double ny0, double nz0,
                            double nx1, double ny1, double nz1,
                            double* entry) noexcept nogil:
    cdef double t0 = -INFINITY
    cdef double t1 = INFINITY
    cdef double ta, tb, tmp
    if dx != 0.0:
        ta = (nx0 - ox) / dx
        tb = (nx1 - ox) / dx
        if ta > tb:
            tmp = ta; ta = tb; tb = tmp
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
    elif ox < nx0 or ox > nx1:
        return 0
    if dy != 0.0:
        ta = (ny0 - oy) / dy
        tb = (ny1 - oy) / dy
        if ta > tb:
            tmp = ta; ta = tb; tb = tmp
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
    elif oy < ny0 or oy > ny1:
        return 0
    if dz != 0.0:
        ta = (nz0 - oz) / dz
        tb = (nz1 - oz) / dz
        if ta > tb:
            tmp = ta; ta = tb; tb = tmp
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
    elif oz < nz0 or oz > nz1:
        return 0
    if t0 < 0.0:
        t0 = 0.0
    if t1 < t0:
        return 0
    entry[0] = t0
    return 1


cdef inline int _bvh(double ox, double oy, double oz,
                     double dx, double dy, double dz,
                     double[:, ::1] v0, double[:, ::1] e1, double[:, ::1] e2,
                     double[:, ::1] nmin, double[:, ::1] nmax,
                     int[::1] child, int[::1] start, int[::1] count, int[::1] prim,
                     double t_min, double* t_out) noexcept nogil:
    cdef int stack[MAX_STACK]
    cdef int sp = 0
    cdef int node, left, right, i, c, s, slot
    cdef int best_i = -1
    cdef double best_t = INFINITY
    cdef double entry, el, er, t
    cdef int hl, hr
    stack[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if not _slab_entry(ox, oy, oz, dx, dy, dz,
                           nmin[node, 0], nmin[node, 1], nmin[node, 2],
                           nmax[node, 0], nmax[node, 1], nmax[node, 2], &entry):
            continue
        if entry > best_t:
            continue
        c = count[node]
        if c > 0:
            s = start[node]
            for slot in range(s, s + c):
                i = prim[slot]
                t = _mt(ox, oy, oz, dx, dy, dz,
                        v0[i, 0], v0[i, 1], v0[i, 2],
                        e1[i, 0], e1[i, 1], e1[i, 2],
                        e2[i, 0], e2[i, 1], e2[i, 2], t_min)
                if t >= 0.0 and (t < best_t or (t == best_t and i < best_i)):
                    best_t = t
                    best_i = i
        else:
            left = node + 1
            right = child[node]
            hl = _slab_entry(ox, oy, oz, dx, dy, dz,
                             nmin[left, 0], nmin[left, 1], nmin[left, 2],
                             nmax[left, 0], nmax[left, 1], nmax[left, 2], &el)
            hr = _slab_entry(ox, oy, oz, dx, dy, dz,
                             nmin[right, 0], nmin[right, 1], nmin[right, 2],
                             nmax[right, 0], nmax[right, 1], nmax[right, 2], &er)
            if hl and hr:
                if el <= er:
                    stack[sp] = right; sp += 1
                    stack[sp] = left; sp += 1
                else:
                    stack[sp] = left; sp += 1
                    stack[sp] = right; sp += 1
            elif hl:
                stack[sp] = left; sp += 1
            elif hr:
                stack[sp] = right; sp += 1
    t_out[0] = best_t
    return best_i


cdef inline int _box_exit(double ox, double oy, double oz,
                          double dx, double dy, double dz,
                          double bx0, double by0, double bz0,
                          double bx1, double by1, double bz1,
                          double* t_out) noexcept nogil:
    cdef double tx = INFINITY
    cdef double ty = INFINITY
    cdef double tz = INFINITY
    if dx > 0.0:
        tx = (bx1 - ox) / dx
    elif dx < 0.0:
        tx = (bx0 - ox) / dx
    if dy > 0.0:
        ty = (by1 - oy) / dy
    elif dy < 0.0:
        ty = (by0 - oy) / dy
    if dz > 0.0:
        tz = (bz1 - oz) / dz
    elif dz < 0.0:
        tz = (bz0 - oz) / dz
    cdef int face = WALL
    cdef double best = tx
    if ty < best:
        best = ty
        face = WALL
    if tz < best:
        best = tz
        face = CEILING if dz > 0.0 else FLOOR
    t_out[0] = best
    return face


def ray_triangle(origin, direction, a, b, c, double t_min):
    cdef double ax = a[0], ay = a[1], az = a[2]
    return _mt(origin[0], origin[1], origin[2],
               direction[0], direction[1], direction[2],
               ax, ay, az,
               b[0] - ax, b[1] - ay, b[2] - az,
               c[0] - ax, c[1] - ay, c[2] - az, t_min)


def ray_mesh_brute(origin, direction, double[:, ::1] v0, double[:, ::1] e1, double[:, ::1] e2, double t_min):
    cdef double t
    cdef int idx = _brute(origin[0], origin[1], origin[2],
                          direction[0], direction[1], direction[2],
                          v0, e1, e2, t_min, &t)
    return idx, t


def ray_mesh_bvh(origin, direction, double[:, ::1] v0, double[:, ::1] e1, double[:, ::1] e2,
                 double[:, ::1] node_min, double[:, ::1] node_max,
                 int[::1] node_child, int[::1] node_start, int[::1] node_count, int[::1] prim_index,
                 double t_min):
    cdef double t
    cdef int idx = _bvh(origin[0], origin[1], origin[2],
                        direction[0], direction[1], direction[2],
                        v0, e1, e2, node_min, node_max,
                        node_child, node_start, node_count, prim_index, t_min, &t)
    return idx, t


def ray_box_exit(origin, direction, bmin, bmax):
    cdef double t
    cdef int face = _box_exit(origin[0], origin[1], origin[2],
                              direction[0], direction[1], direction[2],
                              bmin[0], bmin[1], bmin[2], bmax[0], bmax[1], bmax[2], &t)
    return face, t


def mesh_hits_batch(double[:, ::1] origins, double[:, ::1] directions,
                    double[:, ::1] v0, double[:, ::1] e1, double[:, ::1] e2,
                    bvh, double t_min, Py_ssize_t[::1] out_idx, double[::1] out_t):
    cdef Py_ssize_t k, n = origins.shape[0]
    cdef double t
    cdef int idx
    cdef bint use_bvh = bvh is not None
    cdef double[:, ::1] nmin, nmax
    cdef int[::1] child, start, count, prim
    if use_bvh:
        nmin, nmax, child, start, count, prim = bvh
        with nogil:
            for k in range(n):
                idx = _bvh(origins[k, 0], origins[k, 1], origins[k, 2],
                           directions[k, 0], directions[k, 1], directions[k, 2],
                           v0, e1, e2, nmin, nmax, child, start, count, prim, t_min, &t)
                out_idx[k] = idx
                out_t[k] = t
    else:
        with nogil:
            for k in range(n):
                idx = _brute(origins[k, 0], origins[k, 1], origins[k, 2],
                             directions[k, 0], directions[k, 1], directions[k, 2],
                             v0, e1, e2, t_min, &t)
                out_idx[k] = idx
                out_t[k] = t


def trace_batch(double[:, ::1] origins, double[:, ::1] directions,
                double[:, ::1] v0, double[:, ::1] e1, double[:, ::1] e2,
                bvh, bmin, bmax, double t_min,
                signed char[::1] out_kind, double[::1] out_t):
    cdef Py_ssize_t k, n = origins.shape[0]
    cdef double t
    cdef int idx, face
    cdef bint use_bvh = bvh is not None
    cdef double bx0 = bmin[0], by0 = bmin[1], bz0 = bmin[2]
    cdef double bx1 = bmax[0], by1 = bmax[1], bz1 = bmax[2]
    cdef double[:, ::1] nmin, nmax
    cdef int[::1] child, start, count, prim
    if use_bvh:
        nmin, nmax, child, start, count, prim = bvh
        with nogil:
            for k in range(n):
                idx = _bvh(origins[k, 0], origins[k, 1], origins[k, 2],
                           directions[k, 0], directions[k, 1], directions[k, 2],
                           v0, e1, e2, nmin, nmax, child, start, count, prim, t_min, &t)
                if idx >= 0:
                    out_kind[k] = TERRAIN
                    out_t[k] = t
                else:
                    face = _box_exit(origins[k, 0], origins[k, 1], origins[k, 2],
                                     directions[k, 0], directions[k, 1], directions[k, 2],
                                     bx0, by0, bz0, bx1, by1, bz1, &t)
                    out_kind[k] = <signed char>face
                    out_t[k] = t
    else:
        with nogil:
            for k in range(n):
                idx = _brute(origins[k, 0], origins[k, 1], origins[k, 2],
                             directions[k, 0], directions[k, 1], directions[k, 2],
                             v0, e1, e2, t_min, &t)
                if idx >= 0:
                    out_kind[k] = TERRAIN
                    out_t[k] = t
                else:
                    face = _box_exit(origins[k, 0], origins[k, 1], origins[k, 2],
                                     directions[k, 0], directions[k, 1], directions[k, 2],
                                     bx0, by0, bz0, bx1, by1, bz1, &t)
                    out_kind[k] = <signed char>face
                    out_t[k] = t
