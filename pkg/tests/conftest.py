import numpy as np
import pytest

from terracorr.mesh import Heightfield, TriangleMesh, triangulate_heightfield


def flat_plane_mesh(size=100.0, z=0.0, name="plane"):
    """Two triangles covering [0, size]^2 at constant elevation, CCW up."""
    vertices = np.array([
        [0.0, 0.0, z], [size, 0.0, z], [size, size, z], [0.0, size, z],
    ])
    triangles = np.array([[0, 1, 2], [0, 2, 3]])
    return TriangleMesh(vertices, triangles, name=name)


def hilly_mesh(n=20, size=100.0, amplitude=8.0, seed=0, name="hills"):
    """Deterministic smooth terrain from a heightfield of sinusoid bumps."""
    rng = np.random.default_rng(seed)
    cell = size / (n - 1)
    xs = np.arange(n) * cell
    gx, gy = np.meshgrid(xs, xs)
    z = amplitude * (np.sin(gx / size * 2 * np.pi) * np.cos(gy / size * 2 * np.pi))
    z += rng.normal(0, amplitude * 0.05, z.shape)
    hf = Heightfield(ncols=n, nrows=n, cell_size=cell, origin=(0.0, 0.0), elevations=z)
    mesh = triangulate_heightfield(hf)
    mesh.name = name
    return mesh


def wall_mesh(size=100.0, wall_y=50.0, wall_height=10.0, name="plane+wall"):
    """Flat plane plus a double-sided vertical wall across the full AOI."""
    z = 0.0
    vertices = [
        [0.0, 0.0, z], [size, 0.0, z], [size, size, z], [0.0, size, z],
        [0.0, wall_y, 0.0], [size, wall_y, 0.0], [size, wall_y, wall_height], [0.0, wall_y, wall_height],
    ]
    triangles = [
        [0, 1, 2], [0, 2, 3],
        # south-facing side (normal -y)
        [4, 5, 6], [4, 6, 7],
        # north-facing side (normal +y)
        [4, 6, 5], [4, 7, 6],
    ]
    return TriangleMesh(np.array(vertices, dtype=float), np.array(triangles), name=name)


def random_soup_mesh(n_triangles, seed, extent=100.0, name="soup"):
    """Independent random triangles inside a box (no degenerates in practice)."""
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0, extent, (n_triangles, 1, 3))
    corners = centers + rng.uniform(-extent * 0.05, extent * 0.05, (n_triangles, 3, 3))
    vertices = corners.reshape(-1, 3)
    triangles = np.arange(3 * n_triangles).reshape(-1, 3)
    return TriangleMesh(vertices, triangles, name=name)


def write_mesh_file(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def plane():
    return flat_plane_mesh()


@pytest.fixture
def tmp_mesh_file(tmp_path):
    def make(text, name="terrain.mesh", meta=None):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        if meta is not None:
            import json
            (tmp_path / (name + ".meta.json")).write_text(json.dumps(meta), encoding="utf-8")
        return p
    return make
