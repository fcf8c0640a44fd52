import numpy as np
import pytest

from terracorr.mesh import (Heightfield, MeshFormatError, TriangleMesh,
                            compute_bounding_box, load_tdb, select_lod,
                            tdb_summary, triangulate_heightfield)

MINIMAL_MESH = """\
v 0 0 0
v 10 0 0
v 10 10 0
v 0 10 0
f 1 2 3
f 1 3 4
"""

TWO_LOD_MESH = """\
v 0 0 0
v 10 0 0
v 10 10 0
v 0 10 0
v 5 5 3
g lod0
f 1 2 3
f 1 3 4
f 1 2 5
f 2 3 5
f 3 4 5
f 4 1 5
g lod1
f 1 2 3
f 1 3 4
"""

HF_3X3_FLAT = """\
ncols 3
nrows 3
xllcorner 0
yllcorner 0
cellsize 10
nodata_value -9999
0 0 0
0 0 0
0 0 0
"""


class TestLoadTrimesh:
    def test_minimal_two_triangle_file(self, tmp_mesh_file):
        tdb = load_tdb(tmp_mesh_file(MINIMAL_MESH))
        assert tdb.lod_count == 1
        assert tdb.lods[0].triangle_count == 2
        assert tdb.lods[0].vertex_count == 4

    def test_index_out_of_range_reports_line(self, tmp_mesh_file):
        bad = MINIMAL_MESH + "f 1 2 99\n"
        with pytest.raises(MeshFormatError, match=r"index out of range.*line 7"):
            load_tdb(tmp_mesh_file(bad))

    def test_two_lods_parsed_in_order(self, tmp_mesh_file):
        tdb = load_tdb(tmp_mesh_file(TWO_LOD_MESH))
        assert tdb.lod_count == 2
        assert tdb.lods[0].triangle_count == 6
        assert tdb.lods[1].triangle_count == 2

    def test_degenerate_triangles_dropped_and_counted(self, tmp_mesh_file):
        text = MINIMAL_MESH + "f 1 2 2\n"  # zero area
        tdb = load_tdb(tmp_mesh_file(text))
        assert tdb.lods[0].triangle_count == 2
        assert tdb.load_log.dropped_degenerate == 1

    def test_all_degenerate_is_an_error(self, tmp_mesh_file):
        text = "v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n"  # collinear
        with pytest.raises(MeshFormatError, match="zero triangles"):
            load_tdb(tmp_mesh_file(text))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_tdb(tmp_path / "nope.mesh")

    def test_malformed_face_reports_line(self, tmp_mesh_file):
        with pytest.raises(MeshFormatError, match="line 5"):
            load_tdb(tmp_mesh_file("v 0 0 0\nv 1 0 0\nv 0 1 0\n\nf 1 2\n"))

    def test_sidecar_metadata_read(self, tmp_mesh_file):
        meta = {"lat_min": 34.0, "lat_max": 34.1, "lon_min": -117.1, "lon_max": -117.0,
                "ref_lat": 34.0, "ref_lon": -117.1}
        tdb = load_tdb(tmp_mesh_file(MINIMAL_MESH, meta=meta))
        assert tdb.geo_extents.from_sidecar
        assert tdb.geo_extents.lat_min == 34.0
        assert tdb.geo_extents.lat_max == 34.1
        assert tdb.reference_origin == (34.0, -117.1)

    def test_without_sidecar_extents_fall_back_to_local(self, tmp_mesh_file):
        tdb = load_tdb(tmp_mesh_file(MINIMAL_MESH))
        assert not tdb.geo_extents.from_sidecar
        assert tdb.geo_extents.lon_min == 0.0
        assert tdb.geo_extents.lon_max == 10.0
        assert tdb.reference_origin is None


class TestLoadHeightfield:
    def test_flat_3x3(self, tmp_mesh_file):
        tdb = load_tdb(tmp_mesh_file(HF_3X3_FLAT, name="flat.asc"))
        assert tdb.lod_count == 1
        assert tdb.lods[0].triangle_count == 8
        assert tdb.lods[0].vertex_count == 9

    def test_format_inferred_from_extension(self, tmp_mesh_file):
        tdb = load_tdb(tmp_mesh_file(HF_3X3_FLAT, name="flat.asc"))
        assert tdb.source_path.endswith(".asc")

    def test_bad_elevation_count(self, tmp_mesh_file):
        broken = HF_3X3_FLAT.replace("0 0 0\n0 0 0\n0 0 0\n", "0 0 0\n0 0 0\n")
        with pytest.raises(MeshFormatError, match="expected 9 elevations"):
            load_tdb(tmp_mesh_file(broken, name="flat.asc"))


class TestSummaryAndLod:
    def test_counts_sum_over_lods(self, tmp_mesh_file):
        tdb = load_tdb(tmp_mesh_file(TWO_LOD_MESH))
        s = tdb_summary(tdb)
        assert s.triangle_count == 8
        assert s.lod_count == 2
        assert s.vertex_count == tdb.lods[0].vertex_count + tdb.lods[1].vertex_count

    def test_single_lod_vertex_count(self, tmp_mesh_file):
        tdb = load_tdb(tmp_mesh_file(HF_3X3_FLAT, name="f.asc"))
        assert tdb_summary(tdb).vertex_count == 9

    def test_extents_pass_through(self, tmp_mesh_file):
        meta = {"lat_min": 34.0, "lat_max": 34.1, "lon_min": 0.0, "lon_max": 0.1,
                "ref_lat": 34.0, "ref_lon": 0.0}
        s = tdb_summary(load_tdb(tmp_mesh_file(MINIMAL_MESH, meta=meta)))
        assert (s.extents.lat_min, s.extents.lat_max) == (34.0, 34.1)

    def test_select_lod_returns_requested_mesh(self, tmp_mesh_file):
        tdb = load_tdb(tmp_mesh_file(TWO_LOD_MESH))
        assert select_lod(tdb, 0).triangle_count == 6
        assert select_lod(tdb, 1).triangle_count == 2

    def test_select_lod_out_of_range(self, tmp_mesh_file):
        tdb = load_tdb(tmp_mesh_file(TWO_LOD_MESH))
        with pytest.raises(IndexError):
            select_lod(tdb, 5)


class TestTriangulateHeightfield:
    def test_2x2_all_valid(self):
        hf = Heightfield(2, 2, 1.0, (0.0, 0.0), np.zeros((2, 2)))
        assert triangulate_heightfield(hf).triangle_count == 2

    def test_center_nodata_kills_every_cell(self):
        z = np.zeros((3, 3))
        z[1, 1] = -9999.0
        hf = Heightfield(3, 3, 1.0, (0.0, 0.0), z)
        assert triangulate_heightfield(hf).triangle_count == 0

    def test_all_nodata_errors(self):
        hf = Heightfield(2, 2, 1.0, (0.0, 0.0), np.full((2, 2), -9999.0))
        with pytest.raises(ValueError, match="zero triangles"):
            triangulate_heightfield(hf)

    def test_corner_spike_normals_point_up(self):
        z = np.array([[0.0, 0.0], [0.0, 5.0]])
        mesh = triangulate_heightfield(Heightfield(2, 2, 1.0, (0.0, 0.0), z))
        corners = mesh.corners()
        normals = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
        assert (normals[:, 2] > 0).all()

    def test_triangle_count_formula(self):
        for n, m in [(2, 5), (4, 4), (7, 3)]:
            hf = Heightfield(m, n, 2.0, (0.0, 0.0), np.arange(n * m, dtype=float).reshape(n, m) * 0.01)
            mesh = triangulate_heightfield(hf)
            assert mesh.triangle_count == 2 * (n - 1) * (m - 1)
            corners = mesh.corners()
            normals = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
            assert (normals[:, 2] > 0).all()


class TestBoundingBox:
    def test_ceiling_and_floor_rule(self, plane):
        mesh = TriangleMesh(plane.vertices + [0, 0, 0], plane.triangles)
        mesh.vertices[:, 2] = [0, 0, 50, 50]
        box = compute_bounding_box(mesh, max_eyepoint_z=60.0, margin=10.0)
        assert box.ceiling_z == 70.0
        assert box.floor_z == -10.0

    def test_walls_at_mesh_extents(self, plane):
        box = compute_bounding_box(plane, max_eyepoint_z=5.0)
        assert (box.xmin, box.xmax) == (0.0, 100.0)
        assert (box.ymin, box.ymax) == (0.0, 100.0)

    def test_mesh_below_eyepoint_still_cleared(self, plane):
        box = compute_bounding_box(plane, max_eyepoint_z=500.0, margin=1.0)
        assert box.ceiling_z == 501.0

    def test_empty_mesh_rejected(self):
        empty = TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int))
        with pytest.raises(ValueError):
            compute_bounding_box(empty, 0.0)

    def test_contains_is_strict_on_ceiling(self, plane):
        box = compute_bounding_box(plane, max_eyepoint_z=10.0, margin=1.0)
        assert box.contains([50, 50, 10.5])
        assert not box.contains([50, 50, 11.0])
