"""terracorr: correlation assessment for pairs of triangulated terrain databases.

Traces corresponding line-of-sight rays through two terrain meshes, compares
lengths and blocked/unblocked outcomes, computes a normal-dispersion
roughness metric per terrain block, and reports blocks whose correlation
looks suspect.
"""

__version__ = "0.1.0"

from .accel import SpatialIndex, build_accelerator
from .geodesy import geodetic_to_local, local_to_geodetic
from .los import (HitKind, LosResultSet, Ray, RayHit, RayPairResult,
                  ray_box_intersect, ray_triangle_intersect, run_los_test, trace_ray)
from .mesh import (BoundingBox, GeoExtents, Heightfield, TdbFormat, TdbSummary,
                   TerrainDatabase, TriangleMesh, compute_bounding_box, load_tdb,
                   select_lod, tdb_summary, triangulate_heightfield)
from .report import (BlockClassification, BlockFlag, RoughnessClass, SummaryStats,
                     ThresholdConfig, classify_roughness, flag_blocks,
                     render_grid_report, summarize, write_results_tsv,
                     write_roughness_tsv)
from .roughness import (NormalSet, RoughnessResult, block_roughness, mean_normal,
                        mesh_roughness, normal_dispersion, roughness, triangle_normal)
from .sampling import (BlockGrid, DirectionSpec, EyepointSpec, Rect, TestLocation,
                       build_block_grid, build_eyepoints, direction_vector,
                       generate_directions, generate_test_locations, ground_elevation)
