"""Ray-kernel implementation selection.

The compiled extension (``_native``, Cython) is used when it built; the
numpy fallback (``_pure``) is selected otherwise.  Set ``TERRACORR_KERNELS``
to ``pure`` or ``native`` to force one (``native`` raises if unavailable).
Both expose the same functions and must return equivalent results; the test
suite and ``benchmarks/bench_kernels.py`` compare them directly.
"""
from __future__ import annotations

import os

from . import _pure

_choice = os.environ.get("TERRACORR_KERNELS", "").strip().lower()
if _choice not in ("", "pure", "native"):
    raise RuntimeError(f"TERRACORR_KERNELS must be 'pure' or 'native', not {_choice!r}")

if _choice == "pure":
    _impl = _pure
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        if _choice == "native":
            raise
        _impl = _pure

IMPLEMENTATION = "native" if _impl is not _pure else "pure"

TERRAIN = _pure.TERRAIN
WALL = _pure.WALL
CEILING = _pure.CEILING
FLOOR = _pure.FLOOR
DET_EPS = _pure.DET_EPS

# Minimum hit distance: guards against self-intersection for eyepoints
# sitting just above the surface they were grounded on.
RAY_EPS = 1e-6

ray_triangle = _impl.ray_triangle
ray_mesh_brute = _impl.ray_mesh_brute
ray_mesh_bvh = _impl.ray_mesh_bvh
ray_box_exit = _impl.ray_box_exit
mesh_hits_batch = _impl.mesh_hits_batch
trace_batch = _impl.trace_batch


def implementations() -> dict[str, object]:
    """Importable kernel modules, keyed by name ('pure' always present)."""
    out: dict[str, object] = {"pure": _pure}
    try:
        from . import _native
        out["native"] = _native
    except ImportError:
        pass
    return out
