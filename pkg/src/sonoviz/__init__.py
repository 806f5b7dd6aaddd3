"""Ultrasound volume visualization toolkit.

Pipeline pieces: MetaImage (.mha) I/O, median/Gaussian denoising,
marching-cubes isosurface extraction, stacked per-slice Delaunay
triangulation, mesh export (OBJ, legacy VTK, MSH1 wire format), a CLI,
and an HTTP service feeding the browser viewer.
"""

from .delaunay import (
    CircleSide,
    Point2,
    Triangulation2D,
    extract_slice_points,
    in_circumcircle,
    prune_edges,
    stack_slices,
    triangulate_2d,
)
from .filters import Kernel1D, gaussian_filter, gaussian_kernel_1d, median_filter
from .isosurface import (
    CellCase,
    cell_case,
    classify_cell,
    compute_normals,
    extract_isosurface,
    interpolate_edge,
)
from .mesh import (
    MeshStats,
    TriangleMesh,
    decode_wire_mesh,
    encode_wire_mesh,
    export_obj,
    export_vtk_legacy,
    mesh_stats,
    weld_vertices,
)
from .metaimage import ElementType, MhaHeader, parse_header, read_volume, write_volume
from .volume import (
    Axis,
    ScalarVolume,
    Slice2D,
    add_noise,
    extract_slice,
    index_to_world,
    synth_noise,
    synth_sphere,
    value_range,
)

__version__ = "0.1.0"

__all__ = [
    "Axis",
    "CellCase",
    "CircleSide",
    "ElementType",
    "Kernel1D",
    "MeshStats",
    "MhaHeader",
    "Point2",
    "ScalarVolume",
    "Slice2D",
    "TriangleMesh",
    "Triangulation2D",
    "add_noise",
    "cell_case",
    "classify_cell",
    "compute_normals",
    "decode_wire_mesh",
    "encode_wire_mesh",
    "export_obj",
    "export_vtk_legacy",
    "extract_isosurface",
    "extract_slice",
    "extract_slice_points",
    "gaussian_filter",
    "gaussian_kernel_1d",
    "in_circumcircle",
    "index_to_world",
    "interpolate_edge",
    "median_filter",
    "mesh_stats",
    "parse_header",
    "prune_edges",
    "read_volume",
    "stack_slices",
    "synth_noise",
    "synth_sphere",
    "triangulate_2d",
    "value_range",
    "weld_vertices",
    "write_volume",
]
