"""The second visualization route: per-slice Delaunay triangulation, stacked.

Instead of one 3D pass, each z-slice contributes a 2D triangulation of its
contour points. Long edges that span the convex hull of a concave contour
are pruned away, then all slice meshes are lifted to their world z and
concatenated. The result reads like a deck of contour cards, which is
exactly what makes it useful next to the watertight isosurface view.
"""

from pathlib import Path

import numpy as np

from sonoviz import (
    Axis,
    export_obj,
    extract_slice,
    extract_slice_points,
    prune_edges,
    stack_slices,
    synth_sphere,
    triangulate_2d,
)

out_dir = Path("demo-output")
out_dir.mkdir(exist_ok=True)

ball = synth_sphere((64, 64, 64), (31.5, 31.5, 31.5), 20.0)

# one slice in detail: contour points -> triangulation -> pruning
sl = extract_slice(ball, Axis.Z, 31)
points = extract_slice_points(sl, iso=0.5, step=1)
print(f"equatorial slice: {len(points)} contour points")
tri = triangulate_2d(points)
print(f"raw Delaunay: {len(tri.triangles)} triangles (fills the convex hull)")
pruned = prune_edges(tri, max_edge=4.0)
print(f"after pruning edges > 4 voxels: {len(pruned.triangles)} triangles")

# the full stack
mesh = stack_slices(ball, iso=0.5, axis=Axis.Z, slice_step=4, point_step=1, max_edge=4.0)
d = np.linalg.norm(mesh.positions - np.array([31.5, 31.5, 31.5], dtype=np.float32), axis=1)
print(
    f"stacked mesh: {mesh.vertex_count} vertices, {mesh.triangle_count} triangles, "
    f"surface distance {d.min():.2f}..{d.max():.2f} (ball radius 20)"
)
(out_dir / "sphere_delaunay_stack.obj").write_text(export_obj(mesh))
print("wrote", out_dir / "sphere_delaunay_stack.obj")
