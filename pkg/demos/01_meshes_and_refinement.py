"""
Built-in domains, triangulations, and uniform refinement
========================================================

Builds the three built-in domains, refines them, and inspects the
topology bookkeeping (edges, adjacency, boundary flags) that every
later stage relies on.
"""

import numpy as np

from pdwg.mesh import DomainSpec, build_initial_mesh, dump_mesh, refine_uniform

# -- the three built-in domains ------------------------------------------------
# Each initial mesh is a small hand-made triangulation; refinement then
# splits every triangle into four congruent children, so element shapes
# never degrade.
for kind in ("unit_square", "ref_square", "l_shape"):
    domain = DomainSpec(kind)
    mesh = build_initial_mesh(domain)
    print(f"{kind:12s}  area {domain.area:4.1f}  "
          f"initial: {mesh.n_vertices:3d} vertices, {mesh.n_triangles:2d} triangles, "
          f"{mesh.n_edges:3d} edges")

# -- refinement lineage ----------------------------------------------------------
# Refining the unit square: counts quadruple, the mesh size halves
# exactly, and every child knows its parent element.
mesh = build_initial_mesh(DomainSpec("unit_square"))
print("\nlevel   triangles   edges   h_max     boundary edges")
for level in range(5):
    nbnd = int(np.count_nonzero(mesh.is_boundary_edge))
    print(f"{mesh.level:3d}     {mesh.n_triangles:6d}    {mesh.n_edges:5d}   "
          f"{mesh.h_max:.5f}   {nbnd:4d}")
    mesh = refine_uniform(mesh)

# -- adjacency invariants ---------------------------------------------------------
# Interior edges see exactly two triangles, boundary edges one; summed
# signed areas reproduce the domain area.
two_sided = np.count_nonzero(mesh.edge_tris[:, 1] >= 0)
print(f"\nlevel-{mesh.level} mesh: {two_sided} interior edges, "
      f"{mesh.n_edges - two_sided} boundary edges")
print(f"triangle areas sum to {np.sum(mesh.areas):.15f} "
      f"(domain area {mesh.domain.area})")

# parents: each level-1 element descends from one of the two level-0 ones
child = refine_uniform(build_initial_mesh(DomainSpec("unit_square")))
print(f"level-1 parents: {child.parents.tolist()}")

# -- serialization -----------------------------------------------------------------
# The ASCII dump starts with a "V E F" header, then vertices, triangles
# with their region tag, and edges with a boundary flag.
import io

buf = io.StringIO()
dump_mesh(build_initial_mesh(DomainSpec("unit_square")), buf)
print("\nASCII dump of the 2-triangle unit square:")
for line in buf.getvalue().splitlines():
    print("   ", line)
