"""
Weak unknowns, the discrete weak Hessian, and the stabilizer
============================================================

The solver's field variable is a triplet: an interior polynomial, its
boundary trace, and an independent boundary gradient.  Second
derivatives of that triplet are defined weakly, element by element,
through integration by parts against a multiplier-space test function.
This script verifies the two structural facts everything else rests on:

* projecting an exact field and then taking the discrete weak Hessian
  equals projecting the exact second derivatives (commutativity), and
* the stabilizer — the penalty gluing interior values to the trace
  unknowns — vanishes exactly on conforming inputs and decays at a
  fixed rate on projected smooth data.
"""

import numpy as np

from pdwg.assembly import assemble_stabilizer, stabilizer_energy
from pdwg.mesh import DomainSpec, build_initial_mesh, refine_uniform
from pdwg.polyquad import project_element
from pdwg.wgspace import (
    SpaceConfig,
    apply_weak_hessian,
    build_dof_map,
    interpolate_weak,
    project_weak,
    weak_hessian_local,
)

# -- the discrete spaces -----------------------------------------------------------
# Default element: continuous degree-2 interior field, degree-1 edge
# gradient, degree-1 multiplier.  The "general" variant adds a separate
# degree-2 trace unknown per edge.
mesh = build_initial_mesh(DomainSpec("unit_square"))
for _ in range(3):
    mesh = refine_uniform(mesh)

for c0 in (True, False):
    config = SpaceConfig(k=2, multiplier_space="pkm1", c0_type=c0)
    dm = build_dof_map(mesh, config)
    kind = "continuous interior" if c0 else "fully discontinuous"
    print(f"{kind:22s}: {dm.n_primal:5d} primal unknowns "
          f"({len(dm.constrained):3d} fixed by boundary data), {dm.n_mult:4d} multipliers")

# -- commutativity -------------------------------------------------------------------
# Project w = sin(x) sin(y) into the triplet space, apply the weak
# Hessian, and compare with projecting the exact second derivatives.
w = lambda x, y: np.sin(x) * np.sin(y)
gw = lambda x, y: np.stack([np.cos(x) * np.sin(y), np.sin(x) * np.cos(y)])
second = {
    (1, 1): lambda x, y: -np.sin(x) * np.sin(y),
    (1, 2): lambda x, y: np.cos(x) * np.cos(y),
    (2, 2): lambda x, y: -np.sin(x) * np.sin(y),
}

print("\ncommutativity of projection and weak Hessian (level-3 mesh):")
for mult in ("pkm1", "pkm2"):
    config = SpaceConfig(k=2, multiplier_space=mult, c0_type=False)
    dm = build_dof_map(mesh, config)
    v = project_weak(mesh, config, w, gw)
    hess = weak_hessian_local(mesh, config)
    local = dm.local_vectors(v)
    worst = 0.0
    for (i, j), d2 in second.items():
        weak = apply_weak_hessian(local, hess, i, j)
        exact = project_element(d2, config.mult_degree, mesh)
        worst = max(worst, float(np.max(np.abs(weak - exact))))
    print(f"  multiplier degree {config.mult_degree}: max coefficient discrepancy {worst:.2e}")

# -- stabilizer on conforming input ---------------------------------------------------
# A projected global quadratic has matching traces, so both jump terms
# vanish; evaluating the jumps pointwise resolves that zero far below
# what the assembled quadratic form can see.
q = lambda x, y: 1.0 + x - 2.0 * y + x**2 + 3.0 * x * y + 2.0 * y**2
gq = lambda x, y: np.stack([1.0 + 2.0 * x + 3.0 * y, -2.0 + 3.0 * x + 4.0 * y])
config = SpaceConfig(k=2, multiplier_space="pkm1", c0_type=False)
dm = build_dof_map(mesh, config)
v = project_weak(mesh, config, q, gq)
S = assemble_stabilizer(mesh, dm)
print(f"\nstabilizer on a projected quadratic (|v|^2 = {v @ v:.1f}):")
print(f"  pointwise-jump energy   {stabilizer_energy(mesh, dm, v):.2e}")
print(f"  assembled v' S v        {v @ (S @ v):.2e}  (cancellation floor of the matrix route)")

# -- stabilizer decay on smooth data ---------------------------------------------------
# On projected transcendental data the mismatch is pure approximation
# error; its energy decays at order 2(k-1) = 2.
print("\nstabilizer energy on projected sin(x) sin(y):")
print("level   energy       observed order")
m = build_initial_mesh(DomainSpec("unit_square"))
prev = None
for level in range(4):
    if level:
        m = refine_uniform(m)
    cfg = SpaceConfig(k=2, multiplier_space="pkm1", c0_type=True)
    dmm = build_dof_map(m, cfg)
    vv = interpolate_weak(m, cfg, w, gw)
    e = stabilizer_energy(m, dmm, vv)
    rate = "  --" if prev is None else f"{np.log2(prev / e):.2f}"
    print(f"{level:3d}    {e:.4e}   {rate}")
    prev = e
