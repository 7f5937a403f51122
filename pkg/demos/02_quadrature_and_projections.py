"""
Simplex quadrature, orthonormal bases, and L2 projections
=========================================================

Shows the building blocks under the solver: positive-weight interior
quadrature rules on triangles, per-element orthonormal polynomial
bases, and element/edge L2 projections with their expected accuracy.
"""

from math import factorial

import numpy as np

from pdwg.mesh import DomainSpec, build_initial_mesh, refine_uniform
from pdwg.polyquad import (
    edge_quadrature,
    eval_element_poly,
    get_element_rule,
    get_tri_basis,
    project_edge,
    project_element,
    triangle_quadrature,
)

# -- reference-triangle rules ----------------------------------------------------
# Rules are exact through the requested total degree; on the unit
# reference triangle, moments of x^a y^b have the closed form
# a! b! / (a + b + 2)!.
print("degree  points  worst moment error")
for degree in (2, 5, 10, 20):
    rule = triangle_quadrature(degree)
    pts, w = rule.points, rule.weights
    worst = 0.0
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            exact = factorial(a) * factorial(b) / factorial(a + b + 2)
            approx = float(np.sum(w * pts[:, 0] ** a * pts[:, 1] ** b))
            worst = max(worst, abs(approx - exact) / exact)
    inside = bool(np.all(pts > 0) and np.all(pts.sum(axis=1) < 1))
    print(f"{degree:4d}   {len(w):5d}   {worst:.2e}   "
          f"(all weights positive: {np.all(w > 0)}, all points interior: {inside})")

# edge rules are Gauss-Legendre: m points integrate degree 2m-1
rule = edge_quadrature(9)
t, w = rule.points, rule.weights
print(f"\nedge rule of degree 9 uses {len(t)} points; "
      f"sum of weights = {np.sum(w):.15f} (interval length 2)")

# -- orthonormal element bases -----------------------------------------------------
# Each element carries its own orthonormal basis (centered, scaled
# monomials with a Gram-Cholesky correction): the mass matrix is the
# identity to machine precision on every element.
mesh = refine_uniform(build_initial_mesh(DomainSpec("unit_square")))
basis = get_tri_basis(mesh, 2)
pts, wq = get_element_rule(mesh, 8)
V = basis.eval(pts)
gram = np.einsum("eqm,eqn,eq->emn", V, V, wq)
eye = np.eye(gram.shape[-1])
print(f"\nlevel-1 mesh, degree-2 basis: max |Gram - I| over all elements "
      f"= {np.max(np.abs(gram - eye)):.2e}")

# -- projections -------------------------------------------------------------------
# Projecting a quadratic is exact; projecting a transcendental function
# converges at order k+1 = 3 in L2.
q = lambda x, y: 1.0 + 2.0 * x - y + 3.0 * x * y
coeffs = project_element(q, 2, mesh)
diff = eval_element_poly(mesh, 2, coeffs, pts) - q(pts[..., 0], pts[..., 1])
print(f"projection of a polynomial: L2 error {np.sqrt(np.sum(wq * diff**2)):.2e}")

u = lambda x, y: np.sin(x) * np.sin(y)
print("\nprojection of sin(x) sin(y):")
print("level   L2 error     observed order")
prev = None
m = build_initial_mesh(DomainSpec("unit_square"))
for level in range(4):
    if level:
        m = refine_uniform(m)
    c = project_element(u, 2, m)
    p, ww = get_element_rule(m, 10)
    err = float(np.sqrt(np.sum(ww * (eval_element_poly(m, 2, c, p) - u(p[..., 0], p[..., 1])) ** 2)))
    rate = "  --" if prev is None else f"{np.log2(prev / err):.2f}"
    print(f"{level:3d}    {err:.4e}   {rate}")
    prev = err

# edge projections return one coefficient block per mesh edge; vector
# data (a gradient, say) projects component-wise
grad = lambda x, y: np.stack([np.cos(x) * np.sin(y), np.sin(x) * np.cos(y)])
gcoeffs = project_edge(grad, 1, mesh)
print(f"\nedge projection of a gradient field: coefficient block shape {gcoeffs.shape} "
      f"(edges, components, modes)")
