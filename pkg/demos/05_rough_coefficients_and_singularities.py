"""
Discontinuous tensors and a singular solution
=============================================

The method's reason to exist: second-order problems whose coefficient
tensor is merely essentially bounded — too rough for any divergence-form
rewrite.  Well-posedness instead rests on an algebraic ellipticity-ratio
condition, checked here for the two rough built-in tensors, followed by
short refinement studies showing how the convergence rates respond to
the reduced solution regularity.
"""

import numpy as np

from pdwg.analysis import run_study
from pdwg.problems import builtin, cordes_check, cordes_samples
from pdwg.wgspace import SpaceConfig

# -- ellipticity ratios across the catalog -------------------------------------------
# For a symmetric 2x2 tensor the condition reads
#     |a|^2 / (tr a)^2 <= 1 / (1 + eps)   for some eps in (0, 1],
# with eps = 1 exactly for multiples of the identity.  The sign-flip
# tensor gives eps = 3/5 and the radial tensor eps = 4/5 — both by exact
# arithmetic identities, which the checker reproduces bit-for-bit.
print("tensor ellipticity ratios (sampled on a level-3 mesh):")
for name in ("p1", "p3", "p4", "p5"):
    prob = builtin(name)
    x, y, region = cordes_samples(prob.domain)
    rep = cordes_check(prob.coeff, x, y, region)
    print(f"  {name:5s} ratio sup {rep.ratio_sup:.6f}  epsilon {rep.epsilon:.6f}  "
          f"satisfied {rep.satisfied}")

print(f"\nsign-flip tensor epsilon == 3/5 exactly: "
      f"{cordes_check(builtin('p4').coeff, *cordes_samples(builtin('p4').domain)).epsilon == 3/5}")

# -- the sign-flip tensor ---------------------------------------------------------------
# a = [[2, s], [s, 2]] where s = sign(x) sign(y) jumps across both axes.
# The exact solution has matching kinks, yet both error families keep
# their optimal second-order decay.
print("\nsign-flip tensor, kinked solution ((-1,1)^2, 4 levels):")
table = run_study(builtin("p4"), SpaceConfig(k=2, multiplier_space="pkm1", c0_type=True), levels=4)
for line in table.summary_lines():
    print(" ", line)

# -- the singular radial solution ----------------------------------------------------------
# u = |x|^1.6 barely misses H^3; the gradient-trace rate drops from 2 to
# about 1.6 and the multiplier rate to about 0.6, tracking the loss of
# regularity rather than the scheme's order.
print("\nradial tensor, u = |x|^1.6 with the singularity at a corner ((0,1)^2, 4 levels):")
table = run_study(builtin("p5"), SpaceConfig(k=2, multiplier_space="pkm1", c0_type=True), levels=4)
for line in table.summary_lines():
    print(" ", line)

print("\nsame fields with the singular point interior ((-1,1)^2, 4 levels):")
table = run_study(builtin("p5ref"), SpaceConfig(k=2, multiplier_space="pkm1", c0_type=True), levels=4)
for line in table.summary_lines():
    print(" ", line)
final = table.final_orders()
print(f"\ninterior singularity drags every rate toward ~1: "
      f"e0 {final['e0']:.2f}, eg {final['eg']:.2f}, gamma {final['gamma']:.2f}")
