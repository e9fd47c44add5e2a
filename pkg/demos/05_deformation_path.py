"""Scalar-curvature-monotone deformation toward block-diagonal metrics.

A metric with a tilted horizontal distribution is straightened by scaling
the graph map phi down to zero. Only the O'Neill integrability term of the
unimodular scalar curvature changes, exactly quadratically in (1 - t), so
Rscal* never decreases along the path. The nilpotent-fiber side is the
algebraic soliton fit Ric = c Id + D on the Heisenberg algebra.
"""

import numpy as np

from ricciflow import catalog, scalar_curvatures, scalar_star_terms
from ricciflow.catalog import heisenberg, random_adapted_metric
from ricciflow.deform import (SubmersionSplit, assemble, nilsoliton_fit,
                              retract_horizontal, submersion_split)

split = catalog("E1_su2xR_R3").split()
rng = np.random.default_rng(7)
P = random_adapted_metric(split, rng)
ss = submersion_split(split, P)
phi = 0.5 * rng.standard_normal(ss.phi.shape)
seeded = submersion_split(split, assemble(
    SubmersionSplit(split=split, gB=ss.gB, gF=ss.gF, phi=phi)))

print("retraction r_t: scale the horizontal graph by (1 - t)")
print("  t      Rscal*        O'Neill term   (1-t)^2 * initial")
base_oneill = scalar_star_terms(split, assemble(seeded))[1]
for t in np.linspace(0.0, 1.0, 6):
    Pt = retract_horizontal(seeded, t).P
    rstar = scalar_curvatures(split, Pt)[1]
    oneill = scalar_star_terms(split, Pt)[1]
    print(f"  {t:.1f}  {rstar:12.6f}  {oneill:14.8f}  {base_oneill * (1 - t) ** 2:14.8f}")
print("Rscal* is nondecreasing and the O'Neill channel is exactly quadratic")

fit = nilsoliton_fit(heisenberg(), np.eye(3))
print("\nHeisenberg nilsoliton fit (standard metric):")
print(f"  Ric = c Id + D with c = {fit.c}, "
      f"D = diag{tuple(float(x) for x in np.round(np.diag(fit.D), 12))}")
print(f"  residual {fit.residual:.2e} -> algebraic Ricci soliton")
