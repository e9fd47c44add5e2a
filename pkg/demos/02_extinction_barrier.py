"""Finite extinction with a certified linear barrier.

Two runs of the unimodular Ricci flow:

  * su(2) with the bi-invariant metric: the closed-form benchmark, where
    g(t) = (1 - t) g0 collapses at exactly T = 1;
  * the 7-dimensional (su(2) + R) |x R^3 space with a pinched fiber, where
    the top eigenvalue of the metric on the compact semisimple block is
    pushed below the line g(0) - (b0/2) t + C after the integral-term
    correction, forcing extinction before the barrier's root.
"""

import numpy as np

from ricciflow import FlowControls, catalog, extinction_analysis, integrate
from ricciflow.catalog import metric_from_spec

print("--- su(2), bi-invariant start ---")
split = catalog("E2_su2_biinv").split()
traj = integrate(split, np.eye(3), FlowControls(kind="unimodular", t_max=2.0))
rep = extinction_analysis(traj)
print(f"status: {traj.status},  T = {traj.extinction.T_est:.8f} "
      f"(bracket width {traj.extinction.width:.1e})")
print(f"barrier: slope {rep.slope}, correction C~ = {rep.C_tilde:.3e}, "
      f"root {rep.barrier_root:.6f}, certified: {rep.certified}")

print("\n--- (su(2) + R) |x R^3, fiber pinched to diag(1, 1, 4) ---")
split = catalog("E1_su2xR_R3").split()
P0 = metric_from_spec(split, {"kind": "blocks", "mu": "background", "V1": [1.0, 1.0, 4.0]})
traj = integrate(split, P0, FlowControls(kind="unimodular", t_max=5.0, rtol=1e-9))
rep = extinction_analysis(traj, split)
print(f"status: {traj.status},  T = {traj.extinction.T_est:.8f} "
      f"(bracket width {traj.extinction.width:.1e})")
print(f"b0 = {rep.b0} so the barrier slope is {rep.slope}")
print(f"realized integral correction C~ = {rep.C_tilde:.6f}")
print(f"barrier root {rep.barrier_root:.6f} >= T: {traj.extinction.T_est <= rep.barrier_root}")
print(f"pointwise barrier violation: {rep.barrier_violation:.3e} -> certified: {rep.certified}")

print("\nmonitor snapshot (t, top l_ss eigenvalue, barrier budget used):")
g = traj.monitors["glss_max"]
Eint = traj.monitors["barrier_Eint"]
for k in np.linspace(0, len(traj.times) - 1, 8, dtype=int):
    budget = g[0] + rep.slope * traj.times[k] + (rep.running_max / 2) * Eint[k]
    print(f"  t = {traj.times[k]:.4f}   g^l_max = {g[k]:.6f}   barrier = {budget:.6f}")
