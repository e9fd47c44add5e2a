"""Stability of representations via the negative moment map flow.

A representation of a compact algebra is stable when its conjugation orbit
is closed, equivalently when some inner product makes all operators normal.
The descent flow on fiber metrics finds that inner product when it exists
and blows up the metric's condition number when it does not.
"""

import numpy as np

from ricciflow import catalog
from ricciflow.stability import RepMetricState, is_stable, moment_map_flow, normality_residual

# a normal family, hidden by a condition-10 conjugation
rng = np.random.default_rng(0)
th0 = np.array([[[0.0, -1, 0], [1, 0, 0], [0, 0, 0]],
                [[1.0, 0, 0], [0, 1, 0], [0, 0, 2]]])
A = rng.standard_normal((3, 3))
Q, R = np.linalg.qr(A)
Q = Q * np.sign(np.diag(R))
S = Q.T @ np.diag([1.0, np.sqrt(10.0), 10.0]) @ Q
theta = np.array([np.linalg.inv(S) @ t @ S for t in th0])

state = RepMetricState(theta, np.eye(3))
print(f"conjugated-normal family: residual {normality_residual(state):.4f} at Q = I")
path = moment_map_flow(state)
print(f"  flow verdict: {path.verdict} after {len(path.times)} samples")
print(f"  final residual {path.residuals[-1]:.2e}, orbit norm "
      f"{path.norms[0]:.4f} -> {path.norms[-1]:.4f} (nonincreasing)")
print(f"  sum tr(theta_k^2) drift: {path.trace_sq_drift:.1e}")

# a Jordan block: the infimum of the orbit norm is not attained
jordan = RepMetricState(np.array([[[1.0, 1.0], [0.0, 1.0]]]), np.eye(2))
path = moment_map_flow(jordan)
cond = np.linalg.cond(path.Qs[-1])
print(f"\nJordan block [[1,1],[0,1]]: verdict '{path.verdict}' with cond(Q) = {cond:.2e}")
print(f"  orbit norm chased its unattained infimum: {path.norms[-1]:.6f} -> 2")

# catalog verdicts
for name in ("E1_su2xR_R3", "E3_heisenberg"):
    v = is_stable(catalog(name).semidirect)
    print(f"\n{name}: stable = {v.stable} (certified: {v.certified})")
    if v.stable:
        print("  witness metric:\n", np.round(v.witness_Q, 6))
