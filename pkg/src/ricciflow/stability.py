"""Representation stability via the negative moment map flow on metrics.

For fixed operators theta_k on V and an evolving SPD metric Q, the descent
flow  dQ/dt = -Q mu_Q / s^2  with  mu_Q = sum_k [theta_k, theta_k^{t_Q}]
and s^2 the current orbit norm lowers sum_k tr(theta_k theta_k^{t_Q}) and
keeps det Q constant (tr mu_Q = 0). Zeros of mu_Q are exactly the metrics
making every theta_k normal.

Verdicts need care: on a non-closed orbit the residual can also decay to
zero (the flow chases a minimum realized only on the orbit's boundary), so
"residual below tolerance" is confirmed by checking that Q has actually
stopped moving; escaping orbits keep drifting until cond(Q) blows past the
divergence limit.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

RESIDUAL_TOL = 1e-8
COND_LIMIT = 1e12
DRIFT_TOL = 1e-7


@dataclass
class RepMetricState:
    theta: np.ndarray    # (n_ops, dv, dv)
    Q: np.ndarray        # SPD metric on V
    trace_sq: float = None   # conserved: sum_k tr(theta_k^2), recorded at construction

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.Q = np.asarray(self.Q, dtype=float)
        if self.theta.ndim != 3 or self.theta.shape[1] != self.theta.shape[2]:
            raise ValueError("theta must be a stack of square matrices")
        dv = self.theta.shape[1]
        if self.Q.shape != (dv, dv):
            raise ValueError(f"Q must be {dv} x {dv}")
        if dv and np.min(np.linalg.eigvalsh(self.Q)) <= 0:
            raise ValueError("Q is not positive definite")
        if self.trace_sq is None:
            self.trace_sq = float(sum(np.trace(t @ t) for t in self.theta))

    def transposes(self):
        """theta_k^{t_Q} = Q^{-1} theta_k^T Q."""
        Qinv = np.linalg.inv(self.Q)
        return np.array([Qinv @ t.T @ self.Q for t in self.theta])

    def orbit_norm(self) -> float:
        """sum_k ||theta_k||_Q^2 = sum_k tr(theta_k theta_k^{t_Q})."""
        tq = self.transposes()
        return float(sum(np.trace(t @ s) for t, s in zip(self.theta, tq)))


def moment_map(state: RepMetricState):
    tq = state.transposes()
    mu = np.zeros_like(state.Q)
    for t, s in zip(state.theta, tq):
        mu += t @ s - s @ t
    return mu


def normality_residual(state: RepMetricState) -> float:
    """Frobenius norm of sum_k [theta_k, theta_k^{t_Q}]; zero iff Q-normal."""
    return float(np.linalg.norm(moment_map(state)))


@dataclass
class MomentFlowPath:
    times: np.ndarray
    Qs: np.ndarray
    residuals: np.ndarray
    norms: np.ndarray          # orbit norm channel, nonincreasing
    trace_sq: float            # conserved (theta is held fixed)
    trace_sq_drift: float
    verdict: str               # "converged" | "unstable orbit" | "inconclusive"
    final: RepMetricState


def moment_map_flow(state: RepMetricState, t_max=1e14, rtol=1e-10,
                    residual_tol=RESIDUAL_TOL, cond_limit=COND_LIMIT,
                    drift_tol=DRIFT_TOL) -> MomentFlowPath:
    """Run the descent flow until confirmed normality, divergence, or t_max."""
    dv = state.theta.shape[1]
    theta = state.theta

    def finish(times, Qs, verdict):
        Qs = np.asarray(Qs)
        residuals = np.array([_residual_of(theta, Q) for Q in Qs])
        norms = np.array([RepMetricState(theta, Q, state.trace_sq).orbit_norm() for Q in Qs])
        final = RepMetricState(theta, Qs[-1], state.trace_sq)
        return MomentFlowPath(times=np.asarray(times), Qs=Qs, residuals=residuals,
                              norms=norms, trace_sq=state.trace_sq, trace_sq_drift=0.0,
                              verdict=verdict, final=final)

    if dv == 0 or normality_residual(state) <= residual_tol:
        return finish(np.zeros(1), state.Q[None].copy(), "converged")

    iu = np.triu_indices(dv)

    def unpack(y):
        Q = np.zeros((dv, dv))
        Q[iu] = y
        return Q + Q.T - np.diag(np.diag(Q))

    def mu_norm_of(Q):
        Qinv = np.linalg.inv(Q)
        mu = np.zeros_like(Q)
        s2 = 0.0
        for t in theta:
            s = Qinv @ t.T @ Q
            mu += t @ s - s @ t
            s2 += float(np.trace(t @ s))
        return mu, s2

    def rhs(t, y):
        Q = unpack(y)
        mu, s2 = mu_norm_of(Q)
        return -(Q @ mu)[iu] / max(s2, 1e-300)

    def ev_res(t, y):
        return float(np.linalg.norm(mu_norm_of(unpack(y))[0])) - residual_tol

    ev_res.terminal = True
    ev_res.direction = -1

    def ev_cond(t, y):
        vals = np.linalg.eigvalsh(unpack(y))
        if vals[0] <= 0:
            return 0.0
        return np.log(vals[-1] / vals[0]) - np.log(cond_limit)

    ev_cond.terminal = True
    ev_cond.direction = 1

    times = [0.0]
    Qs = [state.Q.copy()]
    t0, y0 = 0.0, state.Q[iu]
    sol = solve_ivp(rhs, (t0, t_max), y0, method="RK45", rtol=rtol, atol=1e-12,
                    events=[ev_res, ev_cond])
    times.extend(sol.t[1:].tolist())
    Qs.extend(unpack(col) for col in sol.y.T[1:])
    if sol.status == 1 and len(sol.t_events[1]):
        return finish(times, Qs, "unstable orbit")
    if sol.status != 1:
        return finish(times, Qs, "inconclusive")

    # residual crossed the tolerance: confirm Q has stopped moving; an
    # escaping orbit keeps drifting (log-divergent travel) until cond blows up
    t0 = float(sol.t[-1])
    y0 = sol.y[:, -1]
    while t0 < t_max:
        t1 = min(max(2.0 * t0, t0 + 10.0), t_max)
        seg = solve_ivp(rhs, (t0, t1), y0, method="RK45", rtol=rtol, atol=1e-12,
                        events=[ev_cond])
        times.extend(seg.t[1:].tolist())
        Qs.extend(unpack(col) for col in seg.y.T[1:])
        if seg.status == 1:
            return finish(times, Qs, "unstable orbit")
        drift = np.max(np.abs(seg.y[:, -1] - y0)) / max(1.0, np.max(np.abs(y0)))
        t0, y0 = float(seg.t[-1]), seg.y[:, -1]
        if drift <= drift_tol:
            return finish(times, Qs, "converged")
    return finish(times, Qs, "inconclusive")


def _residual_of(theta, Q):
    Qinv = np.linalg.inv(Q)
    mu = np.zeros_like(Q)
    for t in theta:
        s = Qinv @ t.T @ Q
        mu += t @ s - s @ t
    return float(np.linalg.norm(mu))


@dataclass
class StabilityVerdict:
    stable: bool
    witness_Q: np.ndarray      # minimal metric when stable
    residual: float
    certified: bool
    note: str
    path: MomentFlowPath


def is_stable(d, t_max=1e14, residual_tol=RESIDUAL_TOL) -> StabilityVerdict:
    """Closed-orbit test: run the moment map flow from Q = Identity."""
    from .liealg import killing_form  # compactness certificate for u

    state = RepMetricState(d.theta, np.eye(d.dimV))
    certified = True
    note = ""
    Bu = killing_form(d.u)
    if d.u.dim and np.max(np.linalg.eigvalsh(Bu)) > 1e-10:
        certified = False
        note = "u is not of compact type; the verdict is reported but not certified"
    path = moment_map_flow(state, t_max=t_max, residual_tol=residual_tol)
    if path.verdict == "converged":
        return StabilityVerdict(stable=True, witness_Q=path.final.Q,
                                residual=path.residuals[-1], certified=certified,
                                note=note, path=path)
    if path.verdict == "inconclusive":
        note = (note + "; " if note else "") + \
            f"no convergence or divergence within t_max={t_max:g} (uncertified)"
        certified = False
    return StabilityVerdict(stable=False, witness_Q=path.final.Q,
                            residual=path.residuals[-1], certified=certified,
                            note=note, path=path)
