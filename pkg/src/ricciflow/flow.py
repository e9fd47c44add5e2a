"""Ricci / unimodular Ricci flow as an ODE on invariant metrics.

dP/dt = -2 * (curvature tensor of the requested kind), expressed against the
fixed background basis of the split. Integration uses the Dormand-Prince
5(4) embedded pair (scipy's RK45) with an eigenvalue-collapse event for
extinction; monitor channels are sampled at the accepted steps and never
projected or smoothed.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .curvature import InvariantMetric, ricci, tensor_norm, _P_of
from .homspace import TOL_BLOCK, ReductiveSplit, ad_h_equivariance_residual, check_theta_adapted


@dataclass
class FlowControls:
    kind: str = "ricci"            # "ricci" | "unimodular"
    t_max: float = 10.0
    rtol: float = 1e-8
    atol: float = 1e-10
    h_init: float = None           # first step (None: integrator's choice)
    h_min: float = 1e-13           # advisory floor used to label stiff failures
    h_max: float = None            # max step (None: t_max / 64)
    extinction_eps: float = 1e-8   # relative floor for min eigenvalue of P

    def __post_init__(self):
        if self.kind not in ("ricci", "unimodular"):
            raise ValueError(f"unknown flow kind {self.kind!r}")
        if min(self.rtol, self.atol, self.extinction_eps) <= 0:
            raise ValueError("rtol, atol, extinction_eps must be positive")
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if self.h_init is not None and self.h_min >= self.h_init:
            raise ValueError("h_min must be smaller than h_init")


@dataclass
class ExtinctionInfo:
    T_est: float
    bracket: tuple
    width: float


@dataclass
class FlowTrajectory:
    split: ReductiveSplit
    kind: str
    times: np.ndarray
    metrics: np.ndarray            # (T, m, m)
    monitors: dict                 # channel name -> ndarray over times
    channel_order: list
    adapted: bool
    status: str                    # "reached-t-max" | "extinct" | "stiff-failure"
    controls: FlowControls
    extinction: ExtinctionInfo = None
    message: str = ""
    _sol: object = field(default=None, repr=False)

    def metric_at(self, t):
        """Dense-output metric P(t) inside the integrated span."""
        if self._sol is None:
            raise ValueError("trajectory has no dense output")
        if t < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise ValueError(f"t={t} outside integrated range [{self.times[0]}, {self.times[-1]}]")
        return _unpack(self._sol(t), self.split.dim_m)


def _tri_indices(m):
    return np.triu_indices(m)


def _pack(P, iu):
    return P[iu]


def _unpack(y, m):
    P = np.zeros((m, m))
    iu = np.triu_indices(m)
    P[iu] = y
    P = P + P.T - np.diag(np.diag(P))
    return P


def _safe_spd(P, floor):
    """Clamp eigenvalues at the extinction floor so trial stages that
    overshoot the singularity stay evaluable; past a meaningless floor the
    resulting overflow makes the step estimator reject, which is the honest
    outcome (stiff failure), not an invented continuation."""
    vals, vecs = np.linalg.eigh(P)
    if vals[0] >= floor:
        return P
    vals = np.maximum(vals, floor)
    return (vecs * vals) @ vecs.T


def integrate(split: ReductiveSplit, g0, controls: FlowControls, wd=None) -> FlowTrajectory:
    """Integrate the flow from g0 and record the monitor channels."""
    P0 = _P_of(g0, split)
    InvariantMetric(split, P0)  # validate SPD + equivariance
    m = split.dim_m
    iu = _tri_indices(m)
    adapted = check_theta_adapted(split, P0) <= TOL_BLOCK
    floor = controls.extinction_eps * float(np.min(np.linalg.eigvalsh(P0)))
    unimodular = controls.kind == "unimodular"

    nan_y = np.full(len(iu[0]), np.nan)

    def rhs(t, y):
        # non-finite trial states (post-singularity) must reject the step,
        # not crash the run: hand the error estimator NaNs
        if not np.all(np.isfinite(y)):
            return nan_y
        try:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                P = _safe_spd(_unpack(y, m), 0.25 * floor)
                rep = ricci(split, P)
        except np.linalg.LinAlgError:
            return nan_y
        R = rep.ric_star if unimodular else rep.ric
        return -2.0 * _pack(R, iu)

    def hit_floor(t, y):
        if not np.all(np.isfinite(y)):
            return 1.0
        try:
            return float(np.min(np.linalg.eigvalsh(_unpack(y, m)))) - floor
        except np.linalg.LinAlgError:
            return 1.0

    hit_floor.terminal = True
    hit_floor.direction = -1

    h_max = controls.h_max if controls.h_max is not None else controls.t_max / 64.0
    kwargs = dict(rtol=controls.rtol, atol=controls.atol, max_step=h_max,
                  dense_output=True, events=[hit_floor])
    if controls.h_init is not None:
        kwargs["first_step"] = controls.h_init
    sol = solve_ivp(rhs, (0.0, controls.t_max), _pack(P0, iu), method="RK45", **kwargs)

    if sol.status == 1:
        status = "extinct"
    elif sol.status == 0:
        status = "reached-t-max"
    else:
        status = "stiff-failure"
    message = sol.message
    if status == "stiff-failure":
        last_h = float(np.diff(sol.t[-2:])[0]) if len(sol.t) > 1 else 0.0
        message += (f" (last accepted step {last_h:.3e}"
                    f"{' < h_min' if last_h < controls.h_min else ''},"
                    " no extinction bracket)")

    times = sol.t
    metrics = np.array([_unpack(col, m) for col in sol.y.T])
    extinction = None
    if status == "extinct":
        extinction = _refine_extinction(sol, m, floor)
    traj = FlowTrajectory(split=split, kind=controls.kind, times=times, metrics=metrics,
                          monitors={}, channel_order=[], adapted=adapted, status=status,
                          controls=controls, extinction=extinction, message=message,
                          _sol=sol.sol)
    _attach_monitors(traj)
    return traj


def _refine_extinction(sol, m, floor, target_width=1e-9):
    t_event = float(sol.t_events[0][0])
    lo = float(sol.t[-2]) if len(sol.t) > 1 else 0.0
    hi = t_event

    def f(t):
        return float(np.min(np.linalg.eigvalsh(_unpack(sol.sol(t), m)))) - floor

    # keep f(lo) > 0; the event time itself is a certified root up to solver
    # tolerance, so bisection only needs to tighten the left end
    for _ in range(200):
        if hi - lo <= target_width:
            break
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return ExtinctionInfo(T_est=t_event, bracket=(lo, hi), width=hi - lo)


# ---------------------------------------------------------------------------
# monitor channels
# ---------------------------------------------------------------------------

def _attach_monitors(traj: FlowTrajectory):
    split = traj.split
    times, metrics = traj.times, traj.metrics
    T = len(times)
    blocks = split.V_block_pos
    dims = [len(b) for b in blocks]
    dV = sum(dims)
    nl = len(split.l_pos)
    nlss = len(split.lss_pos)

    ch = {}
    order = []

    def add(name, arr):
        ch[name] = np.asarray(arr, dtype=float)
        order.append(name)

    gV_blocks = [np.zeros((T, d)) for d in dims]
    gV_all = np.zeros((T, dV))
    gl = np.zeros((T, nl))
    glss_max = np.zeros(T)
    fbar = np.zeros((T, dV))
    f_ = np.zeros((T, dV))
    barrier_E = np.zeros(T)
    scal = np.zeros(T)
    scal_star = np.zeros(T)
    ric_n2 = np.zeros(T)
    ric_star_n2 = np.zeros(T)
    adapted_res = np.zeros(T)
    equiv_res = np.zeros(T)

    for k in range(T):
        P = metrics[k]
        rep = ricci(split, P)
        scal[k] = rep.scal
        scal_star[k] = rep.scal_star
        Pinv = np.linalg.inv(P)
        ric_n2[k] = float(np.trace((Pinv @ rep.ric) @ (Pinv @ rep.ric)))
        ric_star_n2[k] = float(np.trace((Pinv @ rep.ric_star) @ (Pinv @ rep.ric_star)))
        adapted_res[k] = check_theta_adapted(split, P)
        equiv_res[k] = ad_h_equivariance_residual(split, P)

        for a, vs in enumerate(blocks):
            gV_blocks[a][k] = np.linalg.eigvalsh(P[np.ix_(vs, vs)])
        if dV:
            Vp = split.V_pos
            vals, vecs = np.linalg.eigh(P[np.ix_(Vp, Vp)])
            gV_all[k] = vals
            Rbar = vecs.T @ rep.ric_star[np.ix_(Vp, Vp)] @ vecs
            dbar = np.diag(Rbar)
            dA = dbar / vals
            fbar[k] = np.cumsum(dbar[::-1])[::-1]   # sums over i >= i0
            f_[k] = np.cumsum(dA[::-1])[::-1]
        if nl:
            gl[k] = np.linalg.eigvalsh(P[np.ix_(split.l_pos, split.l_pos)])
        if nlss:
            lvals, lvecs = np.linalg.eigh(P[np.ix_(split.lss_pos, split.lss_pos)])
            glss_max[k] = lvals[-1]
            if dV:
                # at (near-)ties of the top eigenvalue the forward derivative is
                # governed by the extremal direction in the tie eigenspace, so
                # the barrier channel takes the max of the error form there
                tie = lvals >= lvals[-1] - 1e-8 * max(lvals[-1], 1.0)
                W = lvecs[:, tie]
                M = _l_error_form(split, P, nlss)
                err = float(np.max(np.linalg.eigvalsh(W.T @ M @ W)))
                barrier_E[k] = 4.0 * err / lvals[-1]

    for a, d in enumerate(dims):
        for i in range(d):
            add(f"gV{a + 1}_{i + 1}", gV_blocks[a][:, i])
    for i in range(dV):
        add(f"gVall_{i + 1}", gV_all[:, i])
    for i0 in range(dV):
        add(f"partial_sum_{i0 + 1}", np.sum(gV_all[:, i0:], axis=1))
    if dV:
        add("pinch", gV_all[:, -1] / gV_all[:, 0])
        for a, d in enumerate(dims):
            add(f"pinchV{a + 1}", gV_blocks[a][:, -1] / gV_blocks[a][:, 0])
    for i0 in range(dV):
        add(f"fbar_{i0 + 1}", fbar[:, i0])
    for i0 in range(dV):
        add(f"f_{i0 + 1}", f_[:, i0])
    for i0 in range(dV):
        add(f"Fbarint_{i0 + 1}", _cumtrapz(fbar[:, i0], times))
    for i0 in range(dV):
        add(f"Fint_{i0 + 1}", _cumtrapz(f_[:, i0], times))
    for i in range(nl):
        add(f"gl_{i + 1}", gl[:, i])
    if nlss:
        add("glss_max", glss_max)
        add("barrier_E", barrier_E)
        add("barrier_Eint", _cumtrapz(barrier_E, times))
    add("scal", scal)
    add("scal_star", scal_star)
    add("ric_norm2", ric_n2)
    add("ric_star_norm2", ric_star_n2)
    add("adapted_residual", adapted_res)
    add("equiv_residual", equiv_res)

    traj.monitors = ch
    traj.channel_order = order


def _l_error_form(split, P, nlss):
    """The l-direction error term as a quadratic form on the l_ss block."""
    M = np.zeros((nlss, nlss))
    lss = split.l_pos[:nlss]
    for vs in split.V_block_pos:
        gvals, Abar = np.linalg.eigh(P[np.ix_(vs, vs)])
        cl = split.cm[np.ix_(lss, vs, vs)]
        T = np.einsum("bi,abc,cj->aij", Abar, cl, Abar, optimize=True)
        ratio = gvals[:, None] / gvals[None, :]
        M += 0.25 * np.einsum("aij,bij,ij->ab", T, T, ratio + ratio.T - 2.0, optimize=True)
    return M


def _cumtrapz(y, t):
    out = np.zeros_like(y, dtype=float)
    if len(t) > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def central_difference(t, y):
    """Second-order derivative estimate at interior samples of a nonuniform grid."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    h1 = t[1:-1] - t[:-2]
    h2 = t[2:] - t[1:-1]
    return (-h2 / (h1 * (h1 + h2)) * y[:-2]
            + (h2 - h1) / (h1 * h2) * y[1:-1]
            + h1 / (h2 * (h1 + h2)) * y[2:])


# ---------------------------------------------------------------------------
# verifications
# ---------------------------------------------------------------------------

@dataclass
class ScalarEvolutionReport:
    max_deviation: float
    at_time: float
    kind: str


def verify_scalar_evolution(traj: FlowTrajectory) -> ScalarEvolutionReport:
    """Finite-difference dR/dt against 2 tr(Ric^2) for the flow's kind.

    The Einstein closed form pins the constant: dR/dt = R^2 * (2/n) there.
    """
    t = traj.times
    if len(t) < 3:
        raise ValueError("need at least 3 samples to form central differences")
    if traj.kind == "unimodular":
        R = traj.monitors["scal_star"]
        target = 2.0 * traj.monitors["ric_star_norm2"]
    else:
        R = traj.monitors["scal"]
        target = 2.0 * traj.monitors["ric_norm2"]
    fd = central_difference(t, R)
    mid = target[1:-1]
    scale = np.max(np.abs(target), initial=0.0)
    if scale == 0.0:
        dev = np.abs(fd)
    else:
        dev = np.abs(fd - mid) / np.maximum(np.abs(mid), 1e-12 * scale)
    k = int(np.argmax(dev)) if len(dev) else 0
    return ScalarEvolutionReport(max_deviation=float(np.max(dev, initial=0.0)),
                                 at_time=float(t[1 + k]) if len(dev) else float(t[0]),
                                 kind=traj.kind)


@dataclass
class MonotonicityReport:
    ok: bool
    checks: dict          # name -> (ok, worst violation)
    note: str = ""


def verify_monotonicity(traj: FlowTrajectory, tol=1e-8) -> MonotonicityReport:
    """Channel-wise monotonicity and integral bounds for adapted trajectories."""
    if not traj.adapted:
        raise ValueError("monotonicity checks need a theta-adapted trajectory")
    ch = traj.monitors
    checks = {}

    def scale_of(x):
        return max(float(np.max(np.abs(x), initial=0.0)), 1.0)

    def nonincreasing(name, x):
        worst = float(np.max(np.diff(x), initial=0.0))
        checks[name] = (worst <= tol * scale_of(x), worst)

    def nondecreasing(name, x):
        worst = float(-np.min(np.diff(x), initial=0.0))
        checks[name] = (worst <= tol * scale_of(x), worst)

    def nonnegative(name, x, family_scale=None):
        # identically-zero channels (e.g. the full V-trace) carry noise set by
        # the curvature scale, not by their own magnitude
        worst = float(-np.min(x, initial=0.0))
        checks[name] = (worst <= tol * (family_scale or scale_of(x)), worst)

    def bounded(name, x, bound):
        worst = float(np.max(x - bound, initial=0.0))
        checks[name] = (worst <= tol * max(scale_of(x), abs(bound)), worst)

    dims = [len(b) for b in traj.split.V_block_pos]
    dV = sum(dims)
    for a, d in enumerate(dims):
        nonincreasing(f"gV{a + 1}_max", ch[f"gV{a + 1}_{d}"])
        nondecreasing(f"gV{a + 1}_min", ch[f"gV{a + 1}_1"])
        nonincreasing(f"pinchV{a + 1}", ch[f"pinchV{a + 1}"])
    if dV:
        nonincreasing("gVall_max", ch[f"gVall_{dV}"])
        nondecreasing("gVall_min", ch["gVall_1"])
        nonincreasing("pinch", ch["pinch"])
        g1_0 = ch["gVall_1"][0]
        fscale = max(max(scale_of(ch[f"fbar_{i0}"]), scale_of(ch[f"f_{i0}"]))
                     for i0 in range(1, dV + 1))
        for i0 in range(1, dV + 1):
            nonincreasing(f"partial_sum_{i0}", ch[f"partial_sum_{i0}"])
            nonnegative(f"fbar_{i0}", ch[f"fbar_{i0}"], fscale)
            nonnegative(f"f_{i0}", ch[f"f_{i0}"], fscale)
            s0 = ch[f"partial_sum_{i0}"][0]
            bounded(f"Fbarint_{i0}", ch[f"Fbarint_{i0}"], s0 / 2.0)
            bounded(f"Fint_{i0}", ch[f"Fint_{i0}"], s0 / (2.0 * g1_0))
    note = "" if traj.kind == "unimodular" else \
        "bounds are derived for the unimodular kind; reported as-is for this trajectory"
    ok = all(v[0] for v in checks.values())
    return MonotonicityReport(ok=ok, checks=checks, note=note)


@dataclass
class ExtinctionReport:
    applicable: bool
    certified: bool
    b0: float
    slope: float
    C_tilde: float
    barrier_root: float
    running_max: float
    barrier_violation: float
    extinction: ExtinctionInfo
    note: str = ""


def extinction_analysis(traj: FlowTrajectory, split: ReductiveSplit = None,
                        tol=1e-8) -> ExtinctionReport:
    """Certify the linear barrier for the top l_ss metric eigenvalue."""
    split = split or traj.split
    if not traj.adapted:
        raise ValueError("extinction analysis needs a theta-adapted trajectory")
    if len(split.lss_pos) == 0:
        return ExtinctionReport(applicable=False, certified=False, b0=0.0, slope=0.0,
                                C_tilde=0.0, barrier_root=float("inf"), running_max=0.0,
                                barrier_violation=0.0, extinction=traj.extinction,
                                note="barrier hypothesis fails (l_ss = 0, no compact semisimple direction): flow may be immortal")
    g = traj.monitors["glss_max"]
    Eint = traj.monitors.get("barrier_Eint", np.zeros_like(g))
    b0 = split.b0
    running_max = float(np.max(g))
    C_tilde = running_max * float(Eint[-1]) / 2.0
    barrier = g[0] - (b0 / 2.0) * traj.times + (running_max / 2.0) * Eint
    violation = float(np.max(g - barrier, initial=0.0))
    certified = violation <= tol * max(1.0, running_max)
    root = (g[0] + C_tilde) / (b0 / 2.0) if b0 > 0 else float("inf")
    note = ""
    if traj.kind != "unimodular":
        note = "barrier chain is derived for the unimodular flow"
    if traj.status == "extinct" and certified and traj.extinction.T_est > root + tol * max(1.0, root):
        certified = False
        note = (note + "; " if note else "") + "extinction happened after the certified barrier root"
    return ExtinctionReport(applicable=True, certified=certified, b0=b0, slope=-b0 / 2.0,
                            C_tilde=C_tilde, barrier_root=root, running_max=running_max,
                            barrier_violation=violation, extinction=traj.extinction, note=note)


@dataclass
class BlowdownEntry:
    s: float
    metric: np.ndarray
    ric_norm: float
    scal: float


@dataclass
class BlowdownReport:
    t_ref: float
    entries: list
    rscal_t: np.ndarray      # channel Rscal(g(t)) * t over the trajectory samples
    times: np.ndarray


def blowdown(traj: FlowTrajectory, s_values, t_ref=None) -> BlowdownReport:
    """Parabolic rescalings s^{-1} g(s t_ref) with their curvature sizes."""
    s_values = sorted(float(s) for s in s_values)
    if t_ref is None:
        t_ref = traj.times[-1] / max(s_values)
    entries = []
    for s in s_values:
        ts = s * t_ref
        if ts > traj.times[-1] + 1e-12:
            raise ValueError(f"s={s} needs t={ts}, beyond the integrated range")
        P = traj.metric_at(ts) / s
        rep = ricci(traj.split, P)
        entries.append(BlowdownEntry(s=s, metric=P,
                                     ric_norm=tensor_norm(traj.split, P, rep.ric),
                                     scal=rep.scal))
    return BlowdownReport(t_ref=float(t_ref), entries=entries,
                          rscal_t=traj.monitors["scal"] * traj.times, times=traj.times)
