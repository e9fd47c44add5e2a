"""Curvature of invariant metrics from structure constants.

All formulas are evaluated against the fixed background-orthonormal adapted
basis of a ReductiveSplit, where the metric is g(x, y) = <P x, y> for an SPD
matrix P on the m block. Frame sums are contracted with P^{-1} instead of an
explicit orthonormal frame, which makes the results manifestly frame
independent; the test suite checks them against a literal frame-summation
oracle.
"""

from dataclasses import dataclass

import numpy as np

from .homspace import (
    TOL_BLOCK,
    TOL_EQUIV,
    ReductiveSplit,
    ad_h_equivariance_residual,
    check_theta_adapted,
)

TOL_IDENT = 1e-10   # internal identity cross-checks (trace vs direct formula)
TOL_SPECIAL = 1e-9  # specialized block formulas vs the general evaluation


@dataclass
class InvariantMetric:
    """Ad(H)-invariant inner product on m: g(x, y) = <P x, y>."""

    split: ReductiveSplit
    P: np.ndarray

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=float)
        dm = self.split.dim_m
        if self.P.shape != (dm, dm):
            raise ValueError(f"P must be {dm} x {dm}")
        if np.max(np.abs(self.P - self.P.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(self.P))):
            raise ValueError("P is not symmetric")
        if dm and np.min(np.linalg.eigvalsh(self.P)) <= 0.0:
            raise ValueError("P is not positive definite")
        equiv = ad_h_equivariance_residual(self.split, self.P)
        if equiv > TOL_EQUIV * max(1.0, np.max(np.abs(self.P))):
            raise ValueError(f"P is not ad(h)-equivariant (residual {equiv:.3e})")
        self.P.flags.writeable = False


def _P_of(g, split=None):
    P = np.asarray(getattr(g, "P", g), dtype=float)
    if split is not None and P.shape != (split.dim_m, split.dim_m):
        raise ValueError(f"metric must be {split.dim_m} x {split.dim_m} on m")
    return P


@dataclass
class CurvatureReport:
    ric: np.ndarray        # (0,2) Ricci tensor on m, background coordinates
    ric_star: np.ndarray   # unimodular Ricci, same convention
    H: np.ndarray          # mean curvature vector, m coordinates
    M: np.ndarray          # the M_g double-sum term as a (0,2) form
    B: np.ndarray          # Killing form restricted to m
    scal: float
    scal_star: float


def mean_curvature(split: ReductiveSplit, g):
    """Solve g(H, x) = tr(ad x) on m."""
    P = _P_of(g, split)
    H = np.linalg.solve(P, split.trace_vec)
    if len(split.V_pos) and check_theta_adapted(split, P) <= TOL_BLOCK:
        leak = np.max(np.abs(H[split.V_pos]), initial=0.0)
        scale = max(np.max(np.abs(H), initial=0.0), 1.0)
        if leak > 1e-9 * scale:
            raise AssertionError(f"mean curvature leaks into V on an adapted metric ({leak:.3e})")
    return H


def ricci(split: ReductiveSplit, g) -> CurvatureReport:
    """Direct evaluation of ric = -B/2 + M_g - sym(ad H_g) and friends."""
    P = _P_of(g, split)
    cm, Bm, t = split.cm, split.B_m, split.trace_vec
    Pinv = np.linalg.inv(P)
    G2 = np.einsum("pqk,ka->pqa", cm, P)
    M1 = -0.5 * np.einsum("apk,pq,bql,kl->ab", cm, Pinv, cm, P, optimize=True)
    M2 = 0.25 * np.einsum("pr,qs,pqa,rsb->ab", Pinv, Pinv, G2, G2, optimize=True)
    Mg = M1 + M2
    H = Pinv @ t
    A = np.einsum("e,eak->ak", H, cm) @ P
    hsym = 0.5 * (A + A.T)
    ric_star = -0.5 * Bm + Mg
    ric_mat = ric_star - hsym
    scal = float(np.trace(Pinv @ ric_mat))
    scal_star = float(np.trace(Pinv @ ric_star))
    return CurvatureReport(ric=ric_mat, ric_star=ric_star, H=H, M=Mg, B=Bm,
                           scal=scal, scal_star=scal_star)


def unimodular_ricci(split: ReductiveSplit, g):
    return ricci(split, g).ric_star


def tensor_norm(split: ReductiveSplit, g, T) -> float:
    """g-norm of a symmetric (0,2) tensor given in background coordinates."""
    P = _P_of(g, split)
    op = np.linalg.solve(P, np.asarray(T, dtype=float))
    return float(np.sqrt(max(np.trace(op @ op), 0.0)))


def scalar_curvatures(split: ReductiveSplit, g):
    """(Rscal, Rscal*) by the direct trace formulas, cross-checked."""
    P = _P_of(g, split)
    cm, Bm, t = split.cm, split.B_m, split.trace_vec
    Pinv = np.linalg.inv(P)
    trB = float(np.trace(Pinv @ Bm))
    brk2 = float(np.einsum("pqk,rsl,pr,qs,kl->", cm, cm, Pinv, Pinv, P, optimize=True))
    Hn2 = float(t @ Pinv @ t)
    rscal = -0.5 * trB - 0.25 * brk2 - Hn2
    rstar = rscal + Hn2
    rep = ricci(split, P)
    scale = max(abs(rscal), 1.0)
    if abs(rscal - rep.scal) > TOL_IDENT * scale or abs(rstar - rep.scal_star) > TOL_IDENT * scale:
        raise AssertionError("scalar curvature formulas disagree with the Ricci traces")
    return rscal, rstar


# ---------------------------------------------------------------------------
# specialized block formulas for theta-adapted standard metrics
# ---------------------------------------------------------------------------

def _require_adapted(split, P):
    res = check_theta_adapted(split, P)
    if res > TOL_BLOCK:
        raise ValueError(f"metric is not theta-adapted (residual {res:.3e} > {TOL_BLOCK})")


def _mu_frame(split, P):
    """g-orthonormal basis of m_u, columns in m_u-local coordinates."""
    mu = split.mu_pos
    vals, vecs = np.linalg.eigh(P[np.ix_(mu, mu)])
    return vecs / np.sqrt(vals)


@dataclass
class VBlockEntry:
    alpha: np.ndarray
    eigenvalues: np.ndarray     # ascending eigenvalues of P restricted to V^alpha
    frame: np.ndarray           # background-orthonormal eigenframe, block-local columns
    diag: np.ndarray            # specialized ric*(A_i, A_i) values (g-normalized frame)
    block: np.ndarray           # general ric* on the g-orthonormal frame A_i
    block_bar: np.ndarray       # general ric* on the background-orthonormal frame
    agreement: float            # |specialized - general| on the diagonal


def ricci_V_block(split: ReductiveSplit, g, wd=None, tol=TOL_SPECIAL):
    """Per-weight ric* blocks via the eigenvalue-ratio formula.

    Returns a list of VBlockEntry; raises if the metric is not adapted or if
    the specialized diagonal disagrees with the general evaluation.
    """
    P = _P_of(g, split)
    _require_adapted(split, P)
    rs = ricci(split, P).ric_star
    U = _mu_frame(split, P)
    mu = split.mu_pos
    out = []
    for w, vs in zip(split.weights, split.V_block_pos):
        Pv = P[np.ix_(vs, vs)]
        gvals, Abar = np.linalg.eigh(Pv)
        cmb = split.cm[np.ix_(mu, vs, vs)]
        beta = np.einsum("ak,bi,abc,cj->kij", U, Abar, cmb, Abar, optimize=True)
        ratio = gvals[:, None] / gvals[None, :]
        diag = 0.5 * np.einsum("kij,ij->i", beta**2, ratio - ratio.T)
        Rbar = Abar.T @ rs[np.ix_(vs, vs)] @ Abar
        block = Rbar / np.sqrt(np.outer(gvals, gvals))
        agreement = float(np.max(np.abs(diag - np.diag(block)), initial=0.0))
        scale = max(np.max(np.abs(block), initial=0.0), 1.0)
        if agreement > tol * scale:
            raise AssertionError(
                f"specialized V-block formula disagrees with the general one ({agreement:.3e})")
        out.append(VBlockEntry(alpha=w.alpha, eigenvalues=gvals, frame=Abar,
                               diag=diag, block=block, block_bar=Rbar, agreement=agreement))
    return out


@dataclass
class UBlockReport:
    ric_base: np.ndarray        # Ricci of (U/H, g|_{m_u}) on m_u
    correction: np.ndarray      # -(1/2)(action-norm + tr ad^2 |_V) as a (0,2) form
    ric_star_mu: np.ndarray     # general ric* restricted to m_u
    agreement: float            # |ric_base + correction - ric_star_mu|
    l_eigenvalues: np.ndarray   # ascending eigenvalues of P restricted to l
    l_frame: np.ndarray
    l_error_terms: np.ndarray   # error term of the l-direction formula per eigenvector
    l_agreement: float          # residual of the l-direction specialization
    top_bound: float            # Killing-form lower bound at the top l eigenvector
    top_value: float            # ric*(L_m, L_m) there
    top_margin: float           # top_value - top_bound (should be >= 0)


def ricci_U_block(split: ReductiveSplit, g, tol=TOL_SPECIAL) -> UBlockReport:
    """ric* on m_u via the base space plus the representation correction."""
    P = _P_of(g, split)
    _require_adapted(split, P)
    rep = ricci(split, P)
    mu, Vp = split.mu_pos, split.V_pos
    rs_mu = rep.ric_star[np.ix_(mu, mu)]

    base = split.base_split()
    Pmu = P[np.ix_(mu, mu)]
    ric_base = ricci(base, Pmu).ric

    if len(Vp):
        cv = split.cm[np.ix_(mu, Vp, Vp)]
        PV = P[np.ix_(Vp, Vp)]
        PVinv = np.linalg.inv(PV)
        term1 = np.einsum("vx,avw,bxy,wy->ab", PVinv, cv, cv, PV, optimize=True)
        term2 = np.einsum("avw,bwv->ab", cv, cv)
        corr = -0.5 * (term1 + term2)
    else:
        corr = np.zeros_like(rs_mu)
    scale = max(np.max(np.abs(rs_mu), initial=0.0), 1.0)
    agreement = float(np.max(np.abs(ric_base + corr - rs_mu), initial=0.0))
    if agreement > tol * scale:
        raise AssertionError(
            f"base + correction disagrees with general ric* on m_u ({agreement:.3e})")

    # l-direction specialization and the Killing-form lower bound
    lp = split.l_pos
    l_vals = np.zeros(0)
    l_frame = np.zeros((len(lp), 0))
    l_err = np.zeros(0)
    l_agree = 0.0
    top_bound = top_value = top_margin = 0.0
    if len(lp):
        l_vals, l_frame = np.linalg.eigh(P[np.ix_(lp, lp)])
        l_err = np.zeros(len(lp))
        for col in range(len(lp)):
            Lm = l_frame[:, col]
            err = _l_error_term(split, P, Lm)
            l_err[col] = err
            lhs = Lm @ rs_mu[np.ix_(lp, lp)] @ Lm
            rhs = Lm @ ric_base[np.ix_(lp, lp)] @ Lm - err
            l_agree = max(l_agree, abs(lhs - rhs))
        if l_agree > tol * scale:
            raise AssertionError(
                f"l-direction specialization disagrees with general ric* ({l_agree:.3e})")
        # bound at the top eigenvector of P|_l
        Lm = l_frame[:, -1]
        kl = np.arange(len(split.h_idx), len(split.h_idx) + len(split.l_idx))
        Bk_ll = split.B_k[np.ix_(kl, kl)]
        top_bound = float(-0.25 * (Lm @ Bk_ll @ Lm) - l_err[-1])
        top_value = float(Lm @ rs_mu[np.ix_(lp, lp)] @ Lm)
        top_margin = top_value - top_bound

    return UBlockReport(ric_base=ric_base, correction=corr, ric_star_mu=rs_mu,
                        agreement=agreement, l_eigenvalues=l_vals, l_frame=l_frame,
                        l_error_terms=l_err, l_agreement=float(l_agree),
                        top_bound=top_bound, top_value=top_value, top_margin=float(top_margin))


def _l_error_term(split: ReductiveSplit, P, L_local):
    """(1/4) sum <[L, Abar_i], Abar_j>^2 (g_i/g_j + g_j/g_i - 2) over weight blocks.

    L_local is given in l-local coordinates against the background basis.
    """
    total = 0.0
    for vs in split.V_block_pos:
        Pv = P[np.ix_(vs, vs)]
        gvals, Abar = np.linalg.eigh(Pv)
        cl = split.cm[np.ix_(split.l_pos, vs, vs)]
        beta = np.einsum("a,bi,abc,cj->ij", L_local, Abar, cl, Abar, optimize=True)
        ratio = gvals[:, None] / gvals[None, :]
        total += 0.25 * float(np.sum(beta**2 * (ratio + ratio.T - 2.0)))
    return total


def scalar_star_terms(split: ReductiveSplit, g):
    """Termwise unimodular scalar curvature over the V-submersion frames.

    Returns (base_scal, oneill, trace_theta_sq, theta_norm_sq) with
        Rscal* = base_scal - oneill/4 - trace_theta_sq/2 - theta_norm_sq/2,
    which is asserted against scalar_curvatures. The O'Neill channel is the
    only term the horizontal retraction touches.
    """
    P = _P_of(g, split)
    mu, Vp = split.mu_pos, split.V_pos
    if not len(Vp):
        base_scal = scalar_curvatures(split, P)[0]
        return base_scal, 0.0, 0.0, 0.0
    Puu = P[np.ix_(mu, mu)]
    Puv = P[np.ix_(mu, Vp)]
    Pvv = P[np.ix_(Vp, Vp)]
    phi = -np.linalg.solve(Pvv, Puv.T)
    gB = Puu - Puv @ np.linalg.inv(Pvv) @ Puv.T

    base = split.base_split()
    base_scal = scalar_curvatures(base, gB)[0]

    # frames: U_i gB-orthonormal on m_u, V_k gF-orthonormal on V,
    # X_i = U_i + phi U_i the horizontal lifts
    uvals, uvecs = np.linalg.eigh(gB)
    U = uvecs / np.sqrt(uvals)
    vvals, vvecs = np.linalg.eigh(Pvv)
    Vf = vvecs / np.sqrt(vvals)

    cm = split.cm
    nmu, nv = len(mu), len(Vp)
    X = np.zeros((split.dim_m, nmu))
    X[mu] = U
    X[Vp] = phi @ U
    Vfull = np.zeros((split.dim_m, nv))
    Vfull[Vp] = Vf

    brackets = np.einsum("ai,bj,abk->ijk", X, X, cm, optimize=True)        # [X_i, X_j]_m
    PV_bracket = np.einsum("ijk,kl->ijl", brackets, P)      # g([X_i, X_j]_m, .)
    oneill = float(np.sum(np.einsum("ijl,lk->ijk", PV_bracket, Vfull) ** 2))

    theta_U = np.einsum("am,avw->mvw", X[mu], cm[np.ix_(mu, Vp, Vp)])  # ad X_i |_V
    trace_theta_sq = float(np.einsum("mvw,mwv->", theta_U, theta_U))
    act = np.einsum("mvw,vj->mjw", theta_U, Vf)              # theta(X_i) V_j, V coords
    act_g = np.einsum("mjw,wx,xk->mjk", act, Pvv, Vf, optimize=True)        # g(theta(X_i) V_j, V_k)
    theta_norm_sq = float(np.sum(act_g**2))

    total = base_scal - 0.25 * oneill - 0.5 * trace_theta_sq - 0.5 * theta_norm_sq
    _, rstar = scalar_curvatures(split, P)
    if abs(total - rstar) > TOL_IDENT * max(1.0, abs(rstar)):
        raise AssertionError(
            f"submersion term sum {total!r} disagrees with Rscal* {rstar!r}")
    return base_scal, oneill, trace_theta_sq, theta_norm_sq
