"""Submersion splitting, the horizontal retraction, and nilsoliton fitting.

These are the deformation-path ingredients: peel a metric into (base, fiber,
horizontal graph), straighten the graph with r_t, and test nilpotent fibers
for the algebraic-soliton condition Ric = c Id + D.
"""

from dataclasses import dataclass

import numpy as np

from .curvature import InvariantMetric, _P_of, ricci
from .homspace import ReductiveSplit, plain_split
from .liealg import LieAlgebra, derivation_residual, derivations, is_nilpotent

TOL_FIT = 1e-10


@dataclass
class SubmersionSplit:
    """Metric as (base gB on m_u, fiber gF on V, horizontal graph phi)."""

    split: ReductiveSplit
    gB: np.ndarray
    gF: np.ndarray
    phi: np.ndarray   # (dim V, dim m_u): horizontal space is {X + phi X}


def submersion_split(split: ReductiveSplit, g) -> SubmersionSplit:
    P = _P_of(g, split)
    mu, Vp = split.mu_pos, split.V_pos
    Puu = P[np.ix_(mu, mu)]
    Puv = P[np.ix_(mu, Vp)]
    Pvv = P[np.ix_(Vp, Vp)]
    phi = -np.linalg.solve(Pvv, Puv.T) if len(Vp) else np.zeros((0, len(mu)))
    gB = Puu - Puv @ np.linalg.solve(Pvv, Puv.T) if len(Vp) else Puu
    ss = SubmersionSplit(split=split, gB=gB, gF=Pvv, phi=phi)
    round_trip = np.max(np.abs(assemble(ss) - P), initial=0.0)
    if round_trip > 1e-12 * max(1.0, np.max(np.abs(P))):
        raise AssertionError(f"submersion split does not reassemble ({round_trip:.3e})")
    # phi inherits ad(h)-equivariance from P; a violation means a bad input
    for adx in split.ad_h_on_m:
        ad_mu = adx[np.ix_(mu, mu)]
        ad_V = adx[np.ix_(Vp, Vp)]
        resid = np.max(np.abs(ad_V @ phi - phi @ ad_mu), initial=0.0)
        if resid > 1e-10 * max(1.0, np.max(np.abs(phi), initial=0.0)):
            raise AssertionError(f"horizontal graph is not ad(h)-equivariant ({resid:.3e})")
    return ss


def assemble(ss: SubmersionSplit) -> np.ndarray:
    """Inverse of submersion_split: P from (gB, gF, phi)."""
    split = ss.split
    mu, Vp = split.mu_pos, split.V_pos
    P = np.zeros((split.dim_m, split.dim_m))
    P[np.ix_(mu, mu)] = ss.gB + ss.phi.T @ ss.gF @ ss.phi
    if len(Vp):
        # x = (x + phi x) - phi x: the vertical part carries the coupling
        P[np.ix_(Vp, mu)] = -ss.gF @ ss.phi
        P[np.ix_(mu, Vp)] = (-ss.gF @ ss.phi).T
        P[np.ix_(Vp, Vp)] = ss.gF
    return P


def retract_horizontal(ss: SubmersionSplit, t: float) -> InvariantMetric:
    """r_t: scale the horizontal graph by (1 - t); block-diagonal at t = 1."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"retraction parameter must lie in [0, 1], got {t}")
    scaled = SubmersionSplit(split=ss.split, gB=ss.gB, gF=ss.gF, phi=(1.0 - t) * ss.phi)
    return InvariantMetric(ss.split, assemble(scaled))


@dataclass
class NilsolitonFit:
    c: float
    D: np.ndarray
    residual: float


def _symmetric_derivation_basis(n: LieAlgebra, L):
    """Derivations of n that are symmetric w.r.t. gF = L L^T, in tilde coords."""
    ders = derivations(n)
    if not ders:
        return []
    Lt, Lti = L.T, np.linalg.inv(L.T)
    tilde = [Lt @ D @ Lti for D in ders]
    A = np.array([(M - M.T).reshape(-1) for M in tilde]).T
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > 1e-10 * (s[0] if s.size else 1.0)))
    null = vt[rank:]
    return [sum(c * M for c, M in zip(row, tilde)) for row in null]


def nilsoliton_fit(n: LieAlgebra, gF) -> NilsolitonFit:
    """Least-squares Ric = c Id + D over gF-symmetric derivations of n."""
    if not is_nilpotent(n):
        raise ValueError("nilsoliton fitting needs a nilpotent algebra")
    gF = np.asarray(gF, dtype=float)
    datum = plain_split(n)
    rep = ricci(datum, gF)
    L = np.linalg.cholesky(gF)
    Lt, Lti = L.T, np.linalg.inv(L.T)
    Ric = Lt @ np.linalg.solve(gF, rep.ric) @ Lti    # symmetric in tilde coords

    basis = [np.eye(n.dim)] + _symmetric_derivation_basis(n, L)
    A = np.array([M.reshape(-1) for M in basis]).T
    coeffs, *_ = np.linalg.lstsq(A, Ric.reshape(-1), rcond=None)
    fit = sum(c * M for c, M in zip(coeffs, basis))
    residual = float(np.linalg.norm(Ric - fit))
    D_tilde = fit - coeffs[0] * np.eye(n.dim)
    D = Lti @ D_tilde @ Lt
    if derivation_residual(n, D) > TOL_FIT * max(1.0, np.max(np.abs(D))):
        raise AssertionError("fitted D is not a derivation")
    return NilsolitonFit(c=float(coeffs[0]), D=D, residual=residual)


def transpose_derivation_residual(d, n: LieAlgebra, gF) -> float:
    """Max Frobenius distance of the gF-transposes of theta to span Der(n)."""
    gF = np.asarray(gF, dtype=float)
    theta = np.asarray(d.theta, dtype=float)
    if theta.shape[1:] != (n.dim, n.dim):
        raise ValueError("theta operators and n have mismatched dimensions")
    scale = max(np.max(np.abs(theta), initial=0.0), 1.0)
    for k, t in enumerate(theta):
        if derivation_residual(n, t) > 1e-9 * scale:
            raise ValueError(f"theta[{k}] is not a derivation of n")
    ders = derivations(n)
    if ders:
        B = np.array([D.reshape(-1) for D in ders]).T
        Bq, _ = np.linalg.qr(B)
    else:
        Bq = np.zeros((n.dim * n.dim, 0))
    gFinv = np.linalg.inv(gF)
    worst = 0.0
    for t in theta:
        M = (gFinv @ t.T @ gF).reshape(-1)
        resid = M - Bq @ (Bq.T @ M)
        worst = max(worst, float(np.linalg.norm(resid)))
    return worst
