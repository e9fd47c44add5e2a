"""Reductive decompositions g = h + l + z + V and weight-space splits.

The split constructor rewrites everything in a background-orthonormal basis
ordered [h | l | z | V^a1 | ... | V^ap] (l_ss directions leading inside l),
so the stored background is the identity and block projections are index
slices. All curvature code downstream relies on that normal form.
"""

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .liealg import LieAlgebra, SemidirectData, _column_span, killing_form, semidirect

TOL_WEIGHT = 1e-8   # eigenvalue grouping, after unit-spectral-radius normalization
TOL_SKEW = 1e-8     # skewness / block-invariance residual for stability
TOL_BLOCK = 1e-8    # theta-adaptedness residual
TOL_EQUIV = 1e-8    # ad(h)-equivariance residual for metrics
TOL_STRUCT = 1e-9   # span/containment checks on exact input data


class StabilityError(ValueError):
    """Raised when a construction requires a stable representation."""

    def __init__(self, failure):
        super().__init__(f"representation is not stable: {failure}")
        self.failure = failure


@dataclass
class StabilityFailure:
    """Report for a representation that is not normal w.r.t. the metric."""

    reason: str
    operator: int
    residual: float

    def __str__(self):
        return f"{self.reason} (operator {self.operator}, residual {self.residual:.3e})"


@dataclass
class Weight:
    alpha: np.ndarray    # functional on u, coordinates in the given u basis
    basis: np.ndarray    # (dimV, d) metricV-orthonormal columns spanning V^alpha
    J: np.ndarray        # (dim u, d, d) skew residuals theta_k|_block - alpha_k * Id

    @property
    def d(self):
        return self.basis.shape[1]


@dataclass
class WeightDecomposition:
    weights: list
    metricV: np.ndarray

    @property
    def dims(self):
        return [w.d for w in self.weights]


def _spd_cholesky(Q, what="metric"):
    Q = np.asarray(Q, dtype=float)
    if np.max(np.abs(Q - Q.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(Q))):
        raise ValueError(f"{what} is not symmetric")
    try:
        return np.linalg.cholesky(Q)
    except np.linalg.LinAlgError:
        raise ValueError(f"{what} is not positive definite") from None


def weight_split(d: SemidirectData, metricV=None):
    """Split V into weight blocks for the commuting symmetric parts of theta.

    Returns a WeightDecomposition, or a StabilityFailure value when theta is
    not normal with respect to metricV.
    """
    nv, nu = d.dimV, d.u.dim
    Q = np.eye(nv) if metricV is None else np.asarray(metricV, dtype=float)
    if Q.shape != (nv, nv):
        raise ValueError(f"metricV must be {nv} x {nv}")
    if nv == 0:
        return WeightDecomposition([], Q)
    L = _spd_cholesky(Q, "metricV")
    Lti = np.linalg.inv(L.T)
    # metric-orthonormal coordinates: operators conjugate to  L^T theta L^{-T}
    th = np.array([L.T @ t @ Lti for t in d.theta])
    sym = 0.5 * (th + np.swapaxes(th, 1, 2))
    # a symmetric part below rounding level of the full operator counts as zero
    full = np.array([max(np.max(np.abs(t)), 1e-300) for t in th]) if nu else np.zeros(0)
    scales = np.array([max(np.max(np.abs(np.linalg.eigvalsh(s))), 0.0) for s in sym]) if nu else np.zeros(0)
    significant = scales > TOL_WEIGHT * full

    for i in range(nu):
        for j in range(i + 1, nu):
            if not (significant[i] and significant[j]):
                continue
            comm = sym[i] @ sym[j] - sym[j] @ sym[i]
            res = np.max(np.abs(comm)) / (scales[i] * scales[j])
            if res > TOL_SKEW:
                return StabilityFailure("symmetric parts do not commute", j, float(res))

    # joint eigenspace refinement of the commuting symmetric family
    blocks = [np.eye(nv)]
    for k in range(nu):
        if not significant[k]:
            continue
        refined = []
        for W in blocks:
            vals, vecs = np.linalg.eigh(W.T @ sym[k] @ W)
            vals_n = vals / scales[k]
            start = 0
            for idx in range(1, len(vals) + 1):
                if idx == len(vals) or vals_n[idx] - vals_n[idx - 1] > TOL_WEIGHT:
                    refined.append(W @ vecs[:, start:idx])
                    start = idx
        blocks = refined

    weights = []
    for W in blocks:
        dw = W.shape[1]
        basis = _prefer_axes(Lti @ W, Q)
        Wq = L.T @ basis            # back to metric-orthonormal coordinates
        proj_out = np.eye(nv) - Wq @ Wq.T
        alpha = np.zeros(nu)
        J = np.zeros((nu, dw, dw))
        for k in range(nu):
            scale = max(scales[k], np.max(np.abs(th[k]), initial=0.0), 1.0)
            leak = np.max(np.abs(proj_out @ th[k] @ Wq), initial=0.0)
            if leak > TOL_SKEW * scale:
                return StabilityFailure("weight block not invariant", k, float(leak / scale))
            R = Wq.T @ th[k] @ Wq
            alpha[k] = np.trace(R) / dw
            Jk = R - alpha[k] * np.eye(dw)
            skew_res = np.max(np.abs(Jk + Jk.T), initial=0.0) / 2.0
            if skew_res > TOL_SKEW * scale:
                return StabilityFailure("residual not skew-symmetric", k, float(skew_res / scale))
            J[k] = Jk
        weights.append(Weight(alpha=alpha, basis=basis, J=J))

    weights.sort(key=lambda w: tuple(np.round(w.alpha, 9)))
    return WeightDecomposition(weights, Q)


@dataclass
class SplitWeight:
    """Weight block of a ReductiveSplit, in adapted global coordinates."""

    alpha: np.ndarray          # functional on u, original u-basis coordinates
    alpha_mu: np.ndarray       # alpha evaluated on the adapted m_u basis vectors
    idx: np.ndarray            # global indices of V^alpha in the adapted basis

    @property
    def d(self):
        return len(self.idx)


@dataclass
class ReductiveSplit:
    """g = h + l + z + V in a background-orthonormal adapted basis."""

    algebra: LieAlgebra
    h_idx: np.ndarray
    l_idx: np.ndarray
    z_idx: np.ndarray
    V_idx: np.ndarray
    weights: list = field(default_factory=list)   # list[SplitWeight]
    lss_idx: np.ndarray = None
    b0: float = 0.0
    basis: np.ndarray = None          # adapted basis columns in the input coordinates
    k_skew_residual: float = 0.0      # ad(k)-skewness defect of the background on m
    semidirect: SemidirectData = None

    def __post_init__(self):
        n = self.algebra.dim
        for name in ("h_idx", "l_idx", "z_idx", "V_idx"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=int))
        if self.lss_idx is None:
            self.lss_idx = np.zeros(0, dtype=int)
        self.lss_idx = np.asarray(self.lss_idx, dtype=int)
        if self.basis is None:
            self.basis = np.eye(n)
        all_idx = np.concatenate([self.h_idx, self.l_idx, self.z_idx, self.V_idx])
        if sorted(all_idx.tolist()) != list(range(n)):
            raise ValueError("index sets do not partition the basis")

    # -- index slices ------------------------------------------------------

    @property
    def background(self):
        """Background inner product in the adapted basis (always identity)."""
        return np.eye(self.algebra.dim)

    @cached_property
    def mu_idx(self):
        return np.concatenate([self.l_idx, self.z_idx])

    @cached_property
    def m_idx(self):
        return np.concatenate([self.l_idx, self.z_idx, self.V_idx])

    @cached_property
    def k_idx(self):
        return np.concatenate([self.h_idx, self.l_idx])

    @property
    def dim_m(self):
        return len(self.m_idx)

    @property
    def dim_mu(self):
        return len(self.mu_idx)

    # positions of blocks inside m (m-local coordinates)
    @cached_property
    def mu_pos(self):
        return np.arange(len(self.mu_idx))

    @cached_property
    def V_pos(self):
        return np.arange(len(self.mu_idx), self.dim_m)

    @cached_property
    def l_pos(self):
        return np.arange(len(self.l_idx))

    @cached_property
    def lss_pos(self):
        # l_ss directions lead inside the l block by construction
        return np.arange(len(self.lss_idx))

    @cached_property
    def V_block_pos(self):
        """Per-weight index arrays into m-local coordinates."""
        out = []
        offset = len(self.mu_idx)
        for w in self.weights:
            out.append(np.arange(offset, offset + w.d))
            offset += w.d
        return out

    # -- cached algebraic tensors used by the curvature formulas ------------

    @cached_property
    def cm(self):
        """m-projected structure constants on the m block."""
        ix = self.m_idx
        return self.algebra.c[np.ix_(ix, ix, ix)]

    @cached_property
    def B_m(self):
        return killing_form(self.algebra)[np.ix_(self.m_idx, self.m_idx)]

    @cached_property
    def trace_vec(self):
        """tr(ad x) for the m basis vectors (full-algebra traces)."""
        return np.einsum("ijj->i", self.algebra.c)[self.m_idx]

    @cached_property
    def B_k(self):
        """Killing form of the subalgebra k = h + l, in the (h, l) basis."""
        kix = self.k_idx
        ck = self.algebra.c[np.ix_(kix, kix, kix)]
        return np.einsum("iqp,jpq->ij", ck, ck)

    @cached_property
    def ad_h_on_m(self):
        """Matrices of ad(X)|_m for the h basis vectors."""
        c = self.algebra.c
        return [c[np.ix_([hi], self.m_idx, self.m_idx)][0].T for hi in self.h_idx]

    @cached_property
    def _base(self):
        nuu = len(self.h_idx) + len(self.l_idx) + len(self.z_idx)
        idx = np.arange(nuu)
        cu = self.algebra.c[np.ix_(idx, idx, idx)]
        labels = [self.algebra.labels[i] for i in idx]
        return ReductiveSplit(
            algebra=LieAlgebra(cu, labels),
            h_idx=self.h_idx,
            l_idx=self.l_idx,
            z_idx=self.z_idx,
            V_idx=np.zeros(0, dtype=int),
            weights=[],
            lss_idx=self.lss_idx,
            b0=self.b0,
        )

    def base_split(self):
        """The (u, h, m_u) sub-datum for the homogeneous base U/H."""
        return self._base


def plain_split(algebra: LieAlgebra, h_idx=()) -> ReductiveSplit:
    """Minimal reductive datum (whole complement treated as one block)."""
    h_idx = np.asarray(h_idx, dtype=int)
    rest = np.array([i for i in range(algebra.dim) if i not in set(h_idx.tolist())], dtype=int)
    return ReductiveSplit(algebra=algebra, h_idx=h_idx, l_idx=rest,
                          z_idx=np.zeros(0, dtype=int), V_idx=np.zeros(0, dtype=int))


def _orth_within(cols, inner, tol=TOL_STRUCT):
    """Inner-product-orthonormal basis of the span of the given columns."""
    cols = np.atleast_2d(np.asarray(cols, dtype=float))
    if cols.shape[1] == 0:
        return cols
    L = np.linalg.cholesky(inner)
    span = _column_span(L.T @ cols, tol)
    return _prefer_axes(np.linalg.solve(L.T, span), inner)


def _prefer_axes(cols, inner, tol=1e-9):
    """Swap an orthonormal basis for coordinate axes when the span allows it.

    Keeps catalog bases (and their labels) intact instead of SVD-rotated.
    """
    n, k = cols.shape
    if k == 0:
        return cols
    proj = cols @ (cols.T @ inner)
    axes = [i for i in range(n)
            if np.linalg.norm(proj @ np.eye(n)[:, i] - np.eye(n)[:, i]) <= tol]
    if len(axes) != k:
        return cols
    out = np.zeros((n, k))
    for j, i in enumerate(axes):
        out[i, j] = 1.0 / np.sqrt(inner[i, i])
    if np.max(np.abs(out.T @ inner @ out - np.eye(k))) > 1e-10:
        return cols
    return out


def _nullspace(A, tol=TOL_STRUCT):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] == 0 or np.max(np.abs(A), initial=0.0) == 0.0:
        return np.eye(A.shape[1])
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > max(tol, 1e-10 * s[0])))
    return vt[rank:].T


def _intersect_spans(Acols, Bcols, tol=TOL_STRUCT):
    """Orthonormal basis of span(A) ∩ span(B) (columns, standard metric)."""
    if Acols.shape[1] == 0 or Bcols.shape[1] == 0:
        return np.zeros((Acols.shape[0], 0))
    M = np.hstack([Acols, -Bcols])
    null = _nullspace(M, tol)
    inter = Acols @ null[: Acols.shape[1]]
    return _column_span(inter, tol)


def split_u(d: SemidirectData, h_basis=(), background=None, metricV=None) -> ReductiveSplit:
    """Build the adapted reductive decomposition for (u |x_theta V) / H.

    h_basis: vectors in u coordinates spanning the isotropy algebra.
    background: optional SPD matrix on g = u + V (identity by default);
    it must be ad(k)-invariant on the k-blocks, which is checked and flagged.
    """
    nu, nv = d.u.dim, d.dimV
    n = nu + nv
    Q0 = np.eye(n) if background is None else np.asarray(background, dtype=float)
    if Q0.shape != (n, n):
        raise ValueError(f"background must be {n} x {n}")
    _spd_cholesky(Q0, "background")
    Q0u = Q0[:nu, :nu]
    if np.max(np.abs(Q0[:nu, nu:]), initial=0.0) > 1e-12:
        raise ValueError("background must not couple u and V")

    if metricV is None:
        metricV = Q0[nu:, nu:]
    wd = weight_split(d, metricV)
    if isinstance(wd, StabilityFailure):
        raise StabilityError(wd)

    scale_u = max(np.max(np.abs(d.u.c), initial=0.0), 1.0)

    # isotropy algebra
    Hb = np.zeros((nu, 0))
    if len(h_basis) > 0:
        hv = [np.asarray(h, dtype=float) for h in h_basis]
        if any(h.shape != (nu,) for h in hv):
            raise ValueError(
                f"h_basis vectors must live in u (length {nu}); V components are not allowed")
        Hb = _orth_within(np.column_stack(hv), Q0u)
        for i in range(Hb.shape[1]):
            for j in range(Hb.shape[1]):
                br = d.u.bracket(Hb[:, i], Hb[:, j]) if nu else np.zeros(0)
                resid = br - Hb @ (Hb.T @ Q0u @ br)
                if np.max(np.abs(resid), initial=0.0) > TOL_STRUCT * scale_u:
                    raise ValueError("h_basis does not span a subalgebra of u")

    # u = k + z_hat with k = [u,u] + (central directions killed by all weights)
    uss = _column_span(d.u.c.reshape(nu * nu, nu).T) if nu else np.zeros((0, 0))
    ad_u = d.u.c.reshape(nu, nu * nu).T if nu else np.zeros((0, 0))
    z = _nullspace(ad_u)
    alphas = np.array([w.alpha for w in wd.weights]).reshape(-1, nu)
    z0 = z @ _nullspace(alphas @ z) if z.shape[1] else z
    z0 = _column_span(z0)
    k_span = _column_span(np.hstack([uss, z0]))
    if k_span.shape[1] != uss.shape[1] + z0.shape[1]:
        raise ValueError("u does not decompose as [u,u] + center (u must be compact)")
    zhat = z @ _nullspace(k_span.T @ Q0u @ z) if z.shape[1] else z
    zhat = _orth_within(zhat, Q0u)
    if k_span.shape[1] + zhat.shape[1] != nu:
        raise ValueError("k + z_hat does not exhaust u")

    # h inside k, l = orthogonal complement of h in k
    if Hb.shape[1]:
        leak = Hb - k_span @ np.linalg.lstsq(k_span, Hb, rcond=None)[0]
        if np.max(np.abs(leak), initial=0.0) > TOL_STRUCT:
            raise ValueError("h is not contained in k")
    kQ = _orth_within(k_span, Q0u)
    l_cols = kQ @ _nullspace(Hb.T @ Q0u @ kQ) if kQ.shape[1] else kQ
    l_cols = _orth_within(l_cols, Q0u)

    # l_ss = l ∩ [k,k], placed first inside the l block
    if kQ.shape[1]:
        kk_vecs = np.column_stack([
            d.u.bracket(kQ[:, i], kQ[:, j])
            for i in range(kQ.shape[1]) for j in range(kQ.shape[1])
        ]) if kQ.shape[1] else np.zeros((nu, 0))
        kss = _column_span(kk_vecs)
    else:
        kss = np.zeros((nu, 0))
    lss = _intersect_spans(l_cols, kss)
    lss = _orth_within(lss, Q0u)
    if lss.shape[1]:
        l_rest = l_cols @ _nullspace(lss.T @ Q0u @ l_cols)
        l_rest = _orth_within(l_rest, Q0u)
        l_cols = np.hstack([lss, l_rest])

    # adapted basis columns in the input g coordinates
    cols = [np.vstack([Hb, np.zeros((nv, Hb.shape[1]))]),
            np.vstack([l_cols, np.zeros((nv, l_cols.shape[1]))]),
            np.vstack([zhat, np.zeros((nv, zhat.shape[1]))])]
    for w in wd.weights:
        cols.append(np.vstack([np.zeros((nu, w.d)), w.basis]))
    S = np.hstack(cols)
    if S.shape != (n, n):
        raise ValueError("adapted basis assembly failed (dimension mismatch)")
    ortho_res = np.max(np.abs(S.T @ Q0 @ S - np.eye(n)))
    if ortho_res > 1e-9:
        raise ValueError(f"adapted basis is not background-orthonormal ({ortho_res:.3e})")

    g_full = semidirect(d)
    T = np.einsum("ia,jb,ijm->abm", S, S, g_full.c, optimize=True)
    c_adapt = np.einsum("abm,mn,nk->abk", T, Q0, S)
    labels = [f"h{i+1}" for i in range(Hb.shape[1])] \
        + [f"l{i+1}" for i in range(l_cols.shape[1])] \
        + [f"z{i+1}" for i in range(zhat.shape[1])] \
        + [f"A{i+1}" for i in range(nv)]
    algebra = LieAlgebra(c_adapt, labels)

    dh, dl, dz = Hb.shape[1], l_cols.shape[1], zhat.shape[1]
    h_idx = np.arange(dh)
    l_idx = np.arange(dh, dh + dl)
    z_idx = np.arange(dh + dl, dh + dl + dz)
    V_idx = np.arange(dh + dl + dz, n)
    lss_idx = np.arange(dh, dh + lss.shape[1])

    # b0: smallest eigenvalue of -B_k on l_ss (background-unit sphere)
    b0 = 0.0
    if lss.shape[1]:
        kix = np.concatenate([h_idx, l_idx])
        ck = c_adapt[np.ix_(kix, kix, kix)]
        Bk = np.einsum("iqp,jpq->ij", ck, ck)
        sel = np.arange(dh, dh + lss.shape[1])
        b0 = float(np.min(np.linalg.eigvalsh(-Bk[np.ix_(sel, sel)])))

    weights = []
    offset = dh + dl + dz
    for w in wd.weights:
        idx = np.arange(offset, offset + w.d)
        alpha_mu = np.concatenate([w.alpha @ l_cols, w.alpha @ zhat])
        weights.append(SplitWeight(alpha=w.alpha, alpha_mu=alpha_mu, idx=idx))
        offset += w.d

    split = ReductiveSplit(
        algebra=algebra, h_idx=h_idx, l_idx=l_idx, z_idx=z_idx, V_idx=V_idx,
        weights=weights, lss_idx=lss_idx, b0=b0, basis=S, semidirect=d,
    )

    # reductivity: [h, m] must have no h component
    m_idx = split.m_idx
    if dh:
        red = np.max(np.abs(c_adapt[np.ix_(h_idx, m_idx, h_idx)]), initial=0.0)
        if red > TOL_STRUCT * max(np.max(np.abs(c_adapt)), 1.0):
            raise ValueError(f"non-reductive complement: [h, m] leaks into h ({red:.3e})")

    # ad(k)-invariance of the background on m (includes alpha|_k = 0); flagged
    res = 0.0
    for ki in np.concatenate([h_idx, l_idx]):
        adk = c_adapt[np.ix_([ki], m_idx, m_idx)][0].T
        res = max(res, float(np.max(np.abs(adk + adk.T), initial=0.0) / 2.0))
    split.k_skew_residual = res
    if res > TOL_SKEW * max(np.max(np.abs(c_adapt)), 1.0):
        warnings.warn(
            f"background is not ad(k)-invariant on m (residual {res:.3e}); "
            "block curvature formulas for l-directions assume it", stacklevel=2)

    return split


def check_theta_adapted(split: ReductiveSplit, g, wd=None) -> float:
    """Adaptedness residual: largest metric coupling m_u<->V or V^a<->V^b."""
    P = np.asarray(getattr(g, "P", g), dtype=float)
    if P.shape != (split.dim_m, split.dim_m):
        raise ValueError(f"metric must be {split.dim_m} x {split.dim_m} on m")
    res = 0.0
    mu, blocks = split.mu_pos, split.V_block_pos
    if len(split.V_pos):
        res = max(res, float(np.max(np.abs(P[np.ix_(mu, split.V_pos)]), initial=0.0)))
    for a in range(len(blocks)):
        for b in range(a + 1, len(blocks)):
            res = max(res, float(np.max(np.abs(P[np.ix_(blocks[a], blocks[b])]), initial=0.0)))
    return res


def ad_h_equivariance_residual(split: ReductiveSplit, g) -> float:
    """Largest commutator entry [ad X|_m, P] over the h basis."""
    P = np.asarray(getattr(g, "P", g), dtype=float)
    res = 0.0
    for adx in split.ad_h_on_m:
        res = max(res, float(np.max(np.abs(adx @ P - P @ adx), initial=0.0)))
    return res
