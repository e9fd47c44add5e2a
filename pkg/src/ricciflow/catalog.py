"""Catalog of example spaces and invariant-metric builders.

Exact structure constants only; every entry is small enough that all
downstream tolerances sit at rounding level.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .homspace import ReductiveSplit, split_u
from .liealg import LieAlgebra, SemidirectData, semidirect


def su2() -> LieAlgebra:
    """[e1,e2] = e3 cyclic; Killing form -2 Id in this basis."""
    c = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        c[i, j, k] = 1.0
        c[j, i, k] = -1.0
    return LieAlgebra(c, ["e1", "e2", "e3"])


def heisenberg() -> LieAlgebra:
    """h3: [X, Y] = Z."""
    c = np.zeros((3, 3, 3))
    c[0, 1, 2] = 1.0
    c[1, 0, 2] = -1.0
    return LieAlgebra(c, ["X", "Y", "Z"])


def rotation_generators():
    """so(3) acting on R^3, (L_i)_{jk} = -eps_{ijk}; [L1, L2] = L3 cyclic."""
    L = np.zeros((3, 3, 3))
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = 1.0
        eps[i, k, j] = -1.0
    for i in range(3):
        L[i] = -eps[i]
    return L


def su2_plus_R() -> LieAlgebra:
    """su(2) + central R, basis [e1, e2, e3, Z]."""
    c = np.zeros((4, 4, 4))
    c[:3, :3, :3] = su2().c
    return LieAlgebra(c, ["e1", "e2", "e3", "Z"])


@dataclass
class CatalogEntry:
    name: str
    semidirect: SemidirectData
    h_basis: tuple
    metrics: dict                 # suggested initial metrics, name -> spec
    description: str
    stable: bool = True
    params: dict = field(default_factory=dict)

    @property
    def algebra(self) -> LieAlgebra:
        return semidirect(self.semidirect)

    def split(self) -> ReductiveSplit:
        return split_u(self.semidirect, self.h_basis)


CATALOG_NAMES = ["E1_su2xR_R3", "E2_su2_biinv", "E3_heisenberg", "E4_preflat_E2",
                 "E5_two_weights"]


def catalog(name, **params) -> CatalogEntry:
    """Return exact data for one of the named example spaces."""
    if name == "E1_su2xR_R3":
        lam = float(params.pop("lam", params.pop("lambda", 1.0)))
        _no_extra(params)
        L = rotation_generators()
        theta = np.concatenate([L, lam * np.eye(3)[None]], axis=0)
        d = SemidirectData(su2_plus_R(), 3, theta)
        return CatalogEntry(
            name=name, semidirect=d, h_basis=(), params={"lambda": lam},
            metrics={"background": {"kind": "background"},
                     "pinched_V": {"kind": "blocks", "mu": "background", "V1": [1.0, 1.0, 4.0]}},
            description="(su(2)+R) acting on R^3: vector representation plus "
                        "a central scaling; the minimal Ricci-negative family member")
    if name == "E2_su2_biinv":
        _no_extra(params)
        d = SemidirectData(su2(), 0, np.zeros((3, 0, 0)))
        return CatalogEntry(
            name=name, semidirect=d, h_basis=(),
            metrics={"background": {"kind": "background"}},
            description="su(2) with bi-invariant metrics; closed-form extinction at T = 1")
    if name == "E3_heisenberg":
        _no_extra(params)
        d = SemidirectData(LieAlgebra(np.zeros((1, 1, 1)), ["X"]), 2,
                           np.array([[[0.0, 0.0], [1.0, 0.0]]]))
        return CatalogEntry(
            name=name, semidirect=d, h_basis=(), stable=False,
            metrics={"background": {"kind": "background"}},
            description="Heisenberg h3 presented as R acting nilpotently on R^2; "
                        "not stable, used by the deform and stability suites")
    if name == "E4_preflat_E2":
        _no_extra(params)
        d = SemidirectData(LieAlgebra(np.zeros((1, 1, 1)), ["Z"]), 2,
                           np.array([[[0.0, -1.0], [1.0, 0.0]]]))
        return CatalogEntry(
            name=name, semidirect=d, h_basis=(),
            metrics={"background": {"kind": "background"},
                     "pinched_V": {"kind": "blocks", "mu": "background", "V1": [1.0, 4.0]}},
            description="R acting on R^2 by rotations (universal cover of E(2)): "
                        "preflat, unimodular, immortal with flat blowdowns")
    if name == "E5_two_weights":
        lam1 = float(params.pop("lam1", params.pop("lambda1", 1.0)))
        lam2 = float(params.pop("lam2", params.pop("lambda2", 2.0)))
        _no_extra(params)
        if lam1 == lam2:
            raise ValueError("E5 needs two distinct weights (lambda1 != lambda2)")
        L = rotation_generators()
        theta = np.zeros((4, 6, 6))
        for i in range(3):
            theta[i, :3, :3] = L[i]
            theta[i, 3:, 3:] = L[i]
        theta[3, :3, :3] = lam1 * np.eye(3)
        theta[3, 3:, 3:] = lam2 * np.eye(3)
        d = SemidirectData(su2_plus_R(), 6, theta)
        return CatalogEntry(
            name=name, semidirect=d, h_basis=(), params={"lambda1": lam1, "lambda2": lam2},
            metrics={"background": {"kind": "background"}},
            description="(su(2)+R) acting on R^3+R^3 with two distinct central weights")
    raise KeyError(f"unknown catalog name {name!r}; available: {', '.join(CATALOG_NAMES)}")


def _no_extra(params):
    if params:
        raise ValueError(f"unknown catalog parameters: {sorted(params)}")


# ---------------------------------------------------------------------------
# metric builders
# ---------------------------------------------------------------------------

def metric_from_spec(split: ReductiveSplit, spec) -> np.ndarray:
    """Build an initial P on m from a config-style spec.

    Accepted forms: "background"; {"kind": "background"}; {"kind": "diag",
    "values": [...]} over all of m; {"kind": "dense", "values": row-major};
    {"kind": "blocks", "mu": ..., "V<i>": ...} with per-block "background",
    diagonal lists, or dense row-major lists.
    """
    dm = split.dim_m
    if spec == "background" or spec is None:
        return np.eye(dm)
    if isinstance(spec, dict):
        kind = spec.get("kind", "blocks")
        if kind == "background":
            return np.eye(dm)
        if kind == "diag":
            vals = np.asarray(spec["values"], dtype=float)
            if vals.shape != (dm,):
                raise ValueError(f"diag metric needs {dm} values")
            return np.diag(vals)
        if kind == "dense":
            P = np.asarray(spec["values"], dtype=float).reshape(dm, dm)
            return 0.5 * (P + P.T)
        if kind == "blocks":
            P = np.zeros((dm, dm))
            _fill_block(P, split.mu_pos, spec.get("mu", "background"))
            for a, vs in enumerate(split.V_block_pos):
                _fill_block(P, vs, spec.get(f"V{a + 1}", spec.get("V", "background")))
            return P
        raise ValueError(f"unknown metric kind {kind!r}")
    raise ValueError(f"cannot interpret metric spec {spec!r}")


def _fill_block(P, pos, spec):
    d = len(pos)
    if spec == "background" or spec is None:
        block = np.eye(d)
    else:
        arr = np.asarray(spec, dtype=float)
        block = np.diag(arr) if arr.ndim == 1 else 0.5 * (arr + arr.T)
        if block.shape != (d, d):
            raise ValueError(f"block spec has wrong size for a {d}-dim block")
    P[np.ix_(pos, pos)] = block


def random_adapted_metric(split: ReductiveSplit, rng, kappa=10.0) -> np.ndarray:
    """Seeded random theta-adapted P: per block Q^T diag(exp(u)) Q.

    u is uniform in [-log kappa, log kappa]; Q is orthogonal, drawn from the
    ad(h)-commutant when h is nontrivial so the result stays equivariant.
    """
    dm = split.dim_m
    P = np.zeros((dm, dm))
    for pos in [split.mu_pos] + list(split.V_block_pos):
        d = len(pos)
        if d == 0:
            continue
        u = rng.uniform(-np.log(kappa), np.log(kappa), size=d)
        if len(split.h_idx) == 0:
            Q = _random_orthogonal(rng, d)
            block = Q.T @ np.diag(np.exp(u)) @ Q
        else:
            block = _equivariant_spd(split, pos, rng, kappa)
        P[np.ix_(pos, pos)] = block
    return P


def random_metric(split: ReductiveSplit, rng, kappa=10.0) -> np.ndarray:
    """Seeded random invariant metric on all of m (not adapted)."""
    d = split.dim_m
    u = rng.uniform(-np.log(kappa), np.log(kappa), size=d)
    if len(split.h_idx) == 0:
        Q = _random_orthogonal(rng, d)
        return Q.T @ np.diag(np.exp(u)) @ Q
    return _equivariant_spd(split, np.arange(d), rng, kappa)


def _random_orthogonal(rng, d):
    A = rng.standard_normal((d, d))
    Q, R = np.linalg.qr(A)
    return Q * np.sign(np.diag(R))


def _equivariant_spd(split, pos, rng, kappa):
    """SPD block commuting with ad(h); sampled from the symmetric commutant."""
    d = len(pos)
    ads = [adx[np.ix_(pos, pos)] for adx in split.ad_h_on_m]
    rows = []
    for adx in ads:
        op = np.kron(np.eye(d), adx) - np.kron(adx.T, np.eye(d))
        rows.append(op)
    sym_basis = []
    for i in range(d):
        for j in range(i, d):
            E = np.zeros((d, d))
            E[i, j] = E[j, i] = 1.0
            sym_basis.append(E.reshape(-1))
    Sb = np.array(sym_basis).T
    A = np.vstack(rows) @ Sb if rows else np.zeros((1, Sb.shape[1]))
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > 1e-10 * (s[0] if s.size else 1.0)))
    null = vt[rank:]
    coeffs = rng.standard_normal(null.shape[0])
    S = (Sb @ (null.T @ coeffs)).reshape(d, d)
    top = np.max(np.abs(np.linalg.eigvalsh(S)))
    if top > 0:
        S *= np.log(kappa) / top * rng.uniform(0.3, 1.0)
    return expm(S)
