"""Finite-dimensional real Lie algebras stored as structure-constant tensors.

A LieAlgebra is the rank-3 tensor c with [e_i, e_j] = sum_k c[i, j, k] e_k.
Everything downstream (curvature, flows, stability) consumes this tensor;
no symbolic machinery is involved.
"""

from dataclasses import dataclass, field

import numpy as np

# Jacobi / homomorphism tolerance, relative to the squared scale of the
# structure constants (inputs are exact rationals, so residuals sit at
# rounding level).
TOL_JACOBI = 1e-10

# Singular values below CUTOFF * sigma_max count as zero in rank decisions.
SVD_CUTOFF = 1e-8


def _as_tensor(c):
    c = np.asarray(c, dtype=float)
    if c.ndim != 3 or len(set(c.shape)) != 1:
        raise ValueError(f"structure tensor must be n x n x n, got {c.shape}")
    return c


@dataclass
class LieAlgebra:
    """Real Lie algebra given by structure constants in a fixed basis."""

    c: np.ndarray
    labels: list = None

    def __post_init__(self):
        self.c = _as_tensor(self.c)
        n = self.c.shape[0]
        if self.labels is None:
            self.labels = [f"e{i + 1}" for i in range(n)]
        if len(self.labels) != n:
            raise ValueError("labels length does not match dimension")
        anti = np.max(np.abs(self.c + np.swapaxes(self.c, 0, 1))) if n else 0.0
        scale = max(np.max(np.abs(self.c)) if n else 0.0, 1.0)
        if anti > TOL_JACOBI * scale:
            raise ValueError(f"structure constants not antisymmetric: residual {anti:.3e}")
        res = jacobi_residual(self)
        if res > TOL_JACOBI:
            raise ValueError(f"Jacobi identity violated: residual {res:.3e}")
        self.c.flags.writeable = False

    @property
    def dim(self):
        return self.c.shape[0]

    def bracket(self, x, y):
        return bracket(self, x, y)

    def ad(self, x):
        """Matrix of ad(x): y -> [x, y]."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected vector of length {self.dim}, got {x.shape}")
        return np.einsum("i,ijk->kj", x, self.c)


def bracket(a: LieAlgebra, x, y):
    """Evaluate [x, y] through the structure tensor."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (a.dim,) or y.shape != (a.dim,):
        raise ValueError(f"bracket arguments must have length {a.dim}")
    return np.einsum("i,j,ijk->k", x, y, a.c)


def jacobi_residual(a: LieAlgebra) -> float:
    """Max Jacobi defect over basis triples, relative to the input scale.

    The residual is quadratic in c, so it is measured on unit-normalized
    structure constants (divide by max|c|^2).
    """
    c = a.c
    if a.dim == 0:
        return 0.0
    t1 = np.einsum("ijm,mkl->ijkl", c, c)
    t2 = np.einsum("jkm,mil->ijkl", c, c)
    t3 = np.einsum("kim,mjl->ijkl", c, c)
    raw = np.max(np.abs(t1 + t2 + t3)) if c.size else 0.0
    scale = np.max(np.abs(c))
    return float(raw / scale**2) if scale > 0 else float(raw)


def killing_form(a: LieAlgebra):
    """B[i, j] = trace(ad e_i o ad e_j)."""
    return np.einsum("iqp,jpq->ij", a.c, a.c)


def unimodularity_defect(a: LieAlgebra):
    """Vector of traces tr(ad e_i); zero iff the algebra is unimodular."""
    return np.einsum("ijj->i", a.c)


def is_unimodular(a: LieAlgebra, tol=TOL_JACOBI) -> bool:
    scale = max(np.max(np.abs(a.c)) if a.dim else 0.0, 1.0)
    return bool(np.max(np.abs(unimodularity_defect(a)), initial=0.0) <= tol * scale)


def derivations(a: LieAlgebra):
    """Basis of Der(a): all D with D[x,y] = [Dx,y] + [x,Dy].

    Solves the linear system on basis pairs by a rank-revealing SVD with
    cutoff SVD_CUTOFF * sigma_max.
    """
    n = a.dim
    if n == 0:
        return []
    c = a.c
    rows = []
    for i in range(n):
        for j in range(i + 1, n):
            # constraint, for each output coordinate l:
            #   sum_m D[l,m] c[i,j,m] - D[m,i] c[m,j,l] - D[m,j] c[i,m,l] = 0
            block = np.zeros((n, n, n))
            for l in range(n):
                block[l, l, :] += c[i, j, :]
                block[l, :, i] -= c[:, j, l]
                block[l, :, j] -= c[i, :, l]
            rows.append(block.reshape(n, n * n))
    A = np.vstack(rows)
    _, s, vt = np.linalg.svd(A)
    cutoff = SVD_CUTOFF * (s[0] if s.size else 1.0)
    null = vt[np.sum(s > cutoff):] if s.size else vt
    return [v.reshape(n, n) for v in null]


def derivation_residual(a: LieAlgebra, D) -> float:
    """Max defect of the derivation identity for D on basis pairs."""
    D = np.asarray(D, dtype=float)
    lhs = np.einsum("ijm,lm->ijl", a.c, D)
    rhs = np.einsum("mi,mjl->ijl", D, a.c) + np.einsum("mj,iml->ijl", D, a.c)
    return float(np.max(np.abs(lhs - rhs), initial=0.0))


def is_nilpotent(a: LieAlgebra, tol=1e-12) -> bool:
    """Check that the lower central series terminates."""
    n = a.dim
    span = np.eye(n)
    for _ in range(n + 1):
        if span.shape[1] == 0:
            return True
        new = np.einsum("ijk,jb->ibk", a.c, span).reshape(-1, n).T
        new_span = _column_span(new, tol)
        if new_span.shape[1] >= span.shape[1]:
            # the series is decreasing; stabilizing at nonzero dim means not nilpotent
            return False
        span = new_span
    return span.shape[1] == 0


def _column_span(M, tol=1e-12):
    """Orthonormal basis (columns) of the column span of M."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0 or np.max(np.abs(M)) <= tol:
        return np.zeros((M.shape[0], 0))
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    rank = int(np.sum(s > max(tol, SVD_CUTOFF * s[0])))
    return u[:, :rank]


def abelian(n: int, labels=None) -> LieAlgebra:
    return LieAlgebra(np.zeros((n, n, n)), labels)


@dataclass
class SemidirectData:
    """Compact u acting on an abelian V through theta: u -> gl(V).

    theta[k] is the matrix of theta(e_k) on V. The homomorphism identity
    theta([e_i,e_j]) = [theta_i, theta_j] is enforced at construction.
    """

    u: LieAlgebra
    dimV: int
    theta: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.dimV < 0:
            raise ValueError("dimV must be nonnegative")
        if self.theta is None:
            self.theta = np.zeros((self.u.dim, self.dimV, self.dimV))
        self.theta = np.asarray(self.theta, dtype=float)
        expected = (self.u.dim, self.dimV, self.dimV)
        if self.theta.shape != expected:
            raise ValueError(f"theta must have shape {expected}, got {self.theta.shape}")
        res = self.homomorphism_residual()
        scale = max(np.max(np.abs(self.theta), initial=0.0) ** 2, 1.0)
        if res > TOL_JACOBI * scale:
            raise ValueError(f"theta is not a homomorphism: residual {res:.3e}")
        self.theta.flags.writeable = False

    @property
    def dim(self):
        return self.u.dim + self.dimV

    def homomorphism_residual(self) -> float:
        th = self.theta
        lhs = np.einsum("ijm,mab->ijab", self.u.c, th)
        rhs = np.einsum("iac,jcb->ijab", th, th) - np.einsum("jac,icb->ijab", th, th)
        return float(np.max(np.abs(lhs - rhs), initial=0.0))


def semidirect(d: SemidirectData) -> LieAlgebra:
    """Assemble u |x_theta V with basis [u-basis, V-basis]."""
    nu, nv = d.u.dim, d.dimV
    n = nu + nv
    c = np.zeros((n, n, n))
    c[:nu, :nu, :nu] = d.u.c
    # [X, A] = theta(X) A for X in u, A in V
    for k in range(nu):
        c[k, nu:, nu:] = d.theta[k].T
        c[nu:, k, nu:] = -d.theta[k].T
    labels = list(d.u.labels) + [f"A{i + 1}" for i in range(nv)]
    return LieAlgebra(c, labels)


# ---------------------------------------------------------------------------
# structured-text serialization: zero bracket entries omitted, floats kept
# in exact (round-trip) decimal via repr
# ---------------------------------------------------------------------------

def algebra_to_dict(a: LieAlgebra) -> dict:
    brackets = []
    for i in range(a.dim):
        for j in range(i + 1, a.dim):
            coeffs = {str(k): float(a.c[i, j, k]) for k in range(a.dim) if a.c[i, j, k] != 0.0}
            if coeffs:
                brackets.append([i, j, coeffs])
    return {"dim": a.dim, "labels": list(a.labels), "brackets": brackets}


def algebra_from_dict(data: dict) -> LieAlgebra:
    n = int(data["dim"])
    c = np.zeros((n, n, n))
    for i, j, coeffs in data.get("brackets", []):
        for k, v in coeffs.items():
            c[i, j, int(k)] = v
            c[j, i, int(k)] = -v
    return LieAlgebra(c, list(data.get("labels") or []) or None)
