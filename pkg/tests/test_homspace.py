import numpy as np
import pytest

from ricciflow.catalog import catalog, random_adapted_metric, su2
from ricciflow.curvature import InvariantMetric
from ricciflow.homspace import (StabilityError, StabilityFailure, check_theta_adapted,
                                split_u, weight_split)
from ricciflow.liealg import SemidirectData


def test_split_e1(e1_split):
    s = e1_split
    assert list(s.h_idx) == []
    assert list(s.l_idx) == [0, 1, 2]
    assert list(s.z_idx) == [3]
    assert list(s.V_idx) == [4, 5, 6]
    assert list(s.lss_idx) == [0, 1, 2]
    assert s.b0 == pytest.approx(2.0, abs=1e-12)
    assert s.k_skew_residual < 1e-12
    np.testing.assert_allclose(s.basis, np.eye(7), atol=1e-14)
    (w,) = s.weights
    np.testing.assert_allclose(w.alpha, [0, 0, 0, 1], atol=1e-12)


def test_split_e4(e4_split):
    s = e4_split
    # alpha = 0, so the central direction stays in k and z_hat is empty
    assert list(s.l_idx) == [0]
    assert list(s.z_idx) == []
    assert list(s.lss_idx) == []
    assert s.b0 == 0.0
    (w,) = s.weights
    np.testing.assert_allclose(w.alpha, [0.0], atol=1e-12)


def test_split_theta_zero_has_no_zhat():
    d = SemidirectData(su2(), 2, np.zeros((3, 2, 2)))
    s = split_u(d, ())
    assert list(s.z_idx) == []
    assert len(s.l_idx) == 3
    (w,) = s.weights
    np.testing.assert_allclose(w.alpha, np.zeros(3), atol=1e-12)


def test_split_e5_two_weights(e5_split):
    s = e5_split
    assert [w.d for w in s.weights] == [3, 3]
    alphas = sorted(tuple(np.round(w.alpha, 9)) for w in s.weights)
    assert alphas == [(0, 0, 0, 1), (0, 0, 0, 2)]
    assert s.b0 == pytest.approx(2.0, abs=1e-12)


def test_split_with_isotropy_in_su2():
    d = SemidirectData(su2(), 0, np.zeros((3, 0, 0)))
    s = split_u(d, h_basis=[np.array([0.0, 0.0, 1.0])])
    assert len(s.h_idx) == 1
    assert len(s.l_idx) == 2
    assert len(s.lss_idx) == 2
    assert s.b0 == pytest.approx(2.0, abs=1e-12)
    # metric must commute with ad(h): diag(1, 2) on l does not
    with pytest.raises(ValueError, match="equivariant"):
        InvariantMetric(s, np.diag([1.0, 2.0]))
    InvariantMetric(s, 2.5 * np.eye(2))


def test_split_rejects_non_subalgebra_h():
    e1 = catalog("E1_su2xR_R3")
    with pytest.raises(ValueError, match="subalgebra"):
        split_u(e1.semidirect, h_basis=[np.array([1.0, 0, 0, 0]), np.array([0, 1.0, 0, 0])])


def test_split_unstable_raises(e1_split):
    e3 = catalog("E3_heisenberg")
    with pytest.raises(StabilityError):
        split_u(e3.semidirect, ())


def test_weight_split_e1_rotation_residuals():
    d = catalog("E1_su2xR_R3", lam=3.0).semidirect
    wd = weight_split(d)
    (w,) = wd.weights
    np.testing.assert_allclose(w.alpha, [0, 0, 0, 3.0], atol=1e-12)
    # skew parts on su(2) are the rotation generators themselves
    for k in range(3):
        np.testing.assert_allclose(w.J[k], d.theta[k], atol=1e-12)
    np.testing.assert_allclose(w.J[3], np.zeros((3, 3)), atol=1e-12)


def test_weight_split_skew_operator_gives_zero_weight():
    d = catalog("E4_preflat_E2").semidirect
    wd = weight_split(d)
    (w,) = wd.weights
    np.testing.assert_allclose(w.alpha, [0.0], atol=1e-12)
    np.testing.assert_allclose(w.J[0], d.theta[0], atol=1e-12)


def test_weight_split_non_semisimple_fails():
    from ricciflow.liealg import LieAlgebra

    d = SemidirectData(LieAlgebra(np.zeros((1, 1, 1))), 2,
                       np.array([[[1.0, 1.0], [0.0, 1.0]]]))
    res = weight_split(d)
    assert isinstance(res, StabilityFailure)
    assert res.residual > 1e-3


def test_weight_split_blocks_orthonormal_and_complete(e5_split):
    d = catalog("E5_two_weights").semidirect
    wd = weight_split(d)
    assert sum(w.d for w in wd.weights) == d.dimV
    B = np.hstack([w.basis for w in wd.weights])
    np.testing.assert_allclose(B.T @ B, np.eye(d.dimV), atol=1e-12)
    # each block invariant under every theta_k
    for w in wd.weights:
        proj = w.basis @ w.basis.T
        for th in d.theta:
            leak = (np.eye(d.dimV) - proj) @ th @ w.basis
            assert np.max(np.abs(leak)) < 1e-10


def test_weight_spectrum_invariant_under_orthogonal_conjugation():
    d = catalog("E5_two_weights").semidirect
    rng = np.random.default_rng(5)
    A = rng.standard_normal((6, 6))
    O, R = np.linalg.qr(A)
    O = O * np.sign(np.diag(R))
    theta = np.array([O.T @ t @ O for t in d.theta])
    wd1 = weight_split(d)
    wd2 = weight_split(SemidirectData(d.u, 6, theta))
    a1 = sorted([tuple(np.round(w.alpha, 8))] * w.d for w in wd1.weights)
    a2 = sorted([tuple(np.round(w.alpha, 8))] * w.d for w in wd2.weights)
    assert a1 == a2


def test_weight_split_respects_metric():
    # theta normal w.r.t. Q but not w.r.t. the identity
    d0 = catalog("E4_preflat_E2").semidirect
    S = np.array([[2.0, 0.0], [1.0, 1.0]])
    theta = np.array([np.linalg.inv(S) @ d0.theta[0] @ S])
    d = SemidirectData(d0.u, 2, theta)
    assert isinstance(weight_split(d), StabilityFailure)
    Q = S.T @ S
    wd = weight_split(d, metricV=Q)
    assert not isinstance(wd, StabilityFailure)
    (w,) = wd.weights
    np.testing.assert_allclose(w.alpha, [0.0], atol=1e-10)


def test_check_theta_adapted(e1_split):
    s = e1_split
    assert check_theta_adapted(s, np.eye(7)) == 0.0
    P = np.eye(7)
    P[0, 4] = P[4, 0] = 0.25
    assert check_theta_adapted(s, P) == pytest.approx(0.25)


def test_check_theta_adapted_cross_weights(e5_split):
    P = np.eye(10)
    P[4, 7] = P[7, 4] = 0.125   # couples V^alpha1 to V^alpha2
    assert check_theta_adapted(e5_split, P) == pytest.approx(0.125)


def test_random_adapted_metric_is_adapted(e1_split, e5_split):
    rng = np.random.default_rng(11)
    for s in (e1_split, e5_split):
        for _ in range(5):
            P = random_adapted_metric(s, rng)
            assert check_theta_adapted(s, P) == 0.0
            assert np.min(np.linalg.eigvalsh(P)) > 0
            cond = np.linalg.cond(P)
            assert cond < 101.0  # kappa^2 with kappa = 10


def test_split_with_scaled_background():
    # scaling the background rescales b0: unit vectors shrink by sqrt(c)
    d = catalog("E1_su2xR_R3").semidirect
    c = 4.0
    Q0 = np.diag([c, c, c, 1.0, 2.0, 2.0, 2.0])
    s = split_u(d, (), background=Q0)
    assert s.b0 == pytest.approx(2.0 / c, abs=1e-12)
    # adapted basis is background-orthonormal: su2 columns scaled by 1/2
    np.testing.assert_allclose(s.basis.T @ Q0 @ s.basis, np.eye(7), atol=1e-12)
    # the rescaled structure constants still satisfy Jacobi and weights survive
    (w,) = s.weights
    np.testing.assert_allclose(w.alpha, [0, 0, 0, 1.0], atol=1e-12)


def test_split_warns_when_background_not_adk_invariant():
    # diag(1, 2, 3) on su(2) is not ad-invariant: flagged, not rejected
    d = SemidirectData(su2(), 0, np.zeros((3, 0, 0)))
    Q0 = np.diag([1.0, 2.0, 3.0])
    with pytest.warns(UserWarning, match="ad\\(k\\)-invariant"):
        s = split_u(d, (), background=Q0)
    assert s.k_skew_residual > 0.1


def test_split_rejects_background_coupling_u_and_V():
    d = catalog("E1_su2xR_R3").semidirect
    Q0 = np.eye(7)
    Q0[0, 4] = Q0[4, 0] = 0.1
    with pytest.raises(ValueError, match="couple"):
        split_u(d, (), background=Q0)


def test_base_split_matches_u_block(e1_split):
    base = e1_split.base_split()
    assert base.dim_m == 4
    assert list(base.V_idx) == []
    np.testing.assert_array_equal(base.algebra.c, e1_split.algebra.c[:4, :4, :4])
