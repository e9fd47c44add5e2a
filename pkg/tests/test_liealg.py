import json

import numpy as np
import pytest

from ricciflow.catalog import catalog, heisenberg, su2, su2_plus_R
from ricciflow.liealg import (LieAlgebra, SemidirectData, abelian, algebra_from_dict,
                              algebra_to_dict, bracket, derivation_residual, derivations,
                              is_nilpotent, is_unimodular, jacobi_residual, killing_form,
                              semidirect, unimodularity_defect)


def test_bracket_su2_reads_structure_tensor():
    a = su2()
    np.testing.assert_allclose(bracket(a, [1, 0, 0], [0, 1, 0]), [0, 0, 1])
    np.testing.assert_allclose(bracket(a, [0, 1, 0], [0, 0, 1]), [1, 0, 0])


def test_bracket_abelian_is_zero():
    a = abelian(4)
    rng = np.random.default_rng(0)
    x, y = rng.standard_normal(4), rng.standard_normal(4)
    np.testing.assert_allclose(bracket(a, x, y), np.zeros(4))


def test_bracket_antisymmetry_random():
    a = su2()
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = rng.standard_normal(3)
        y = rng.standard_normal(3)
        np.testing.assert_allclose(bracket(a, x, x), np.zeros(3), atol=1e-14)
        np.testing.assert_allclose(bracket(a, x, y), -bracket(a, y, x), atol=1e-14)


def test_bracket_dimension_mismatch():
    with pytest.raises(ValueError):
        bracket(su2(), [1, 0], [0, 1, 0])


def test_killing_form_su2():
    np.testing.assert_allclose(killing_form(su2()), -2.0 * np.eye(3), atol=1e-14)


def test_killing_form_abelian_zero():
    np.testing.assert_allclose(killing_form(abelian(3)), np.zeros((3, 3)))


def test_killing_form_invariance_random_triples():
    g = catalog("E1_su2xR_R3").algebra
    B = killing_form(g)
    rng = np.random.default_rng(2)
    for _ in range(10):
        x, y, z = rng.standard_normal((3, g.dim))
        lhs = bracket(g, x, y) @ B @ z + y @ B @ bracket(g, x, z)
        assert abs(lhs) < 1e-10 * max(1.0, np.max(np.abs(B)))


def test_killing_form_kills_abelian_ideal():
    # any A in the abelian ideal V pairs to zero with everything
    g = catalog("E1_su2xR_R3").algebra
    B = killing_form(g)
    np.testing.assert_allclose(B[4:, :], np.zeros((3, 7)), atol=1e-14)


def test_semidirect_trivial_action_is_direct_sum():
    d = SemidirectData(su2(), 2, np.zeros((3, 2, 2)))
    g = semidirect(d)
    assert g.dim == 5
    np.testing.assert_allclose(g.c[:3, :3, :3], su2().c)
    np.testing.assert_allclose(g.c[3:, :, :], 0.0)
    np.testing.assert_allclose(g.c[:, 3:, 3:], 0.0)


def test_semidirect_e1_brackets():
    e1 = catalog("E1_su2xR_R3", lam=2.0)
    g = e1.algebra
    # [Z, A] = lambda A on V
    for a in range(3):
        v = np.zeros(7)
        v[4 + a] = 1.0
        z = np.zeros(7)
        z[3] = 1.0
        np.testing.assert_allclose(bracket(g, z, v), 2.0 * v, atol=1e-14)
    # [e1, A2] = A3 (rotation action)
    e_1 = np.eye(7)[:, 0]
    np.testing.assert_allclose(bracket(g, e_1, np.eye(7)[:, 5]), np.eye(7)[:, 6], atol=1e-14)
    # u block copied exactly
    np.testing.assert_array_equal(g.c[:4, :4, :4], su2_plus_R().c)


def test_semidirect_rejects_non_homomorphism():
    L = np.zeros((3, 3, 3))
    L[0] = [[0, 0, 0], [0, 0, -1], [0, 1, 0]]
    with pytest.raises(ValueError, match="homomorphism"):
        SemidirectData(su2(), 3, L)


def test_jacobi_rejects_broken_tensor():
    # [e1,e2] = e3 and [e1,e3] = e1 leave a cyclic defect of -e3
    c = np.zeros((3, 3, 3))
    c[0, 1, 2] = 1.0
    c[1, 0, 2] = -1.0
    c[0, 2, 0] = 1.0
    c[2, 0, 0] = -1.0
    with pytest.raises(ValueError, match="Jacobi"):
        LieAlgebra(c)


def test_jacobi_residual_zero_for_valid():
    assert jacobi_residual(su2()) < 1e-14
    assert jacobi_residual(catalog("E5_two_weights").algebra) < 1e-14


def test_derivations_dimensions():
    assert len(derivations(abelian(3))) == 9
    assert len(derivations(heisenberg())) == 6
    assert len(derivations(su2())) == 3


def test_derivations_satisfy_identity():
    for a in (heisenberg(), su2(), catalog("E4_preflat_E2").algebra):
        for D in derivations(a):
            assert derivation_residual(a, D) < 1e-10


def test_su2_derivations_are_inner():
    a = su2()
    ads = np.array([a.ad(np.eye(3)[:, i]).reshape(-1) for i in range(3)])
    Q, _ = np.linalg.qr(ads.T)
    for D in derivations(a):
        v = D.reshape(-1)
        resid = v - Q @ (Q.T @ v)
        assert np.linalg.norm(resid) < 1e-10


def test_unimodularity_defect():
    np.testing.assert_allclose(unimodularity_defect(su2()), np.zeros(3), atol=1e-14)
    np.testing.assert_allclose(unimodularity_defect(heisenberg()), np.zeros(3), atol=1e-14)
    g = catalog("E1_su2xR_R3", lam=1.5).algebra
    expected = np.zeros(7)
    expected[3] = 3 * 1.5
    np.testing.assert_allclose(unimodularity_defect(g), expected, atol=1e-14)
    assert is_unimodular(catalog("E4_preflat_E2").algebra)
    assert not is_unimodular(g)


def test_is_nilpotent():
    assert is_nilpotent(heisenberg())
    assert is_nilpotent(abelian(5))
    assert not is_nilpotent(su2())
    assert not is_nilpotent(catalog("E1_su2xR_R3").algebra)


def test_serialization_round_trip():
    for a in (su2(), heisenberg(), catalog("E1_su2xR_R3").algebra):
        text = json.dumps(algebra_to_dict(a))
        b = algebra_from_dict(json.loads(text))
        np.testing.assert_array_equal(a.c, b.c)
        assert a.labels == b.labels


def test_serialization_omits_zero_entries():
    data = algebra_to_dict(heisenberg())
    assert data["brackets"] == [[0, 1, {"2": 1.0}]]
