from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpmoduli.lie_backend import (
    ModelError,
    abelian,
    build_model,
    complex_borel,
    diagonal,
    full,
    gl,
    iwasawa_factorize,
    iwasawa_factorize_ba,
    manin_triple_sl2,
    product_model,
    sl,
    sl2c,
    sl2r,
    subalgebra_checks,
    trivial,
)


@pytest.mark.parametrize("kind", ["gl2", "sl2", "gl3", "sl2c-iwasawa", "abelian:3", "abelian2"])
def test_models_validate(kind):
    m = build_model(kind)
    m.validate()
    assert m.jacobi_residual() < 1e-12


def test_build_model_errors():
    with pytest.raises(ModelError):
        build_model("so3")
    with pytest.raises(ModelError):
        build_model("abelian:x")
    assert build_model("abelian:2").d == 2


def test_trace_form_is_inverse_of_s():
    m = gl(2)
    G = np.array([[np.trace(a @ b) for b in m.basis] for a in m.basis])
    assert np.allclose(G @ m.s, np.eye(m.d))


def test_phi_matches_matrix_oracle_sl2():
    # phi(G X, G Y, G Z) = 1/4 tr(X [Y, Z]) with G the trace-form Gram matrix
    m = sl(2)
    G = np.linalg.inv(m.s)
    rng = np.random.default_rng(5)
    for _ in range(20):
        x, y, z = (rng.normal(size=m.d) for _ in range(3))
        X, Y, Z = (m.matrix(c) for c in (x, y, z))
        oracle = 0.25 * np.trace(X @ (Y @ Z - Z @ Y))
        val = np.einsum("abc,a,b,c->", m.phi, G @ x, G @ y, G @ z)
        assert abs(val - oracle) < 1e-12


def test_phi_frozen_value_sl2():
    # H, E, F with tr(HH) = 2, tr(EF) = 1: phi on their duals is 1/4 tr(H [E, F]) = 1/2
    m = sl(2)
    G = np.linalg.inv(m.s)
    H = np.array([[1.0, 0], [0, -1]])
    E = np.array([[0.0, 1], [0, 0]])
    F = np.array([[0.0, 0], [1, 0]])
    h, e, f = (m.coords(M) for M in (H, E, F))
    assert np.einsum("abc,a,b,c->", m.phi, G @ h, G @ e, G @ f) == pytest.approx(0.5)


def test_phi_totally_antisymmetric():
    for m in (gl(2), sl2c()):
        p = m.phi
        assert np.allclose(p, -p.transpose(1, 0, 2))
        assert np.allclose(p, -p.transpose(0, 2, 1))


def test_abelian_phi_vanishes():
    assert np.allclose(abelian(3).phi, 0)


def test_Ad_is_a_representation():
    m = gl(2)
    rng = np.random.default_rng(2)
    g, h = m.random_group(rng), m.random_group(rng)
    assert np.allclose(m.Ad(g @ h), m.Ad(g) @ m.Ad(h))
    # s is Ad-invariant
    A = m.Ad(g)
    assert np.allclose(A @ m.s @ A.T, m.s)


def test_manin_triple_lagrangian():
    g, a, b = manin_triple_sl2()
    assert a.is_lagrangian and b.is_lagrangian
    M = np.hstack([a.basis, b.basis])
    assert np.linalg.matrix_rank(M) == g.d


def test_coisotropy_flags():
    g = sl2c()
    assert full(g).is_coisotropic and full(g).perp_basis.shape[1] == 0
    assert not trivial(g).is_coisotropic
    assert sl2r(g).is_coisotropic
    assert complex_borel(g).is_coisotropic


def test_diagonal_lagrangian_for_oriented_product():
    m = gl(2)
    P = product_model(m, m, -1)
    d = diagonal(P)
    assert d.is_lagrangian
    Q = product_model(m, m, 1)
    assert not diagonal(Q).is_coisotropic


def test_not_a_subalgebra():
    m = gl(2)
    E, F = m.coords(np.array([[0.0, 1], [0, 0]])), m.coords(np.array([[0.0, 0], [1, 0]]))
    with pytest.raises(ModelError, match="not a subalgebra"):
        subalgebra_checks(m, [E, F])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_iwasawa_factorizations(seed):
    g, a, b = manin_triple_sl2()
    rng = np.random.default_rng(seed)
    G = g.random_group(rng, scale=0.8)
    A, B = iwasawa_factorize(G)
    assert np.allclose(A @ B, G)
    B2, A2 = iwasawa_factorize_ba(G)
    assert np.allclose(B2 @ A2, G)
    for X in (A, A2):
        assert np.allclose(X.T @ X, np.eye(4), atol=1e-10)  # unitary in the real form
    for Y in (B, B2):
        lower = Y[1, 0] ** 2 + Y[1, 2] ** 2 + Y[3, 0] ** 2 + Y[3, 2] ** 2
        assert lower < 1e-20
