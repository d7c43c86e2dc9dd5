from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import random_mv
from puredirac.algebra import Multivector, exp_wedge, transpose, wedge
from puredirac.errors import UsageError
from puredirac.linear import (
    LagrangianSubspace,
    LinearDiracMorphism,
    backward_image,
    bivector_from_dual_bases,
    column_space,
    compose_morphisms,
    forward_image,
    gauge_map,
    gauge_spinor,
    gauge_transform,
    image_through_morphism,
    is_strong_dirac_morphism,
    lagrangian_from_span,
    normal_form,
    null_space,
    null_space_of_spinor,
    pairing_top,
    rank,
    random_lagrangian,
    reconstruct_splitting,
    rho,
    same_span,
    spinor_of_lagrangian,
    split_gram,
    splitting_bivector,
    splitting_data,
    two_form,
    wedge_matrix_of,
)

seeds = st.integers(0, 2**32 - 1)


def rand_antisym(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) * scale
    return a - a.T


def random_transverse(rng, e: LagrangianSubspace) -> LagrangianSubspace:
    while True:
        f = random_lagrangian(rng, e.n)
        if rank(np.hstack([e.basis, f.basis])) == 2 * e.n:
            return f


def random_strong_case(rng, n=None, k=None):
    n = int(rng.integers(1, 5)) if n is None else n
    k = int(rng.integers(1, n + 1)) if k is None else k
    while True:
        m = LinearDiracMorphism(rng.normal(size=(k, n)), rand_antisym(rng, n))
        e = random_lagrangian(rng, n)
        img = forward_image(m, e)
        if img.transverse:
            return m, e, img.lagrangian


# --- null spaces and spinors ------------------------------------------------


def test_null_space_examples(rng):
    one = Multivector.scalar(3)
    ns = null_space_of_spinor(one)
    assert ns.is_pure and ns.lagrangian().equals(LagrangianSubspace.tangent(3))
    om = rand_antisym(rng, 4)
    ns = null_space_of_spinor(exp_wedge(-two_form(om)))
    assert ns.is_pure and ns.lagrangian().equals(LagrangianSubspace.graph_of_form(om))
    bad = Multivector.from_terms(2, {(): 1.0, (0, 1): 1.0, (0,): 1.0})
    assert not null_space_of_spinor(bad).is_pure
    with pytest.raises(UsageError):
        null_space_of_spinor(Multivector.zero(2))


def test_impure_rank_by_brute_force():
    phi = Multivector.from_terms(2, {(): 1.0, (0, 1): 1.0, (0,): 1.0})
    act = []
    for k in range(4):
        w = np.zeros(4)
        w[k] = 1
        act.append(rho(w, phi).coeffs)
    assert 4 - np.linalg.matrix_rank(np.array(act).T) == null_space_of_spinor(phi).basis.shape[1] != 2


def test_spinor_of_lagrangian_examples(rng):
    assert spinor_of_lagrangian(LagrangianSubspace.tangent(3)).allclose(Multivector.scalar(3))
    assert spinor_of_lagrangian(LagrangianSubspace.cotangent(3)).allclose(Multivector.top(3))
    for _ in range(5):
        om = rand_antisym(rng, 4, 0.3)
        got = spinor_of_lagrangian(LagrangianSubspace.graph_of_form(om))
        expect = exp_wedge(-two_form(om))
        expect = expect / expect.coeffs[np.argmax(np.abs(expect.coeffs))]
        assert got.allclose(expect, atol=1e-9)


@given(seeds, st.integers(1, 4))
def test_spinor_round_trip(seed, n):
    rng = np.random.default_rng(seed)
    e = random_lagrangian(rng, n)
    phi = spinor_of_lagrangian(e)
    assert null_space_of_spinor(phi).lagrangian().equals(e)
    assert phi.parity() is not None


# --- pairing and transversality --------------------------------------------


def test_pairing_examples(rng):
    assert pairing_top(Multivector.scalar(3), Multivector.top(3)) == 1
    om = rand_antisym(rng, 2)
    phi = exp_wedge(-two_form(om))
    assert abs(pairing_top(phi, phi)) < 1e-12


def test_cartan_transversality_500_pairs(rng):
    mismatches = 0
    for _ in range(500):
        n = int(rng.integers(1, 5))
        e = random_lagrangian(rng, n)
        if rng.random() < 0.5:
            f = random_lagrangian(rng, n)
        else:
            # force a shared vector by gauging along a common subspace
            f = gauge_transform(e, pi=rand_antisym(rng, n)) if rng.random() < 0.5 else e
        phi, psi = spinor_of_lagrangian(e), spinor_of_lagrangian(f)
        transverse = rank(np.hstack([e.basis, f.basis])) == 2 * n
        nonzero = abs(pairing_top(phi, psi)) > 1e-10
        mismatches += transverse != nonzero
    assert mismatches == 0


def test_refined_pairing_identity(rng):
    for _ in range(30):
        n = int(rng.integers(1, 5))
        phi = spinor_of_lagrangian(random_lagrangian(rng, n))
        psi = random_mv(rng, n)
        w = rng.normal(size=2 * n)
        sign = -1 if phi.parity() == 1 else 1
        lhs = sign * (-wedge(transpose(rho(w, phi)), psi) + wedge(transpose(phi), rho(w, psi)))
        v = np.concatenate([w[:n], np.zeros(n)])
        rhs = rho(v, wedge(transpose(phi), psi))
        assert lhs.allclose(rhs, atol=1e-10)


# --- normal form ------------------------------------------------------------


def test_normal_form_examples():
    nf = normal_form(Multivector.scalar(3))
    assert nf.q_basis.shape[1] == 3 and np.allclose(nf.omega_q, 0) and nf.theta.allclose(Multivector.scalar(3))
    nf = normal_form(Multivector.blade(2, [0]))
    assert same_span(nf.q_basis, np.array([[0.0], [1.0]]))
    assert np.allclose(nf.omega_q, 0)
    assert nf.theta.allclose(Multivector.blade(2, [0]))


def test_normal_form_round_trip(rng):
    for _ in range(20):
        n = int(rng.integers(1, 6))
        k = int(rng.integers(0, n + 1))
        basis = rng.normal(size=(n, n))
        q = basis[:, :k]
        ann = np.linalg.inv(basis).T[:, k:]
        om = rand_antisym(rng, n)
        theta = Multivector.scalar(n, rng.normal() + 2.0)
        for j in range(n - k):
            theta = wedge(theta, Multivector.vector(ann[:, j]))
        phi = wedge(exp_wedge(-two_form(om)), theta)
        nf = normal_form(phi)
        assert same_span(nf.q_basis, q) if k else nf.q_basis.shape[1] == 0
        # ω_Q agrees with ω on Q
        coords = np.linalg.lstsq(nf.q_basis, q, rcond=None)[0] if k else np.zeros((0, 0))
        assert np.allclose(coords.T @ nf.omega_q @ coords, q.T @ om @ q, atol=1e-9)
        assert nf.rebuild().allclose(phi, atol=1e-9 * max(1, np.abs(phi.coeffs).max()))


def test_normal_form_rejects_mixed_parity(rng):
    with pytest.raises(UsageError):
        normal_form(Multivector.from_terms(2, {(): 1.0, (0,): 1.0}))
    for _ in range(10):
        x = random_mv(rng, 3)
        with pytest.raises(UsageError):
            normal_form(x)


# --- gauge ------------------------------------------------------------------


def test_gauge_examples(rng):
    om = rand_antisym(rng, 3)
    assert gauge_transform(LagrangianSubspace.tangent(3), omega=om).equals(LagrangianSubspace.graph_of_form(om))
    pi = rand_antisym(rng, 3)
    assert gauge_transform(LagrangianSubspace.cotangent(3), pi=pi).equals(LagrangianSubspace.graph_of_bivector(pi))


def test_gauge_equivariance(rng):
    for _ in range(20):
        n = int(rng.integers(1, 5))
        e = random_lagrangian(rng, n)
        phi = spinor_of_lagrangian(e)
        kw = {"omega": rand_antisym(rng, n)} if rng.random() < 0.5 else {"pi": rand_antisym(rng, n)}
        moved = gauge_transform(phi, **kw)
        assert null_space_of_spinor(moved).lagrangian().equals(gauge_transform(e, **kw))


def test_clifford_exponential_implements_gauge(rng):
    """ρ(exp q(ε)) realizes A^ε for ε ∈ ∧²E, E isotropic."""
    for _ in range(10):
        n = int(rng.integers(1, 5))
        iso = random_lagrangian(rng, n).basis
        c = rand_antisym(rng, n)
        eps = iso @ c @ iso.T * 0.5
        amat = gauge_map(eps)
        # isotropic support: exp truncates after the linear term
        assert np.allclose(amat, np.eye(2 * n) + eps @ split_gram(n), atol=1e-10)
        target = random_lagrangian(rng, n)
        moved = gauge_spinor(eps, spinor_of_lagrangian(target))
        assert null_space_of_spinor(moved).lagrangian().equals(LagrangianSubspace(amat @ target.basis))
    # 2-form ε = −ω reproduces A^{−ω}
    om = rand_antisym(rng, 3)
    eps = np.zeros((6, 6))
    eps[3:, 3:] = -om
    assert np.allclose(gauge_map(eps)[3:, :3], om.T)


# --- morphisms -------------------------------------------------------------


def graph_composition_oracle(m1: LinearDiracMorphism, m2: LinearDiracMorphism) -> np.ndarray:
    """Pairs (w'', w) related through some w' (null space of the glued system)."""
    g1 = m1.graph_basis()  # [w''; w']
    g2 = m2.graph_basis()  # [w'; w]
    mid = 2 * m1.source_dim
    k1 = g1.shape[1]
    glue = np.hstack([g1[-mid:], -g2[:mid]])
    sol = null_space(glue)
    pairs = np.vstack([g1[:-mid] @ sol[:k1], g2[mid:] @ sol[k1:]])
    return column_space(pairs)


def test_composition(rng):
    m = LinearDiracMorphism(rng.normal(size=(2, 3)), rand_antisym(rng, 3))
    ident = LinearDiracMorphism(np.eye(2), np.zeros((2, 2)))
    c = compose_morphisms(ident, m)
    assert np.allclose(c.phi, m.phi) and np.allclose(c.omega, m.omega)
    o1, o2 = rand_antisym(rng, 3), rand_antisym(rng, 3)
    c = compose_morphisms(LinearDiracMorphism(np.eye(3), o1), LinearDiracMorphism(np.eye(3), o2))
    assert np.allclose(c.omega, o1 + o2)
    for _ in range(10):
        a, b, d = (int(x) for x in rng.integers(1, 5, size=3))
        m2 = LinearDiracMorphism(rng.normal(size=(b, a)), rand_antisym(rng, a))
        m1 = LinearDiracMorphism(rng.normal(size=(d, b)), rand_antisym(rng, b))
        assert same_span(compose_morphisms(m1, m2).graph_basis(), graph_composition_oracle(m1, m2))
    with pytest.raises(UsageError):
        compose_morphisms(m, m)


def test_forward_image_of_bivector_graph(rng):
    for _ in range(5):
        pi = rand_antisym(rng, 4)
        phi = rng.normal(size=(3, 4))
        img = forward_image(LinearDiracMorphism(phi, np.zeros((4, 4))), LagrangianSubspace.graph_of_bivector(pi))
        assert img.lagrangian.equals(LagrangianSubspace.graph_of_bivector(phi @ pi @ phi.T))


def test_backward_image_cotangent(rng):
    # injective Φ: the backward image of V'* is V*
    phi = rng.normal(size=(4, 2))
    img = backward_image(LinearDiracMorphism(phi, np.zeros((2, 2))), LagrangianSubspace.cotangent(4))
    assert img.lagrangian.equals(LagrangianSubspace.cotangent(2))
    # surjective Φ with kernel K: the backward image is K ⊕ ann(K)
    phi = rng.normal(size=(2, 4))
    img = backward_image(LinearDiracMorphism(phi, np.zeros((4, 4))), LagrangianSubspace.cotangent(2))
    k = null_space(phi)
    expect = np.hstack([np.vstack([k, np.zeros((4, 2))]), np.vstack([np.zeros((4, 2)), phi.T])])
    assert img.lagrangian.equals(LagrangianSubspace(expect))
    assert img.transverse


def test_images_are_lagrangian_and_related(rng):
    for _ in range(30):
        n, k = (int(x) for x in rng.integers(1, 5, size=2))
        m = LinearDiracMorphism(rng.normal(size=(k, n)) * (rng.random() < 0.9), rand_antisym(rng, n))
        e = random_lagrangian(rng, n)
        fwd = image_through_morphism(m, e, "forward").lagrangian
        f2 = random_lagrangian(rng, k)
        bwd = image_through_morphism(m, f2, "backward").lagrangian
        g, g2 = split_gram(n), split_gram(k)
        assert np.abs(fwd.basis.T @ g2 @ fwd.basis).max() < 1e-9
        assert np.abs(bwd.basis.T @ g @ bwd.basis).max() < 1e-9
        # every backward-image element is related to something in F'
        par = np.linalg.lstsq(np.vstack([np.eye(n), m.omega]), bwd.basis, rcond=None)
        assert par is not None
    with pytest.raises(UsageError):
        image_through_morphism(m, e, "sideways")


def test_pullback_spinor_defines_backward_image(rng):
    from puredirac.algebra import pullback

    count = 0
    while count < 20:
        m, e, e2 = random_strong_case(rng)
        f2 = random_lagrangian(rng, e2.n)
        psi2 = spinor_of_lagrangian(f2)
        psi = wedge(exp_wedge(two_form(m.omega)), pullback(m.phi, psi2))
        if psi.norm() < 1e-8:
            continue
        count += 1
        ns = null_space_of_spinor(psi)
        assert ns.is_pure
        assert ns.lagrangian().equals(backward_image(m, f2).lagrangian)


# --- strong morphisms -------------------------------------------------------


def test_strong_from_normal_form(rng):
    for _ in range(10):
        n = int(rng.integers(1, 5))
        e = random_lagrangian(rng, n)
        nf = normal_form(spinor_of_lagrangian(e))
        k = nf.q_basis.shape[1]
        m = LinearDiracMorphism(nf.q_basis, nf.omega_q)
        rep = is_strong_dirac_morphism(m, LagrangianSubspace.tangent(k), e)
        assert rep.is_strong


def test_zero_morphism_not_strong():
    m = LinearDiracMorphism(np.zeros((2, 3)), np.zeros((3, 3)))
    # the forward image of V under (0, 0) is V'*, and the whole of V lies in the kernel
    rep = is_strong_dirac_morphism(m, LagrangianSubspace.tangent(3), LagrangianSubspace.cotangent(2))
    assert rep.is_dirac and not rep.is_strong
    assert not is_strong_dirac_morphism(m, LagrangianSubspace.tangent(3), LagrangianSubspace.tangent(2)).is_dirac


def test_lift_range(rng):
    for _ in range(20):
        m, e, e2 = random_strong_case(rng)
        rep = is_strong_dirac_morphism(m, e, e2)
        assert rep.is_strong
        kern = m.kernel()
        g = split_gram(m.source_dim)
        if kern.shape[1]:
            perp = null_space(kern.T @ g)
            e_cap = null_space(np.hstack([e.basis, -perp]))[: e.n]
            expect = e.basis @ e_cap
        else:
            expect = e.basis
        assert same_span(rep.lift, expect)
        for j in range(e2.n):
            assert m.related(rep.lift[:, j], e2.basis[:, j])


# --- splittings -------------------------------------------------------------


def test_splitting_examples(rng):
    pi, _ = splitting_bivector(LagrangianSubspace.tangent(3), LagrangianSubspace.cotangent(3))
    assert np.allclose(pi, 0)
    om = rand_antisym(rng, 4)
    gr = LagrangianSubspace.graph_of_form(om)
    pi, _ = splitting_bivector(gr, LagrangianSubspace.cotangent(4))
    assert np.allclose(pi, 0, atol=1e-12)
    pi, _ = splitting_bivector(gr, LagrangianSubspace.tangent(4))
    assert np.allclose(pi, bivector_from_dual_bases(gr, LagrangianSubspace.tangent(4)))
    assert np.allclose(pi, -np.linalg.inv(om), atol=1e-9)
    with pytest.raises(UsageError):
        e = LagrangianSubspace.tangent(2)
        splitting_bivector(e, e)


def test_form_graph_bivector_sign(rng):
    """Eᵀ∧F for E = Gr_ω, F = V is {v ⊕ −ι_vω}, so π♯ inverts −ι(·)ω."""
    om = rand_antisym(rng, 4)
    pi, _ = splitting_bivector(LagrangianSubspace.graph_of_form(om), LagrangianSubspace.tangent(4))
    assert np.allclose(pi.T @ (-om.T), np.eye(4), atol=1e-9)


@given(seeds, st.integers(1, 4))
def test_splitting_properties(seed, n):
    rng = np.random.default_rng(seed)
    e = random_lagrangian(rng, n)
    f = random_transverse(rng, e)
    pi, split = splitting_bivector(e, f)
    p = split.projector
    assert np.allclose(p @ p, p, atol=1e-9 * max(1, np.abs(p).max() ** 2))
    assert np.allclose(p + split.transpose_projector(), np.eye(2 * n), atol=1e-9 * max(1, np.abs(p).max()))
    assert same_span(column_space(p), e.basis)
    assert np.allclose(pi, bivector_from_dual_bases(e, f), atol=1e-8 * max(1, np.abs(pi).max()))
    # graph of π = Eᵀ ∧ F, computed as a spinor
    phi, psi = spinor_of_lagrangian(e), spinor_of_lagrangian(f)
    prod = wedge(transpose(phi), psi)
    top = prod.grade(n)
    from puredirac.linear import exp_neg_contraction

    assert prod.allclose(exp_neg_contraction(pi, top), atol=1e-9 * max(1, np.abs(prod.coeffs).max()))
    gr = null_space_of_spinor(prod).lagrangian()
    assert gr.equals(LagrangianSubspace.graph_of_bivector(pi))


def test_gauge_shift_of_splitting(rng):
    for _ in range(10):
        n = int(rng.integers(2, 5))
        e = random_lagrangian(rng, n)
        f = random_transverse(rng, e)
        pi, _ = splitting_bivector(e, f)
        c = rand_antisym(rng, n, 0.5)
        eps = e.basis @ c @ e.basis.T * 0.5  # ε = ½ Σ c_ij e_i∧e_j
        f_eps = LagrangianSubspace(gauge_map(-eps) @ f.basis)
        pi_eps, _ = splitting_bivector(e, f_eps)
        ev = e.basis[:n]
        assert np.allclose(pi_eps, pi + 0.5 * ev @ c @ ev.T, atol=1e-8)


def test_bivectors_are_related_by_strong_morphisms(rng):
    for _ in range(20):
        m, e, e2 = random_strong_case(rng)
        f2 = random_transverse(rng, e2)
        f = backward_image(m, f2).lagrangian
        pi, _ = splitting_bivector(e, f)
        pi2, _ = splitting_bivector(e2, f2)
        assert np.allclose(m.phi @ pi @ m.phi.T, pi2, atol=1e-8 * max(1, np.abs(pi2).max()))


# --- reconstruction ---------------------------------------------------------


def test_reconstruct_trivial(rng):
    n = 3
    e2 = random_lagrangian(rng, n)
    f2 = random_transverse(rng, e2)
    m = LinearDiracMorphism(np.eye(n), np.zeros((n, n)))
    pi2, _ = splitting_bivector(e2, f2)
    anchor = np.hstack([np.eye(n), np.zeros((n, n))])
    assert reconstruct_splitting(m, e2, f2, pi2, anchor).equals(e2)


def test_reconstruct_round_trip(rng):
    for _ in range(20):
        m, e, e2 = random_strong_case(rng)
        f2 = random_transverse(rng, e2)
        pi, anchor, _ = splitting_data(m, e, e2, f2)
        rebuilt = reconstruct_splitting(m, e2, f2, pi, anchor)
        assert rebuilt.equals(e)
        assert is_strong_dirac_morphism(m, rebuilt, e2).is_strong
        # ran(E) = ran(𝔞) + ran(π♯)
        a_on = anchor @ e2.basis
        assert same_span(e.basis[: e.n], np.hstack([a_on, pi.T]))


def test_reconstruct_rejects_incompatible(rng):
    m, e, e2 = random_strong_case(rng, 3, 2)
    f2 = random_transverse(rng, e2)
    pi, anchor, _ = splitting_data(m, e, e2, f2)
    with pytest.raises(UsageError):
        reconstruct_splitting(m, e2, f2, pi + rand_antisym(rng, 3), anchor)


def test_serialization(rng):
    e = random_lagrangian(rng, 3)
    assert LagrangianSubspace.from_dict(e.to_dict()).equals(e)
    m = LinearDiracMorphism(rng.normal(size=(2, 3)), rand_antisym(rng, 3))
    m2 = LinearDiracMorphism.from_dict(m.to_dict())
    assert np.allclose(m2.phi, m.phi) and np.allclose(m2.omega, m.omega)


def test_invalid_inputs():
    with pytest.raises(UsageError):
        LagrangianSubspace(np.eye(4)[:, :2] + np.eye(4)[:, 2:])  # not isotropic
    with pytest.raises(UsageError):
        LinearDiracMorphism(np.eye(2), np.ones((2, 2)))
    with pytest.raises(UsageError):
        lagrangian_from_span(np.eye(4)[:, :1])
    assert wedge_matrix_of(np.eye(2)[0], np.eye(2)[1])[0, 1] == 1
