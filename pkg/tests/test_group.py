from __future__ import annotations

import itertools

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from puredirac.errors import DomainError, UsageError
from puredirac.group import (
    GROUP_NAMES,
    action_vector,
    adjoint,
    cartan_dirac_fibers,
    ce_differential,
    conjugacy_form,
    conjugacy_form_matrix,
    conjugacy_kernel,
    courant_bracket_of_sections,
    eta_tensor,
    evaluate_form,
    exp_morphism_fiber,
    exp_relation_residuals,
    fiber_model,
    g0_rho,
    gauss_decompose,
    gauss_decompose_matrix,
    gauss_orbit_form,
    group_descriptor,
    j_sqrt,
    left_exterior_derivative,
    mult_complement_check,
    mult_is_strong,
    mult_morphism_fiber,
    mult_relation_residuals,
    orbit_form,
    orbit_form_middle,
    pi_G,
    pi_G_derivatives,
    schouten_check,
    sts_bivector,
    sts_bivector_expanded,
    sts_bivector_splitting,
    varsigma_coboundary,
)
from puredirac.lie import diagonal, double, gauss_subalgebra
from puredirac.linear import LagrangianSubspace, pair, splitting_bivector, split_gram
from puredirac.algebra import Multivector


def _points(name, rng, count, **kw):
    g = group_descriptor(name)
    return g, [g.random_point(rng, **kw) for _ in range(count)]


def _random_zeta(rng, g):
    z = rng.normal(size=2 * g.dim)
    if g.algebra.scalar_kind == "complex":
        z = z + 1j * rng.normal(size=2 * g.dim)
    return z


# ---------------------------------------------------------------------------
# descriptors and the adjoint action


@pytest.mark.parametrize("name", GROUP_NAMES)
def test_random_points_lie_in_group(name, rng):
    g, pts = _points(name, rng, 5)
    for p in pts:
        assert g.member_residual(p.matrix) < 1e-10


def test_membership_rejects_outsiders():
    g = group_descriptor("su2")
    with pytest.raises(DomainError):
        from puredirac.group import GroupPoint

        GroupPoint(g, 2 * np.eye(2, dtype=complex), None)


def test_unknown_group():
    with pytest.raises(UsageError):
        group_descriptor("e8")


def test_adjoint_identity():
    for name in GROUP_NAMES:
        g = group_descriptor(name)
        assert np.allclose(adjoint(g.identity()), np.eye(g.dim), atol=1e-14)


@pytest.mark.parametrize("name", ["su2", "sl2r", "sl3c", "kstar_semidirect(su2)"])
def test_adjoint_of_exponential_is_exp_of_ad(name, rng):
    g = group_descriptor(name)
    for _ in range(5):
        p = g.random_point(rng)
        oracle = scipy.linalg.expm(g.algebra.ad(p.log))
        assert np.abs(adjoint(p) - oracle).max() < 1e-9


@pytest.mark.parametrize("name", GROUP_NAMES)
def test_adjoint_preserves_form(name, rng):
    g, pts = _points(name, rng, 5)
    b = g.algebra.gram
    for p in pts:
        a = adjoint(p)
        assert np.abs(a.T @ b @ a - b).max() < 1e-10


def test_o2_reflection_component():
    g = group_descriptor("o2")
    p = g.point(np.array([0.3]), component=1)
    assert np.linalg.det(adjoint(p)) == pytest.approx(-1)
    assert p.parity == 1
    assert g.point(np.array([0.3])).parity == 0


def test_from_matrix_round_trip(rng):
    g = group_descriptor("o2")
    p = g.point(np.array([0.7]), component=1)
    q = g.from_matrix(p.matrix)
    assert q.component == 1
    assert np.allclose(q.matrix, p.matrix)


# ---------------------------------------------------------------------------
# sections and fibers


@pytest.mark.parametrize("name", GROUP_NAMES)
def test_s_is_isometry(name, rng):
    g, pts = _points(name, rng, 50)
    gram_d = double(g.algebra).gram
    for p in pts:
        sm = fiber_model(p).s_matrix()
        assert np.abs(sm.T @ split_gram(g.dim) @ sm - gram_d).max() < 1e-10


def test_fibers_at_identity():
    g = group_descriptor("su2")
    e_g, f_g = cartan_dirac_fibers(g.identity())
    assert e_g.equals(LagrangianSubspace.cotangent(3))
    assert f_g.equals(LagrangianSubspace.tangent(3))


@pytest.mark.parametrize("name", ["su2", "sl2c", "sl3c", "o2"])
def test_fibers_lagrangian_and_dual(name, rng):
    g, pts = _points(name, rng, 5)
    eye = np.eye(g.dim)
    for p in pts:
        fm = fiber_model(p)
        e_g, f_g = cartan_dirac_fibers(p)
        assert e_g.transverse_to(f_g)
        for i, j in itertools.product(range(g.dim), repeat=2):
            assert pair(fm.e(eye[i]), fm.f(eye[j])) == pytest.approx(g.algebra.gram[i, j], abs=1e-10)


def test_gauss_fiber_transverse_to_cartan_dirac(rng):
    g, pts = _points("sl2c", rng, 10)
    s = gauss_subalgebra(g.algebra)
    for p in pts:
        e_g, _, e_s = cartan_dirac_fibers(p, s)
        assert e_g.transverse_to(e_s)


def test_left_and_right_sections(rng):
    g = group_descriptor("sl3c")
    p = g.random_point(rng)
    fm = fiber_model(p)
    xi = rng.normal(size=g.dim)
    ai = np.linalg.inv(adjoint(p))
    assert np.allclose(fm.s_left(xi), np.concatenate([xi, g.algebra.gram @ xi / 2]))
    assert np.allclose(fm.s_right(xi)[: g.dim], -ai @ xi)
    assert np.allclose(fm.e(xi), fm.s_left(xi) + fm.s_right(xi))


# ---------------------------------------------------------------------------
# η and the left-frame differential


def _bracket_form_oracle(g, vs):
    """(1/12)B(θ, [θ, θ]) on three vectors by explicit antisymmetrization.

    [θ, θ](v, w) = [v, w] − [w, v] and (α∧β)(v1, v2, v3) = ½Σ_σ sgn(σ) α(v_σ1)β(v_σ2, v_σ3).
    """
    b = g.gram
    total = 0.0
    for perm in itertools.permutations(range(3)):
        sign = round(np.linalg.det(np.eye(3)[list(perm)]))
        v1, v2, v3 = (vs[k] for k in perm)
        total += 0.5 * sign * (v1 @ b @ (g.bracket(v2, v3) - g.bracket(v3, v2)))
    return total / 12


@pytest.mark.parametrize("name", ["su2", "sl2r", "sl3c", "kstar_semidirect(su2)"])
def test_eta_coefficient_from_antisymmetrization(name, rng):
    g = group_descriptor(name).algebra
    eta = eta_tensor(g)
    for _ in range(5):
        vs = [rng.normal(size=g.dim) for _ in range(3)]
        assert evaluate_form(eta, vs) == pytest.approx(_bracket_form_oracle(g, vs), abs=1e-12)
        assert evaluate_form(eta, vs) == pytest.approx(0.5 * vs[0] @ g.gram @ g.bracket(vs[1], vs[2]), abs=1e-12)


@pytest.mark.parametrize("name", ["su2", "sl3c", "kstar_semidirect(su2)"])
def test_ce_differential_squares_to_zero(name):
    g = group_descriptor(name).algebra
    d = ce_differential(g)
    assert abs(d @ d).max() < 1e-12


def test_ce_differential_maurer_cartan():
    g = group_descriptor("su2").algebra
    d = ce_differential(g)
    for k in range(3):
        theta = Multivector.vector(np.eye(3)[k])
        out = Multivector(3, d @ theta.coeffs)
        for i, j in itertools.combinations(range(3), 2):
            # dθ^k(e_i, e_j) = −θ^k([e_i, e_j])
            assert out.coeffs[(1 << i) | (1 << j)] == pytest.approx(-g.c[i, j, k])


@pytest.mark.parametrize("name", ["su2", "sl3c"])
def test_eta_is_closed(name):
    g = group_descriptor(name).algebra
    eta = eta_tensor(g)
    zero = [Multivector.zero(g.dim)] * g.dim
    assert np.abs(left_exterior_derivative(g, eta, zero).coeffs).max() < 1e-12


@pytest.mark.parametrize("name", ["su2", "sl2r", "sl2c", "sl3c", "kstar_semidirect(su2)"])
def test_courant_bracket_of_constant_sections(name, rng):
    g, pts = _points(name, rng, 20)
    n = g.dim
    for p in pts:
        z1, z2 = _random_zeta(rng, g), _random_zeta(rng, g)
        zb = np.concatenate([g.algebra.bracket(z1[:n], z2[:n]), g.algebra.bracket(z1[n:], z2[n:])])
        got = courant_bracket_of_sections(p, z1, z2)
        want = fiber_model(p).s(zb[:n], zb[n:])
        assert np.abs(got - want).max() < 1e-9 * max(1.0, np.abs(want).max())


# ---------------------------------------------------------------------------
# conjugacy classes and orbit forms


def test_conjugacy_form_at_identity():
    g = group_descriptor("su2")
    assert np.abs(conjugacy_form_matrix(g.identity())).max() == 0
    assert conjugacy_kernel(g.identity()).shape[1] == 0


def test_conjugacy_kernel_su2_diagonal():
    g = group_descriptor("su2")
    p = g.from_matrix(np.diag([1j, -1j]))
    eig = np.linalg.eigvals(adjoint(p))
    assert np.sum(np.isclose(eig, -1)) == 2
    k = conjugacy_kernel(p)
    assert k.shape[1] == 2
    w = conjugacy_form_matrix(p)
    # the kernel vectors are the tangent images of the −1 eigenspace of Ad_g
    xs = np.linalg.lstsq(np.eye(3) - np.linalg.inv(adjoint(p)), k, rcond=None)[0]
    assert np.abs(xs.T @ w).max() < 1e-12


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=15)
def test_conjugacy_form_antisymmetric_and_diagonal_orbit(seed):
    rng = np.random.default_rng(seed)
    g = group_descriptor("sl3c")
    p = g.random_point(rng)
    w = conjugacy_form_matrix(p)
    assert np.abs(w + w.T).max() < 1e-10 * max(1, np.abs(w).max())
    diag = diagonal(g.algebra)
    for i, j in itertools.combinations(range(g.dim), 2):
        # 𝔤_Δ orbits are conjugacy classes: the general orbit form restricts to ω_𝒞
        v = orbit_form(p, diag[:, i], diag[:, j])
        assert conjugacy_form(p, np.eye(g.dim)[i], np.eye(g.dim)[j]) == pytest.approx(v, abs=1e-9)


def test_orbit_form_at_identity():
    g = group_descriptor("sl2c")
    rng = np.random.default_rng(5)
    s = gauss_subalgebra(g.algebra)
    n = g.dim
    for _ in range(5):
        z1, z2 = s @ rng.normal(size=n), s @ rng.normal(size=n)
        want = 0.5 * (z1[n:] @ g.algebra.gram @ z2[:n] - z2[n:] @ g.algebra.gram @ z1[:n])
        assert orbit_form(g.identity(), z1, z2) == pytest.approx(want)


@pytest.mark.parametrize("name", ["sl2c", "sl3c"])
def test_orbit_form_expressions_agree_on_lagrangian(name, rng):
    g = group_descriptor(name)
    s = gauss_subalgebra(g.algebra)
    for _ in range(5):
        p = g.random_point(rng)
        z1, z2 = s @ rng.normal(size=g.dim), s @ rng.normal(size=g.dim)
        assert orbit_form(p, z1, z2) == pytest.approx(orbit_form_middle(p, z1, z2), abs=1e-9)


def test_orbit_form_expressions_differ_off_lagrangian(rng):
    g = group_descriptor("su2")
    p = g.random_point(rng)
    n = g.dim
    z1 = np.concatenate([rng.normal(size=n), rng.normal(size=n)])
    z2 = np.concatenate([rng.normal(size=n), rng.normal(size=n)])
    diff = orbit_form(p, z1, z2) - orbit_form_middle(p, z1, z2)
    gap = 0.5 * (z1[:n] @ z2[:n] - z1[n:] @ z2[n:])
    assert abs(diff) > 1e-6
    assert abs(abs(diff) - abs(gap)) < 1e-9


# ---------------------------------------------------------------------------
# π_G


def test_pi_g_vanishes_at_identity():
    for name in ("su2", "sl3c"):
        g = group_descriptor(name)
        assert np.abs(pi_G(g.identity())).max() < 1e-15


@pytest.mark.parametrize("name", ["su2", "sl2r", "sl3c", "kstar_semidirect(su2)"])
def test_pi_g_equals_splitting_bivector(name, rng):
    g, pts = _points(name, rng, 5)
    for p in pts:
        e_g, f_g = cartan_dirac_fibers(p)
        split, _ = splitting_bivector(e_g, f_g)
        assert np.abs(split - pi_G(p)).max() < 1e-10


def test_pi_g_derivatives_match_finite_differences(rng):
    g = group_descriptor("sl3c")
    p = g.random_point(rng, max_norm=1.0)
    h = 1e-6
    ders = pi_G_derivatives(p)
    for a in range(g.dim):
        step = scipy.linalg.expm(h * g.algebra.matrices[a])
        plus = _raw_point(g, p.matrix @ step)
        minus = _raw_point(g, p.matrix @ np.linalg.inv(step))
        fd = (pi_G(plus) - pi_G(minus)) / (2 * h)
        assert np.abs(fd - ders[a]).max() < 1e-7


def _raw_point(g, m):
    from puredirac.group import GroupPoint

    return GroupPoint(g, m, None)


@pytest.mark.parametrize("name", ["su2", "sl2c", "sl3c", "kstar_semidirect(su2)"])
def test_schouten_identity(name, rng):
    g, pts = _points(name, rng, 20)
    for p in pts:
        assert schouten_check(p) < 1e-9


# ---------------------------------------------------------------------------
# multiplication


@pytest.mark.parametrize("name", ["su2", "sl2c", "sl3c", "o2", "kstar_semidirect(su2)"])
def test_mult_relations(name, rng):
    g = group_descriptor(name)
    for _ in range(5):
        mf = mult_morphism_fiber(g.random_point(rng), g.random_point(rng))
        res = mult_relation_residuals(mf)
        assert max(res.values()) < 1e-10
        assert mult_is_strong(mf)


@pytest.mark.parametrize("name", ["su2", "sl3c", "o2"])
def test_mult_backward_image_of_complement(name, rng):
    g = group_descriptor(name)
    for _ in range(5):
        mf = mult_morphism_fiber(g.random_point(rng), g.random_point(rng))
        assert mult_complement_check(mf) < 1e-9


def test_mult_varsigma_formula(rng):
    g = group_descriptor("su2")
    a, b = g.random_point(rng), g.random_point(rng)
    om = mult_morphism_fiber(a, b).morphism.omega
    ad_b = adjoint(b)
    x1, z1, x2, z2 = (rng.normal(size=3) for _ in range(4))
    want = -0.5 * (x1 @ ad_b @ z2 - x2 @ ad_b @ z1)
    assert np.concatenate([x1, z1]) @ om @ np.concatenate([x2, z2]) == pytest.approx(want)


@pytest.mark.parametrize("name", ["su2", "sl3c", "o2"])
def test_varsigma_is_a_cocycle(name, rng):
    g = group_descriptor(name)
    for _ in range(5):
        a, b, c = (g.random_point(rng) for _ in range(3))
        u, w = rng.normal(size=3 * g.dim), rng.normal(size=3 * g.dim)
        assert abs(varsigma_coboundary(a, b, c, u, w)) < 1e-10


# ---------------------------------------------------------------------------
# exponential map


def test_exp_fiber_at_zero():
    g = group_descriptor("su2").algebra
    ef = exp_morphism_fiber(g, np.zeros(3))
    assert np.allclose(ef.d_exp, np.eye(3))
    assert np.abs(ef.varpi).max() == 0
    assert ef.J == pytest.approx(1)
    assert ef.J_sqrt == pytest.approx(1)


@pytest.mark.parametrize("name", ["su2", "sl2r", "sl3c"])
def test_exp_derivative_matches_numeric_jacobian(name, rng):
    grp = group_descriptor(name)
    g = grp.algebra
    nu = rng.normal(size=g.dim)
    nu *= 1.3 / np.linalg.norm(nu)
    ef = exp_morphism_fiber(g, nu)
    m = grp.exp(nu)
    h = 1e-6
    for xi in np.eye(g.dim):
        fd = (grp.exp(nu + h * xi) - grp.exp(nu - h * xi)) / (2 * h)
        left = grp.coords(np.linalg.solve(m, fd))
        assert np.abs(left - ef.d_exp @ xi).max() < 1e-6


def test_exp_varpi_antisymmetric_and_formula(rng):
    g = group_descriptor("sl3c").algebra
    nu = rng.normal(size=g.dim)
    ef = exp_morphism_fiber(g, nu)
    assert np.abs(ef.varpi + ef.varpi.T).max() < 1e-10
    xi, ze = rng.normal(size=g.dim), rng.normal(size=g.dim)
    assert xi @ ef.varpi @ ze == pytest.approx(ze @ g.gram @ ef.T @ xi)
    z = g.ad(nu)
    oracle = sum(np.linalg.matrix_power(z, 2 * k + 1) / _fact(2 * k + 3) for k in range(25))
    assert np.abs(ef.T - oracle).max() < 1e-10


def _fact(k):
    out = 1.0
    for i in range(2, k + 1):
        out *= i
    return out


@pytest.mark.parametrize("name", ["su2", "sl2r", "sl3c"])
def test_exp_relations(name, rng):
    grp = group_descriptor(name)
    g = grp.algebra
    for _ in range(20):
        nu = rng.normal(size=g.dim)
        nu *= rng.uniform(0.1, 3.0) / np.linalg.norm(nu)
        res = exp_relation_residuals(g, nu, grp.point(nu))
        assert res["erel"] < 1e-8 and res["frel"] < 1e-8


def test_j_sqrt_branch():
    g = group_descriptor("su2").algebra
    for r in (0.5, 3.0, 6.0):
        nu = np.array([r, 0, 0])
        # eigenvalues of ad_ν are 0, ±ir, so J^{1/2} = sin(r/2)/(r/2)
        assert j_sqrt(g, nu) == pytest.approx(np.sin(r / 2) / (r / 2), abs=1e-12)
    with pytest.raises(DomainError):
        j_sqrt(g, np.array([7.0, 0, 0]))
    assert not exp_morphism_fiber(g, np.array([7.0, 0, 0])).regular


def test_j_sqrt_squares_to_j(rng):
    g = group_descriptor("sl3c").algebra
    nu = rng.normal(size=g.dim) + 1j * rng.normal(size=g.dim)
    ef = exp_morphism_fiber(g, nu)
    assert ef.J_sqrt**2 == pytest.approx(ef.J)


# ---------------------------------------------------------------------------
# Gauss decomposition and the Semenov-Tian-Shansky bivector


def test_gauss_trivial_cases():
    g = group_descriptor("sl2c")
    f = gauss_decompose(g.identity())
    assert np.allclose(f.lower, np.eye(2)) and np.allclose(f.upper, np.eye(2))
    t = 1.7 - 0.3j
    f = gauss_decompose_matrix(np.diag([t, 1 / t]))
    assert np.allclose(f.diagonal, np.diag([t, 1 / t]))
    assert np.allclose(f.lower, np.eye(2)) and np.allclose(f.upper, np.eye(2))
    assert g0_rho(f) == pytest.approx(t)


@pytest.mark.parametrize("name", ["sl2c", "sl3c"])
def test_gauss_reconstruction(name, rng):
    g, pts = _points(name, rng, 10)
    for p in pts:
        f = gauss_decompose(p)
        assert np.abs(f.product() - p.matrix).max() < 1e-12 * max(1, np.abs(p.matrix).max())
        assert np.allclose(np.triu(f.lower, 1), 0) and np.allclose(np.diag(f.lower), 1)
        assert np.allclose(np.tril(f.upper, -1), 0) and np.allclose(np.diag(f.upper), 1)


def test_gauss_rejects_small_cell():
    with pytest.raises(DomainError):
        gauss_decompose_matrix(np.array([[0, 1], [-1, 0]]))


def test_gauss_requires_sl():
    g = group_descriptor("su2")
    with pytest.raises(UsageError):
        gauss_decompose(g.identity())


@pytest.mark.parametrize("name", ["sl2c", "sl3c"])
def test_gauss_orbit_form_matches_general_orbit_form(name, rng):
    g = group_descriptor(name)
    s = gauss_subalgebra(g.algebra)
    for _ in range(5):
        p = g.random_point(rng, max_norm=1.0)
        w = gauss_orbit_form(p)
        for i, j in itertools.combinations(range(s.shape[1]), 2):
            v1, v2 = action_vector(p, s[:, i]), action_vector(p, s[:, j])
            assert v1 @ w @ v2 == pytest.approx(orbit_form(p, s[:, i], s[:, j]), abs=1e-9)


def test_sts_vanishes_at_identity():
    for name in ("sl2c", "sl3c"):
        g = group_descriptor(name)
        for f in (sts_bivector, sts_bivector_expanded, sts_bivector_splitting):
            assert np.abs(f(g.identity())).max() < 1e-12


@pytest.mark.parametrize("name", ["sl2c", "sl3c"])
def test_sts_three_routes(name, rng):
    g = group_descriptor(name)
    for _ in range(5):
        p = g.random_point(rng, max_norm=1.0)
        a, b, c = sts_bivector(p), sts_bivector_expanded(p), sts_bivector_splitting(p)
        assert np.abs(a - b).max() < 1e-9 and np.abs(a - c).max() < 1e-9


def test_sts_torus_invariance(rng):
    g = group_descriptor("sl3c")
    h_idx = g.algebra.cartan.t_indices
    for _ in range(3):
        p = g.random_point(rng, max_norm=1.0)
        h = np.zeros(g.dim, dtype=complex)
        h[list(h_idx)] = rng.normal(size=len(h_idx)) + 1j * rng.normal(size=len(h_idx))
        t = g.point(h)
        moved = _raw_point(g, t.matrix @ p.matrix @ np.linalg.inv(t.matrix))
        ad_t = adjoint(t)
        assert np.abs(sts_bivector(moved) - ad_t @ sts_bivector(p) @ ad_t.T).max() < 1e-9
