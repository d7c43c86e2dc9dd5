"""Verification suites: every identity evaluated pointwise on sampled data.

Each identity yields one report row holding the worst residual over its
sample points. Randomness comes from PCG64 streams derived from
``SeedSequence(seed, spawn_key=(suite_index, row_index))``, so a row's points
depend only on the seed, the suite and the row's position in the suite.
Shared models of the q-Hamiltonian suite use ``spawn_key=(suite_index, 1000)``.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np
import scipy.linalg

from .algebra import (
    Multivector,
    QuadraticSpace,
    clifford_exp,
    clifford_product,
    commutator,
    contract,
    exp_wedge,
    left_operator,
    pullback,
    star_operator,
    supertrace,
    transpose,
    wedge,
)
from .errors import UsageError
from .group import (
    GroupDescriptor,
    GroupPoint,
    adjoint,
    cartan_dirac_fibers,
    courant_bracket_of_sections,
    eta_tensor,
    exp_relation_residuals,
    fiber_model,
    gauss_decompose,
    group_descriptor,
    left_exterior_derivative,
    mult_complement_check,
    mult_is_strong,
    mult_morphism_fiber,
    mult_relation_residuals,
    pi_G,
    schouten_check,
    sts_bivector,
    sts_bivector_expanded,
    sts_bivector_splitting,
    varsigma_coboundary,
)
from .lie import (
    LieAlgebraData,
    b_contract,
    builtin_algebra,
    cartan_three_tensor,
    cdybe_residual,
    clifford_differential,
    clifford_differential_matrix,
    double,
    double_spinor_rep,
    gauss_spinor,
    gauss_spinor_from_r_matrix,
    gauss_subalgebra,
    tau_alg,
)
from .linear import (
    LagrangianSubspace,
    LinearDiracMorphism,
    backward_image,
    exp_neg_contraction,
    forward_image,
    gauge_transform,
    null_space_of_spinor,
    pair,
    pairing_top,
    random_lagrangian,
    rank,
    reconstruct_splitting,
    spinor_of_lagrangian,
    split_gram,
    splitting_bivector,
    splitting_data,
    subspace_distance,
    two_form,
)
from .qham import (
    QHamPointModel,
    check_axioms,
    conjugacy_class_space,
    equivariance_volume_residual,
    exponential_orbit,
    exponential_volume,
    fuse,
    kstar_embedding_check,
    liouville_volume,
    moment_residual,
    parity,
    product_volume,
    pulled_spinor,
    qpoisson_consistency,
)
from .spinors import (
    covering_residual,
    differential_residual,
    exp_pullback_check,
    gauss_diffeq_check,
    intertwining_residual,
    left_translation_residual,
    mu_of,
    mult_pullback_check,
    pairing_residual,
    phi_equation_residual,
    phi_G,
    psi_equation_residual,
    psi_explicit_aligned,
    psi_G,
    psi_hat_closed_form,
    psi_hat_G,
    right_translation_residual,
)

SCHEMA_VERSION = 1
SUITE_NAMES = ("algebra", "linear", "lie", "group", "spinor", "qham")
SHARED_STREAM = 1000

Sample = tuple[str, float]


@dataclass(frozen=True)
class RunConfig:
    group: str = "su2"
    algebra: str | None = None
    seed: int = 0
    samples: int = 20
    tol: Mapping[str, float] = field(default_factory=dict)
    fd_step: float = 1e-5


@dataclass
class Context:
    """Inputs of one identity check: the objects under test and a private stream."""

    group: GroupDescriptor
    algebra: LieAlgebraData
    rng: np.random.Generator
    samples: int
    fd_step: float
    shared: dict

    def count(self, heavy: bool = False) -> int:
        """Sample count; heavy checks on algebras of dimension > 4 use a quarter."""
        if heavy and self.group.dim > 4:
            return max(2, self.samples // 4)
        return self.samples


@dataclass(frozen=True)
class Identity:
    id: str
    citation: str
    tol: float
    check: Callable[[Context], Iterable[Sample]]
    applies: Callable[[Context], bool] = lambda ctx: True


@dataclass(frozen=True)
class Row:
    identity_id: str
    point: str
    residual: float
    tol: float
    citation: str

    @property
    def passed(self) -> bool:
        return math.isfinite(self.residual) and self.residual <= self.tol

    def to_dict(self) -> dict:
        return {
            "identity_id": self.identity_id,
            "point": self.point,
            "residual": self.residual,
            "tol": self.tol,
            "pass": self.passed,
            "citation": self.citation,
        }


# ---------------------------------------------------------------------------
# sampling helpers


def _maxabs(x) -> float:
    c = x.coeffs if isinstance(x, Multivector) else np.asarray(x)
    return float(np.abs(c).max(initial=0))


def _random_mv(rng: np.random.Generator, n: int, complex_: bool = False) -> Multivector:
    c = rng.normal(size=1 << n)
    if complex_:
        c = c + 1j * rng.normal(size=1 << n)
    return Multivector(n, c)


def _random_space(rng: np.random.Generator, n: int) -> QuadraticSpace:
    while True:
        a = rng.normal(size=(n, n))
        g = a + a.T
        if np.linalg.svd(g, compute_uv=False)[-1] > 0.2:
            return QuadraticSpace(g)


def _antisym(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(n, n)) * scale
    return a - a.T


def _transverse(rng: np.random.Generator, e: LagrangianSubspace) -> LagrangianSubspace:
    while True:
        f = random_lagrangian(rng, e.n)
        if e.transverse_to(f):
            return f


def _strong_case(rng: np.random.Generator):
    n = int(rng.integers(1, 5))
    k = int(rng.integers(1, n + 1))
    while True:
        m = LinearDiracMorphism(rng.normal(size=(k, n)), _antisym(rng, n))
        e = random_lagrangian(rng, n)
        img = forward_image(m, e)
        if img.transverse:
            return m, e, img.lagrangian


def _is_complex(ctx: Context) -> bool:
    return ctx.algebra.scalar_kind == "complex"


def _has_cartan(ctx: Context) -> bool:
    return ctx.algebra.cartan is not None


def _is_sl(ctx: Context) -> bool:
    return ctx.group.name in ("sl2c", "sl3c")


def _regular_nu(rng: np.random.Generator, g: LieAlgebraData, low: float, high: float) -> np.ndarray:
    nu = rng.normal(size=g.dim)
    return nu * (rng.uniform(low, high) / max(np.linalg.norm(nu), 1e-300))


def _points(ctx: Context, count: int, **kw) -> list[GroupPoint]:
    return [ctx.group.random_point(ctx.rng, **kw) for _ in range(count)]


# ---------------------------------------------------------------------------
# algebra


def _alg_spaces(ctx: Context) -> Iterable[tuple[str, QuadraticSpace, bool]]:
    """Alternate between the algebra's own space and random quadratic spaces."""
    for i in range(ctx.samples):
        if i % 2 == 0:
            yield f"B[{i}]", ctx.algebra.space, _is_complex(ctx)
        else:
            n = int(ctx.rng.integers(1, 5))
            yield f"random(n={n})[{i}]", _random_space(ctx.rng, n), False


def chk_clifford_relation(ctx: Context) -> Iterable[Sample]:
    for label, q, _ in _alg_spaces(ctx):
        v, w = ctx.rng.normal(size=(2, q.dim))
        a, b = Multivector.vector(v), Multivector.vector(w)
        lhs = clifford_product(q, a, b) + clifford_product(q, b, a)
        yield label, _maxabs(lhs - Multivector.scalar(q.dim, v @ q.gram @ w))


def chk_product_operator(ctx: Context) -> Iterable[Sample]:
    for label, q, cplx in _alg_spaces(ctx):
        a, b = _random_mv(ctx.rng, q.dim, cplx), _random_mv(ctx.rng, q.dim, cplx)
        direct = clifford_product(q, a, b)
        yield label, _maxabs(direct - left_operator(q, a)(b)) / max(1.0, _maxabs(direct))


def chk_associativity(ctx: Context) -> Iterable[Sample]:
    for label, q, cplx in _alg_spaces(ctx):
        a, b, c = (_random_mv(ctx.rng, q.dim, cplx) for _ in range(3))
        lhs = clifford_product(q, clifford_product(q, a, b), c)
        rhs = clifford_product(q, a, clifford_product(q, b, c))
        yield label, _maxabs(lhs - rhs) / max(1.0, _maxabs(lhs))


def chk_supertrace(ctx: Context) -> Iterable[Sample]:
    for label, q, cplx in _alg_spaces(ctx):
        a, b = _random_mv(ctx.rng, q.dim, cplx), _random_mv(ctx.rng, q.dim, cplx)
        c = commutator(q, a, b)
        yield label, abs(supertrace(c)) / max(1.0, _maxabs(c))


def chk_transpose(ctx: Context) -> Iterable[Sample]:
    for label, q, cplx in _alg_spaces(ctx):
        a, b = _random_mv(ctx.rng, q.dim, cplx), _random_mv(ctx.rng, q.dim, cplx)
        lhs = transpose(clifford_product(q, a, b))
        rhs = clifford_product(q, transpose(b), transpose(a))
        yield label, _maxabs(lhs - rhs) / max(1.0, _maxabs(lhs))


def chk_star(ctx: Context) -> Iterable[Sample]:
    n = ctx.algebra.dim
    for i in range(ctx.samples):
        mu = Multivector.top(n, ctx.rng.uniform(0.5, 2.0))
        phi = _random_mv(ctx.rng, n)
        a = ctx.rng.normal(size=n)
        r1 = star_operator(mu, wedge(Multivector.vector(a), phi)) - contract(a, star_operator(mu, phi))
        r2 = star_operator(mu, contract(a, phi)) - wedge(Multivector.vector(a), star_operator(mu, phi))
        yield f"sample[{i}]", max(_maxabs(r1), _maxabs(r2))


def chk_exp_conjugation(ctx: Context) -> Iterable[Sample]:
    q = ctx.algebra.space
    n = q.dim
    eye = np.eye(n)
    for i in range(ctx.count(heavy=True)):
        b = _random_mv(ctx.rng, n).grade(2) * 0.3
        g, ginv = clifford_exp(q, b), clifford_exp(q, -b)
        ad = np.column_stack([commutator(q, b, Multivector.vector(eye[j])).vector_part() for j in range(n)])
        amat = scipy.linalg.expm(ad)
        v = ctx.rng.normal(size=n)
        conj = clifford_product(q, clifford_product(q, g, Multivector.vector(v)), ginv)
        yield f"sample[{i}]", _maxabs(conj - Multivector.vector(amat @ v))


ALGEBRA_SUITE = (
    Identity("algebra.clifford-relation", "Clifford relation vv' + v'v = B(v, v')", 1e-10, chk_clifford_relation),
    Identity("algebra.product-vs-operator", "Clifford product against l(v) = ε(v) + ½ι(B♭v)", 1e-9, chk_product_operator),
    Identity("algebra.associativity", "associativity of the Clifford product", 1e-10, chk_associativity),
    Identity("algebra.supertrace-commutator", "supertrace vanishes on graded commutators", 1e-9, chk_supertrace),
    Identity("algebra.transpose", "transpose is an anti-automorphism", 1e-10, chk_transpose),
    Identity("algebra.star-module", "star operator intertwines wedge and contraction", 1e-10, chk_star),
    Identity("algebra.exp-conjugation", "Clifford exponential covers the orthogonal group", 1e-9, chk_exp_conjugation),
)


# ---------------------------------------------------------------------------
# linear Dirac geometry


def chk_transversality(ctx: Context) -> Iterable[Sample]:
    mismatches = 0
    pairs = 25 * ctx.samples
    for _ in range(pairs):
        n = int(ctx.rng.integers(1, 5))
        e = random_lagrangian(ctx.rng, n)
        if ctx.rng.random() < 0.5:
            f = random_lagrangian(ctx.rng, n)
        else:
            f = gauge_transform(e, pi=_antisym(ctx.rng, n)) if ctx.rng.random() < 0.5 else e
        transverse = rank(np.hstack([e.basis, f.basis])) == 2 * n
        nonzero = abs(pairing_top(spinor_of_lagrangian(e), spinor_of_lagrangian(f))) > 1e-10
        mismatches += transverse != nonzero
    yield f"{pairs} pairs", float(mismatches)


def chk_spinor_null_space(ctx: Context) -> Iterable[Sample]:
    for i in range(ctx.samples):
        e = random_lagrangian(ctx.rng, int(ctx.rng.integers(1, 5)))
        ns = null_space_of_spinor(spinor_of_lagrangian(e)).lagrangian()
        yield f"n={e.n}[{i}]", subspace_distance(ns.basis, e.basis)


def chk_pullback_backward(ctx: Context) -> Iterable[Sample]:
    i = 0
    while i < ctx.samples:
        m, _, e2 = _strong_case(ctx.rng)
        f2 = random_lagrangian(ctx.rng, e2.n)
        psi = wedge(exp_wedge(two_form(m.omega)), pullback(m.phi, spinor_of_lagrangian(f2)))
        if psi.norm() < 1e-8:
            continue
        want = backward_image(m, f2).lagrangian
        yield f"n={m.source_dim},k={m.target_dim}[{i}]", subspace_distance(
            null_space_of_spinor(psi).lagrangian().basis, want.basis
        )
        i += 1


def chk_splitting(ctx: Context) -> Iterable[Sample]:
    for i in range(ctx.samples):
        n = int(ctx.rng.integers(1, 5))
        e = random_lagrangian(ctx.rng, n)
        f = _transverse(ctx.rng, e)
        pi, split = splitting_bivector(e, f)
        p = split.projector
        prod = wedge(transpose(spinor_of_lagrangian(e)), spinor_of_lagrangian(f))
        graph = prod - exp_neg_contraction(pi, prod.grade(n))
        scale = max(1.0, _maxabs(prod), np.abs(p).max() ** 2)
        yield f"n={n}[{i}]", max(_maxabs(graph), np.abs(p @ p - p).max()) / scale


def chk_bivector_relation(ctx: Context) -> Iterable[Sample]:
    for i in range(ctx.samples):
        m, e, e2 = _strong_case(ctx.rng)
        f2 = _transverse(ctx.rng, e2)
        pi, _ = splitting_bivector(e, backward_image(m, f2).lagrangian)
        pi2, _ = splitting_bivector(e2, f2)
        yield f"n={m.source_dim},k={m.target_dim}[{i}]", np.abs(m.phi @ pi @ m.phi.T - pi2).max() / max(
            1.0, np.abs(pi2).max()
        )


def chk_reconstruction(ctx: Context) -> Iterable[Sample]:
    for i in range(ctx.samples):
        m, e, e2 = _strong_case(ctx.rng)
        f2 = _transverse(ctx.rng, e2)
        pi, anchor, _ = splitting_data(m, e, e2, f2)
        rebuilt = reconstruct_splitting(m, e2, f2, pi, anchor)
        span = np.hstack([anchor @ e2.basis, pi.T])
        rng_res = subspace_distance(span, e.basis[: e.n]) if rank(span) else 0.0
        yield f"n={m.source_dim},k={m.target_dim}[{i}]", max(subspace_distance(rebuilt.basis, e.basis), rng_res)


LINEAR_SUITE = (
    Identity("linear.cartan-transversality", "Cartan transversality: pairing ≠ 0 iff transverse", 0.5, chk_transversality),
    Identity("linear.spinor-null-space", "pure spinor determines its Lagrangian", 1e-9, chk_spinor_null_space),
    Identity("linear.pullback-backward-image", "pulled-back spinor defines the backward image", 1e-8, chk_pullback_backward),
    Identity("linear.splitting", "splitting bivector: Eᵀ∧F = exp(−ι_π)(top part)", 1e-8, chk_splitting),
    Identity("linear.bivector-relation", "strong morphisms relate splitting bivectors", 1e-8, chk_bivector_relation),
    Identity("linear.reconstruction", "reconstruction of E from (π, 𝔞) and ran(E) = ran 𝔞 + ran π♯", 1e-9, chk_reconstruction),
)


# ---------------------------------------------------------------------------
# Lie algebra data


def chk_structure(ctx: Context) -> Iterable[Sample]:
    res = ctx.algebra.residuals()
    yield "structure constants", max(res.values())


def chk_xi_contraction(ctx: Context) -> Iterable[Sample]:
    g = ctx.algebra
    xi = cartan_three_tensor(g)
    for i in range(ctx.samples):
        a, b, c = ctx.rng.normal(size=(3, g.dim))
        val = b_contract(g, c, b_contract(g, b, b_contract(g, a, xi))).scalar_part
        yield f"sample[{i}]", abs(val - 0.25 * g.B(a, g.bracket(b, c)))


def chk_tau_bracket(ctx: Context) -> Iterable[Sample]:
    g = ctx.algebra
    q = g.space
    for i in range(ctx.count(heavy=True)):
        a, b = ctx.rng.normal(size=(2, g.dim))
        r1 = commutator(q, tau_alg(g, a), Multivector.vector(b)) - Multivector.vector(g.bracket(a, b))
        r2 = commutator(q, tau_alg(g, a), tau_alg(g, b)) - tau_alg(g, g.bracket(a, b))
        yield f"sample[{i}]", max(_maxabs(r1), _maxabs(r2))


def chk_dcl_square(ctx: Context) -> Iterable[Sample]:
    d = clifford_differential_matrix(ctx.algebra)
    yield "operator", float(np.abs(d @ d).max(initial=0))


def chk_dcl_vector(ctx: Context) -> Iterable[Sample]:
    g = ctx.algebra
    for i in range(ctx.samples):
        a = ctx.rng.normal(size=g.dim)
        yield f"sample[{i}]", _maxabs(clifford_differential(g, Multivector.vector(a)) - tau_alg(g, a))


def chk_casimir(ctx: Context) -> Iterable[Sample]:
    g = ctx.algebra
    xi = cartan_three_tensor(g)
    direct = commutator(g.space, xi, xi)
    nonscalar = _maxabs(direct - Multivector.scalar(g.dim, direct.scalar_part))
    trace_route = np.trace(g.casimir_ad()) / 384
    yield "[q(Ξ), q(Ξ)]", max(nonscalar, abs(direct.scalar_part - trace_route))


def chk_double_rep(ctx: Context) -> Iterable[Sample]:
    rep = double_spinor_rep(ctx.algebra)
    gens = [m.toarray() for m in rep.generators]
    eye = np.eye(gens[0].shape[0])
    worst = 0.0
    for i in range(len(gens)):
        for j in range(i, len(gens)):
            anti = gens[i] @ gens[j] + gens[j] @ gens[i]
            worst = max(worst, float(np.abs(anti - rep.gram[i, j] * eye).max()))
    yield "generators", worst


def chk_cdybe(ctx: Context) -> Iterable[Sample]:
    g = ctx.algebra
    for i in range(ctx.count(heavy=True)):
        nu = _regular_nu(ctx.rng, g, 0.1, 2.0)
        yield f"nu[{i}]", cdybe_residual(g, nu, ctx.fd_step)[0]


def chk_gauss_annihilated(ctx: Context) -> Iterable[Sample]:
    g = ctx.algebra
    gs = gauss_spinor(g)
    rep = double_spinor_rep(g)
    s = gauss_subalgebra(g)
    worst = max(float(np.abs(rep.vector(s[:, i]) @ gs.x.coeffs).max()) for i in range(s.shape[1]))
    yield "generators of 𝔰", max(worst, abs(supertrace(gs.x) - 1))


def chk_gauss_differential(ctx: Context) -> Iterable[Sample]:
    g = ctx.algebra
    gs = gauss_spinor(g)
    dx = clifford_differential(g, gs.x)
    yield "x", _maxabs(dx - commutator(g.space, Multivector.vector(gs.h_rho), gs.x))


def chk_r_gauge(ctx: Context) -> Iterable[Sample]:
    g = ctx.algebra
    yield "x", _maxabs(gauss_spinor_from_r_matrix(g) - gauss_spinor(g).x)


LIE_SUITE = (
    Identity("lie.structure", "Jacobi identity and invariance of B", 1e-12, chk_structure),
    Identity("lie.xi-contraction", "ι(c)ι(b)ι(a)Ξ = ¼B(a, [b, c])", 1e-11, chk_xi_contraction),
    Identity("lie.tau-bracket", "τ is a Lie morphism inducing ad on 𝔤 ⊂ Cl(𝔤)", 1e-10, chk_tau_bracket),
    Identity("lie.dcl-square", "Clifford differential squares to zero", 1e-10, chk_dcl_square),
    Identity("lie.dcl-vector", "Clifford differential on vectors is τ", 1e-10, chk_dcl_vector),
    Identity("lie.casimir", "[q(Ξ), q(Ξ)] is the scalar tr(Cas_ad)/384", 1e-11, chk_casimir),
    Identity("lie.double-spinor-rep", "Cl(𝔡) acts on Cl(𝔤) by l(ξ) − r(ξ')", 1e-12, chk_double_rep),
    Identity("lie.cdybe", "dynamical twist solves dε + ½[ε, ε] = Ξ", 1e-6, chk_cdybe),
    Identity("lie.gauss-spinor-annihilated", "Gauss spinor is annihilated by 𝔰", 1e-12, chk_gauss_annihilated, _has_cartan),
    Identity("lie.gauss-differential", "d^Cl x = [h_ρ, x] for the Gauss spinor", 1e-10, chk_gauss_differential, _has_cartan),
    Identity("lie.r-matrix-gauge", "r-matrix gauge carries q(μ) to the Gauss spinor", 1e-10, chk_r_gauge, _has_cartan),
)


# ---------------------------------------------------------------------------
# Dirac structures on the group


def chk_s_isometry(ctx: Context) -> Iterable[Sample]:
    gram_d = double(ctx.algebra).gram
    split = split_gram(ctx.group.dim)
    for i, p in enumerate(_points(ctx, ctx.samples)):
        sm = fiber_model(p).s_matrix()
        yield f"g[{i}]", float(np.abs(sm.T @ split @ sm - gram_d).max())


def chk_fiber_pairing(ctx: Context) -> Iterable[Sample]:
    g = ctx.algebra
    eye = np.eye(g.dim)
    for i, p in enumerate(_points(ctx, ctx.samples)):
        fm = fiber_model(p)
        mat = np.array([[pair(fm.e(a), fm.f(b)) for b in eye] for a in eye])
        yield f"g[{i}]", float(np.abs(mat - g.gram).max())


def chk_courant(ctx: Context) -> Iterable[Sample]:
    g = ctx.algebra
    n = g.dim
    for i, p in enumerate(_points(ctx, ctx.count(heavy=True))):
        z1, z2 = (ctx.rng.normal(size=2 * n) for _ in range(2))
        zb = np.concatenate([g.bracket(z1[:n], z2[:n]), g.bracket(z1[n:], z2[n:])])
        want = fiber_model(p).s(zb[:n], zb[n:])
        got = courant_bracket_of_sections(p, z1, z2)
        yield f"g[{i}]", float(np.abs(got - want).max() / max(1.0, np.abs(want).max()))


def chk_eta_closed(ctx: Context) -> Iterable[Sample]:
    g = ctx.algebra
    zero = [Multivector.zero(g.dim)] * g.dim
    yield "η", _maxabs(left_exterior_derivative(g, eta_tensor(g), zero))


def chk_pi_splitting(ctx: Context) -> Iterable[Sample]:
    for i, p in enumerate(_points(ctx, ctx.samples)):
        e_g, f_g = cartan_dirac_fibers(p)
        split, _ = splitting_bivector(e_g, f_g)
        yield f"g[{i}]", float(np.abs(split - pi_G(p)).max())


def chk_pi_schouten(ctx: Context) -> Iterable[Sample]:
    for i, p in enumerate(_points(ctx, ctx.count(heavy=True))):
        yield f"g[{i}]", schouten_check(p)


def _pairs(ctx: Context, count: int):
    return [(ctx.group.random_point(ctx.rng), ctx.group.random_point(ctx.rng)) for _ in range(count)]


def chk_mult_relations(ctx: Context) -> Iterable[Sample]:
    for i, (a, b) in enumerate(_pairs(ctx, ctx.samples)):
        yield f"(a,b)[{i}]", max(mult_relation_residuals(mult_morphism_fiber(a, b)).values())


def chk_mult_strong(ctx: Context) -> Iterable[Sample]:
    for i, (a, b) in enumerate(_pairs(ctx, ctx.samples)):
        mf = mult_morphism_fiber(a, b)
        yield f"(a,b)[{i}]", max(mult_complement_check(mf), 0.0 if mult_is_strong(mf) else 1.0)


def chk_varsigma(ctx: Context) -> Iterable[Sample]:
    n = ctx.group.dim
    for i in range(ctx.count(heavy=True)):
        a, b, c = _points(ctx, 3)
        u, w = ctx.rng.normal(size=(2, 3 * n))
        yield f"(a,b,c)[{i}]", abs(varsigma_coboundary(a, b, c, u, w))


def chk_exp_relations(ctx: Context) -> Iterable[Sample]:
    g = ctx.algebra
    for i in range(ctx.samples):
        nu = _regular_nu(ctx.rng, g, 0.1, 3.0)
        yield f"nu[{i}]", max(exp_relation_residuals(g, nu, ctx.group.point(nu)).values())


def chk_gauss_reconstruction(ctx: Context) -> Iterable[Sample]:
    for i, p in enumerate(_points(ctx, ctx.samples, max_norm=1.0)):
        f = gauss_decompose(p)
        yield f"g[{i}]", float(np.abs(f.product() - p.matrix).max() / max(1.0, np.abs(p.matrix).max()))


def chk_sts(ctx: Context) -> Iterable[Sample]:
    for i, p in enumerate(_points(ctx, ctx.count(heavy=True), max_norm=1.0)):
        a = sts_bivector(p)
        yield f"g[{i}]", float(max(np.abs(a - sts_bivector_expanded(p)).max(), np.abs(a - sts_bivector_splitting(p)).max()))


GROUP_SUITE = (
    Identity("group.s-isometry", "trivialization s: 𝔡 → 𝕋G is an isometry", 1e-10, chk_s_isometry),
    Identity("group.fiber-pairing", "⟨e(ξ), f(ζ)⟩ = B(ξ, ζ)", 1e-10, chk_fiber_pairing),
    Identity("group.courant-sections", "s intertwines the 𝔡 bracket with the η-twisted Courant bracket", 1e-9, chk_courant),
    Identity("group.eta-closed", "Cartan 3-form is closed", 1e-12, chk_eta_closed),
    Identity("group.pi-splitting", "π_G is the splitting bivector of (E_G, F_G)", 1e-10, chk_pi_splitting),
    Identity("group.pi-schouten", "½[π_G, π_G] = A_ad(Ξ)", 1e-9, chk_pi_schouten),
    Identity("group.mult-relations", "multiplication relates the section families", 1e-10, chk_mult_relations),
    Identity("group.mult-strong", "multiplication is a strong Dirac morphism", 1e-9, chk_mult_strong),
    Identity("group.varsigma-cocycle", "the multiplication 2-form satisfies the cocycle identity", 1e-10, chk_varsigma),
    Identity("group.exp-relations", "exponential morphism relates e₀, f₀ to e, f", 1e-8, chk_exp_relations),
    Identity("group.gauss-decomposition", "Gauss factorization reproduces g", 1e-12, chk_gauss_reconstruction, _is_sl),
    Identity("group.sts-routes", "Semenov-Tian-Shansky bivector: three routes agree", 1e-9, chk_sts, _is_sl),
)


# ---------------------------------------------------------------------------
# pure spinors on the group


def _mv_for(ctx: Context) -> Multivector:
    return _random_mv(ctx.rng, ctx.group.dim, _is_complex(ctx))


def chk_covering(ctx: Context) -> Iterable[Sample]:
    for i, p in enumerate(_points(ctx, ctx.samples)):
        yield f"g[{i}]", covering_residual(p)


def chk_intertwining(ctx: Context) -> Iterable[Sample]:
    for i, p in enumerate(_points(ctx, ctx.count(heavy=True))):
        z = ctx.rng.normal(size=2 * ctx.group.dim)
        yield f"g[{i}]", intertwining_residual(_mv_for(ctx), z, p)


def chk_differential(ctx: Context) -> Iterable[Sample]:
    for i, p in enumerate(_points(ctx, ctx.count(heavy=True))):
        yield f"g[{i}]", differential_residual(_mv_for(ctx), p)


def chk_phi_equation(ctx: Context) -> Iterable[Sample]:
    for i, p in enumerate(_points(ctx, ctx.count(heavy=True))):
        yield f"g[{i}]", phi_equation_residual(p)


def chk_psi_equation(ctx: Context) -> Iterable[Sample]:
    for i, p in enumerate(_points(ctx, ctx.count(heavy=True))):
        yield f"g[{i}]", psi_equation_residual(p)


def chk_pairing(ctx: Context) -> Iterable[Sample]:
    scale = 10.0 if ctx.group.dim > 6 else 1.0
    for i, p in enumerate(_points(ctx, ctx.count(heavy=True))):
        yield f"g[{i}]", pairing_residual(_mv_for(ctx), _mv_for(ctx), p) / scale


def chk_translation(ctx: Context) -> Iterable[Sample]:
    for i in range(ctx.count(heavy=True)):
        a, p = _points(ctx, 2)
        x = _mv_for(ctx)
        res = max(left_translation_residual(x, a, p), *(right_translation_residual(part, a, p) for part in (x.even(), x.odd())))
        yield f"(a,g)[{i}]", res


def chk_mult_pullback(ctx: Context) -> Iterable[Sample]:
    for i, (a, b) in enumerate(_pairs(ctx, ctx.count(heavy=True))):
        yield f"(a,b)[{i}]", mult_pullback_check(a, b)


def chk_exp_pullback(ctx: Context) -> Iterable[Sample]:
    g = ctx.algebra
    ys = (("1", Multivector.scalar(g.dim)), ("μ", mu_of(g)))
    for i in range(ctx.count(heavy=True)):
        nu = _regular_nu(ctx.rng, g, 0.2, 3.0)
        p = ctx.group.point(nu)
        yield f"nu[{i}]", max(exp_pullback_check(y, g, p) for _, y in ys)


def chk_explicit_psi(ctx: Context) -> Iterable[Sample]:
    got = attempts = 0
    n = ctx.group.dim
    while got < ctx.samples and attempts < 20 * ctx.samples:
        attempts += 1
        p = ctx.group.random_point(ctx.rng)
        if np.real(np.linalg.det(np.eye(n) + adjoint(p))) <= 0.1:
            continue
        value, _ = psi_explicit_aligned(p)
        ref = psi_G(p)
        yield f"g[{got}]", _maxabs(value - ref) / max(_maxabs(ref), 1e-300)
        got += 1


def _is_o2(ctx: Context) -> bool:
    return ctx.group.name == "o2"


def chk_o2_phi(ctx: Context) -> Iterable[Sample]:
    for i in range(ctx.samples):
        p = ctx.group.point(np.array([ctx.rng.uniform(-np.pi, np.pi)]))
        yield f"R[{i}]", _maxabs(phi_G(p) - Multivector.vector([1.0]))


def chk_o2_psi(ctx: Context) -> Iterable[Sample]:
    for i in range(ctx.samples):
        p = ctx.group.point(np.array([ctx.rng.uniform(-np.pi, np.pi)]))
        yield f"R[{i}]", _maxabs(psi_G(p) - Multivector.scalar(1))


def chk_gauss_closed_form(ctx: Context) -> Iterable[Sample]:
    for i, p in enumerate(_points(ctx, ctx.count(heavy=True), max_norm=1.0)):
        ref = psi_hat_G(p)
        yield f"g[{i}]", _maxabs(ref - psi_hat_closed_form(p)) / max(1.0, _maxabs(ref))


def chk_gauss_diffeq(ctx: Context) -> Iterable[Sample]:
    weights = [1, (3,)] if ctx.group.name == "sl2c" else [1, 2, (1, 1)]
    for i, p in enumerate(_points(ctx, ctx.count(heavy=True), max_norm=1.0)):
        yield f"g[{i}]", max(gauss_diffeq_check(p, w) for w in weights)


def _connected(ctx: Context) -> bool:
    return not ctx.group.component_reps


SPINOR_SUITE = (
    Identity("spinor.covering", "τ lifts Ad to Pin(𝔤)", 1e-9, chk_covering),
    Identity("spinor.intertwining", "ℛ intertwines ρ^Cl with the action of s", 1e-9, chk_intertwining),
    Identity("spinor.differential", "(d + η)ℛ(x) = ℛ(d^Cl x)", 1e-9, chk_differential),
    Identity("spinor.phi-equation", "(d + η)φ_G = 0", 1e-9, chk_phi_equation),
    Identity("spinor.psi-equation", "(d + η)ψ_G + ρ(e(Ξ))ψ_G = 0", 1e-9, chk_psi_equation),
    Identity("spinor.pairing", "(ℛ(x), ℛ(x')) = ±𝖭(g)(x, x')_Cl μ_G", 1e-10, chk_pairing),
    Identity("spinor.translation", "left and right translation of ℛ(x)", 1e-9, chk_translation),
    Identity("spinor.mult-pullback", "Mult*ψ_G = exp(−ς)∧(ψ_G ⊗ ψ_G)", 1e-8, chk_mult_pullback),
    Identity("spinor.exp-pullback", "exp*ℛ(q(y)) = J^{1/2}e^{−ϖ}ρ(exp(−q(e₀(ε))))ℛ₀(y)", 1e-6, chk_exp_pullback, _connected),
    Identity("spinor.explicit-psi", "explicit ψ_G = det^{1/2}((1 + Ad)/2)exp(¼B(Mθ, θ))", 1e-8, chk_explicit_psi, lambda c: not _is_complex(c)),
    Identity("spinor.o2-phi", "O(2): φ_G = θ on the rotations", 1e-12, chk_o2_phi, _is_o2),
    Identity("spinor.o2-psi", "O(2): ψ_G = 1 on the rotations", 1e-12, chk_o2_psi, _is_o2),
    Identity("spinor.gauss-closed-form", "ψ̂_G closed form against ℛ(x)", 1e-8, chk_gauss_closed_form, _is_sl),
    Identity("spinor.gauss-diffeq", "(d + η − ρ(e(h_{λ+ρ})))Δ_λψ̂_G = 0", 1e-8, chk_gauss_diffeq, _is_sl),
)


# ---------------------------------------------------------------------------
# q-Hamiltonian spaces


def _shared_rng(ctx: Context, offset: int) -> np.random.Generator:
    seq = np.random.SeedSequence(ctx.shared["seed"], spawn_key=(ctx.shared["suite_index"], SHARED_STREAM + offset))
    return np.random.Generator(np.random.PCG64(seq))


def _class_model(ctx: Context, which: int = 0) -> QHamPointModel:
    key = ("class", which)
    if key not in ctx.shared:
        rng = _shared_rng(ctx, which)
        g0 = ctx.group.random_point(rng)
        ctx.shared[key] = conjugacy_class_space(g0, ctx.count(heavy=True), rng)
    return ctx.shared[key]


def _orbit_model(ctx: Context) -> QHamPointModel:
    if "orbit" not in ctx.shared:
        rng = _shared_rng(ctx, 10)
        nu0 = _regular_nu(rng, ctx.algebra, 0.5, 2.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ctx.shared["orbit"] = exponential_orbit(nu0, ctx.group, ctx.count(heavy=True), rng, max_norm=1.0)
    return ctx.shared["orbit"]


def _axioms(ctx: Context):
    if "axioms" not in ctx.shared:
        ctx.shared["axioms"] = check_axioms(_class_model(ctx))
    return ctx.shared["axioms"]


def chk_class_moment(ctx: Context) -> Iterable[Sample]:
    for rep in _axioms(ctx):
        yield rep.label, rep.moment


def chk_class_equivariance(ctx: Context) -> Iterable[Sample]:
    for rep in _axioms(ctx):
        yield rep.label, rep.equivariance


def chk_class_closure(ctx: Context) -> Iterable[Sample]:
    # relative to the size of the pulled-back form, which grows with |Ad_h| on noncompact groups
    for rep, pt in zip(_axioms(ctx), _class_model(ctx).points):
        scale = max(1.0, float(np.abs(pt.action.T @ pt.omega @ pt.action).max(initial=0)))
        yield rep.label, rep.closure / scale


def chk_class_strong(ctx: Context) -> Iterable[Sample]:
    for rep in _axioms(ctx):
        yield rep.label, 0.0 if (rep.dirac and rep.strong) else 1.0


def chk_volume_nonvanishing(ctx: Context) -> Iterable[Sample]:
    model = _class_model(ctx)
    for pt in model.points:
        yield pt.label, 0.0 if abs(liouville_volume(model, pt)) > 1e-8 else 1.0


def chk_volume_null_space(ctx: Context) -> Iterable[Sample]:
    for pt in _class_model(ctx).points:
        ns = null_space_of_spinor(pulled_spinor(pt)).lagrangian()
        want = backward_image(pt.morphism(), fiber_model(pt.image).complement()).lagrangian
        yield pt.label, subspace_distance(ns.basis, want.basis)


def chk_volume_equivariance(ctx: Context) -> Iterable[Sample]:
    model = _class_model(ctx)
    for i in range(3):
        k = ctx.group.random_point(ctx.rng)
        yield f"k[{i}]", equivariance_volume_residual(model, k)


def _fused(ctx: Context) -> QHamPointModel:
    if "fused" not in ctx.shared:
        ctx.shared["fused"] = fuse(_class_model(ctx, 0), _class_model(ctx, 1))
    return ctx.shared["fused"]


def chk_fusion_moment(ctx: Context) -> Iterable[Sample]:
    for pt in _fused(ctx).points:
        yield pt.label, moment_residual(pt)


def chk_fusion_volume(ctx: Context) -> Iterable[Sample]:
    model = _fused(ctx)
    for pt in model.points:
        yield pt.label, abs(liouville_volume(model, pt) - product_volume(pt))


def chk_orbit_moment(ctx: Context) -> Iterable[Sample]:
    for pt in _orbit_model(ctx).points:
        yield pt.label, moment_residual(pt)


def chk_orbit_volume(ctx: Context) -> Iterable[Sample]:
    model = _orbit_model(ctx)
    for pt in model.points:
        yield pt.label, abs(liouville_volume(model, pt) - exponential_volume(pt))


def chk_parity(ctx: Context) -> Iterable[Sample]:
    model = _class_model(ctx)
    for pt, (a, b) in zip(model.points, parity(model)):
        yield pt.label, float(a != b)


def chk_qpoisson(ctx: Context) -> Iterable[Sample]:
    for rep in qpoisson_consistency(_class_model(ctx)):
        yield rep.label, max(rep.anchor, 0.0 if rep.rank_ok else 1.0)


def _kstar_base(ctx: Context) -> str | None:
    name = ctx.group.name
    if name.startswith("kstar"):
        return name[name.index("(") + 1 : -1] if "(" in name else "su2"
    return name if name in ("su2", "so3") else None


def chk_kstar_pullback(ctx: Context) -> Iterable[Sample]:
    rep = kstar_embedding_check(_kstar_base(ctx), ctx.samples, ctx.rng)
    yield f"𝔨* ⊂ {_kstar_base(ctx)}*⋊K", max(rep.psi, rep.maurer_cartan)


def chk_kstar_relations(ctx: Context) -> Iterable[Sample]:
    rep = kstar_embedding_check(_kstar_base(ctx), ctx.samples, ctx.rng)
    yield f"𝔨* ⊂ {_kstar_base(ctx)}*⋊K", rep.relations


def _has_orbits(ctx: Context) -> bool:
    return not _is_complex(ctx) and _connected(ctx)


QHAM_SUITE = (
    Identity("qham.class-moment", "conjugacy class: moment map condition", 1e-9, chk_class_moment),
    Identity("qham.class-equivariance", "conjugacy class: Φ is equivariant", 1e-9, chk_class_equivariance),
    Identity("qham.class-closure", "conjugacy class: dω = Φ*η", 1e-9, chk_class_closure),
    Identity("qham.class-strong", "conjugacy class: (Φ, ω) is a strong Dirac morphism", 0.5, chk_class_strong),
    Identity("qham.volume-nonvanishing", "Liouville volume is nonvanishing", 0.5, chk_volume_nonvanishing),
    Identity("qham.volume-null-space", "null space of exp(ω)∧Φ*ψ_G is the backward image of F_G", 1e-8, chk_volume_null_space),
    Identity("qham.volume-equivariance", "Liouville volume is conjugation-equivariant", 1e-8, chk_volume_equivariance),
    Identity("qham.fusion-moment", "fusion product: moment map condition", 1e-9, chk_fusion_moment),
    Identity("qham.fusion-volume", "fusion: volume of the product equals the product of volumes", 1e-8, chk_fusion_volume),
    Identity("qham.orbit-moment", "exponential of a coadjoint orbit: moment map condition", 1e-8, chk_orbit_moment, _has_orbits),
    Identity("qham.orbit-volume", "exponential volume: μ_M = J^{1/2}(e^{ω₀})^{[top]}", 1e-8, chk_orbit_volume, _has_orbits),
    Identity("qham.parity", "dim M mod 2 = [det Ad_Φ = −1]", 0.5, chk_parity),
    Identity("qham.q-poisson", "q-Poisson anchor identity and nondegeneracy", 1e-8, chk_qpoisson),
    Identity("qham.kstar-pullback", "𝔨* → 𝔨*⋊K pulls ψ_G back to 1", 1e-10, chk_kstar_pullback, lambda c: _kstar_base(c) is not None),
    Identity("qham.kstar-relations", "𝔨* → 𝔨*⋊K relates e₀, f₀ to e, f", 1e-10, chk_kstar_relations, lambda c: _kstar_base(c) is not None),
)


SUITES: dict[str, tuple[Identity, ...]] = {
    "algebra": ALGEBRA_SUITE,
    "linear": LINEAR_SUITE,
    "lie": LIE_SUITE,
    "group": GROUP_SUITE,
    "spinor": SPINOR_SUITE,
    "qham": QHAM_SUITE,
}


@functools.cache
def identity_ids() -> frozenset[str]:
    return frozenset(ident.id for suite in SUITES.values() for ident in suite)


# ---------------------------------------------------------------------------
# running


def _stream(seed: int, suite_index: int, row_index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(seed, spawn_key=(suite_index, row_index))
    return np.random.Generator(np.random.PCG64(seq))


def resolve(config: RunConfig) -> tuple[GroupDescriptor, LieAlgebraData]:
    group = group_descriptor(config.group)
    algebra = builtin_algebra(config.algebra) if config.algebra else group.algebra
    if config.algebra and algebra.name != group.algebra.name:
        # an explicit algebra replaces the group by its own matrix group where one exists
        group = group_descriptor(algebra.name)
    return group, algebra


def run_suite(name: str, config: RunConfig) -> list[Row]:
    if name not in SUITES:
        raise UsageError(f"unknown suite {name!r}")
    unknown = set(config.tol) - identity_ids()
    if unknown:
        raise UsageError(f"unknown identity ids in tolerance overrides: {sorted(unknown)}")
    group, algebra = resolve(config)
    suite_index = SUITE_NAMES.index(name)
    shared: dict = {"seed": config.seed, "suite_index": suite_index}
    rows = []
    for row_index, ident in enumerate(SUITES[name]):
        ctx = Context(group, algebra, _stream(config.seed, suite_index, row_index), config.samples, config.fd_step, shared)
        if not ident.applies(ctx):
            continue
        worst_label, worst = "none", 0.0
        for label, res in ident.check(ctx):
            res = math.nan if res is None else float(res)
            if math.isnan(worst):
                continue
            if math.isnan(res) or res > worst or worst_label == "none":
                worst_label, worst = label, res
        tol = float(config.tol.get(ident.id, ident.tol))
        rows.append(Row(ident.id, worst_label, worst, tol, ident.citation))
    return rows


def run(suite: str, config: RunConfig) -> list[Row]:
    names = SUITE_NAMES if suite == "all" else (suite,)
    return [row for name in names for row in run_suite(name, config)]


def report_dict(suite: str, config: RunConfig, rows: list[Row]) -> dict:
    group, algebra = resolve(config)
    return {
        "schema": SCHEMA_VERSION,
        "command": "verify",
        "suite": suite,
        "group": group.name,
        "algebra": algebra.name,
        "seed": config.seed,
        "samples": config.samples,
        "fd_step": config.fd_step,
        "rows": [r.to_dict() for r in rows],
        "pass": all(r.passed for r in rows),
    }


def report_text(suite: str, config: RunConfig, rows: list[Row]) -> str:
    group, algebra = resolve(config)
    width = max((len(r.identity_id) for r in rows), default=10)
    lines = [f"verify {suite}: group={group.name} algebra={algebra.name} seed={config.seed} samples={config.samples}"]
    for r in rows:
        status = "PASS" if r.passed else "FAIL"
        lines.append(
            f"{status}  {r.identity_id:<{width}}  residual={r.residual:.3e}  tol={r.tol:.1e}  at {r.point}  ({r.citation})"
        )
    failed = sum(not r.passed for r in rows)
    lines.append(f"{len(rows) - failed}/{len(rows)} identities pass")
    return "\n".join(lines)
