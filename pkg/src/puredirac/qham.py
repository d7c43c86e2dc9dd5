"""q-Hamiltonian spaces as sampled pointwise models of strong Dirac morphisms.

A model stores, at each sampled point p, a tangent basis of T_pM (as ambient
vectors), the 2-form ω on that basis, the moment differential dΦ into the
left-trivialized 𝔤, and the tangent coordinates of the generating vectors
A_M(e_i). Generating vectors follow the convention of
:func:`puredirac.group.conjugation_vector`: on G they are ξ − Ad_{g⁻¹}ξ, on 𝔤
they are [ν, ξ].
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .algebra import Multivector, exp_wedge, pullback, wedge
from .errors import DomainError, UsageError
from .group import (
    GroupDescriptor,
    GroupPoint,
    adjoint,
    adjoint_inv,
    ce_differential,
    eta_tensor,
    exp_morphism_fiber,
    fiber_model,
    group_descriptor,
    mult_morphism_fiber,
    ray_is_regular,
    relation_residual,
    schouten_check,
)
from .lie import LieAlgebraData
from .linear import (
    LagrangianSubspace,
    LinearDiracMorphism,
    backward_image,
    compose_morphisms,
    is_strong_dirac_morphism,
    splitting_bivector,
    two_form,
)
from .spinors import psi_G, psi_hat_G

MODEL_KINDS = ("conjugacy-class", "fused-product", "exponential-orbit", "group")


@dataclass(frozen=True, eq=False)
class QHamPoint:
    """Exact tangent data of a q-Hamiltonian space at one sampled point."""

    label: str
    image: GroupPoint  # Φ(p)
    tangent: np.ndarray  # ambient tangent vectors, one per column
    omega: np.ndarray  # m × m, ω(v, w) = vᵀΩw in tangent coordinates
    d_phi: np.ndarray  # n × m, into the left-trivialized 𝔤
    action: np.ndarray  # m × n, column i = tangent coordinates of A_M(e_i)
    frame: object = None  # data needed to rebuild the point after conjugation
    source: LagrangianSubspace | None = None  # Dirac structure on M; None means TM
    extras: Mapping = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.tangent.shape[1]

    def morphism(self) -> LinearDiracMorphism:
        return LinearDiracMorphism(self.d_phi, self.omega)

    def source_structure(self) -> LagrangianSubspace:
        return self.source if self.source is not None else LagrangianSubspace.tangent(self.dim)


@dataclass(frozen=True, eq=False)
class QHamPointModel:
    kind: str
    group: GroupDescriptor
    base: Mapping
    points: tuple[QHamPoint, ...]

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise UsageError(f"unknown model kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return self.points[0].dim if self.points else 0


def _default_rng(rng: np.random.Generator | None) -> np.random.Generator:
    return rng if rng is not None else np.random.Generator(np.random.PCG64(0))


def _coordinates(basis: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Coordinates of vectors in the span of ``basis`` (checked)."""
    if basis.shape[1] == 0:
        return np.zeros((0, vectors.shape[1]), dtype=vectors.dtype)
    c, *_ = np.linalg.lstsq(basis, vectors, rcond=None)
    scale = max(1.0, np.abs(vectors).max(initial=0))
    if np.abs(basis @ c - vectors).max(initial=0) > 1e-8 * scale:
        raise DomainError("generating vectors are not tangent to the model")
    return c


def _rank(m: np.ndarray, tol: float = 1e-9) -> int:
    """Rank with the threshold tol·max(1, σ_max), so round-off matrices count as zero."""
    if m.size == 0:
        return 0
    sv = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(sv > tol * max(1.0, sv[0])))


def _complement_basis(m: np.ndarray) -> np.ndarray:
    """Orthonormal basis of a complement to ker m (the row space)."""
    _, sv, vh = np.linalg.svd(m)
    k = int(np.sum(sv > 1e-9 * max(1.0, sv[0] if sv.size else 0.0)))
    return vh[:k].conj().T


# ---------------------------------------------------------------------------
# conjugacy classes


def _class_point(g0: GroupPoint, h: GroupPoint, xi0: np.ndarray, label: str) -> QHamPoint:
    ad_h = adjoint(h)
    matrix = h.matrix @ g0.matrix @ h.inverse_matrix()
    if g0.component == 0 and g0.log is not None:
        # log(hg₀h⁻¹) = Ad_h log g₀ keeps τ exact where logm is ambiguous (e.g. at −1)
        gp = GroupPoint(h.group, matrix, ad_h @ g0.log, 0)
    else:
        gp = GroupPoint(h.group, matrix, None, h.group.component_of(matrix))
    xi = ad_h @ xi0
    conj = np.eye(gp.dim) - adjoint_inv(gp)
    tangent = conj @ xi
    w = -0.5 * (adjoint(gp) - adjoint_inv(gp)).T @ gp.group.algebra.gram
    omega = xi.T @ w @ xi
    omega = 0.5 * (omega - omega.T)
    action = _coordinates(tangent, conj)
    return QHamPoint(label, gp, tangent, omega, tangent, action, frame=h)


def conjugacy_class_space(
    g0: GroupPoint, samples: int = 20, rng: np.random.Generator | None = None, max_norm: float = 2.0
) -> QHamPointModel:
    """Points hg₀h⁻¹ of the class of g₀; the first sample is g₀ itself.

    Tangent vectors are A_ad(ξ) for ξ in Ad_h Ξ₀, with Ξ₀ a fixed orthonormal
    complement of the centralizer of g₀, so orientations are transported.
    """
    rng = _default_rng(rng)
    group = g0.group
    xi0 = _complement_basis(np.eye(g0.dim) - adjoint_inv(g0))
    frames = [group.identity()] + [group.random_point(rng, max_norm) for _ in range(samples - 1)]
    pts = tuple(_class_point(g0, h, xi0, f"conj[{i}]") for i, h in enumerate(frames))
    return QHamPointModel("conjugacy-class", group, {"representative": g0, "xi0": xi0}, pts)


# ---------------------------------------------------------------------------
# exponentials of coadjoint orbits


def orbit_point(group: GroupDescriptor, nu: np.ndarray, xi: np.ndarray, label: str = "orbit") -> QHamPoint:
    """The exponential q-Hamiltonian structure at ν with tangent basis [ξ_k, ν].

    ω = ω₀ + Φ₀*ϖ with ω₀(ad_ξν, ad_ζν) = −B(ν, [ξ, ζ]), Φ = exp∘Φ₀. No
    regularity check is made; at points outside 𝔤_♮ the data may be degenerate.
    """
    g = group.algebra
    nu = np.asarray(nu)
    ad_nu = g.ad(nu)
    tangent = -ad_nu @ xi  # [ξ_k, ν]
    low = np.einsum("k,ijk->ij", g.gram @ nu, g.c)  # B(ν, [e_i, e_j])
    omega0 = -(xi.T @ low @ xi)
    ef = exp_morphism_fiber(g, nu)
    omega = omega0 + tangent.T @ ef.varpi @ tangent
    omega = 0.5 * (omega - omega.T)
    d_phi = ef.d_exp @ tangent
    action = _coordinates(tangent, ad_nu)
    extras = {"nu": nu, "omega0": 0.5 * (omega0 - omega0.T), "j_sqrt": ef.J_sqrt, "regular": ef.regular}
    return QHamPoint(label, group.point(nu), tangent, omega, d_phi, action, frame=xi, extras=extras)


def exponential_orbit(
    nu0: np.ndarray,
    group: GroupDescriptor | str,
    samples: int = 20,
    rng: np.random.Generator | None = None,
    max_norm: float = 2.0,
) -> QHamPointModel:
    """Points Ad_hν₀ of the orbit, mapped to G by exp; points outside 𝔤_♮ are dropped."""
    group = group_descriptor(group) if isinstance(group, str) else group
    rng = _default_rng(rng)
    g = group.algebra
    nu0 = np.asarray(nu0)
    xi0 = _complement_basis(g.ad(nu0))
    frames = [group.identity()] + [group.random_point(rng, max_norm) for _ in range(samples - 1)]
    pts = []
    for i, h in enumerate(frames):
        ad_h = adjoint(h)
        nu = ad_h @ nu0
        if not ray_is_regular(g, nu):
            warnings.warn(f"orbit point {i} lies outside the natural domain and is skipped", stacklevel=2)
            continue
        pts.append(orbit_point(group, nu, ad_h @ xi0, f"orbit[{i}]"))
    return QHamPointModel("exponential-orbit", group, {"nu0": nu0, "xi0": xi0}, tuple(pts))


# ---------------------------------------------------------------------------
# the group itself (q-Hamiltonian q-Poisson, E = E_G)


def group_space(group: GroupDescriptor | str, samples: int = 20, rng: np.random.Generator | None = None) -> QHamPointModel:
    """M = G with Φ = id, ω = 0 and source Dirac structure E_G."""
    group = group_descriptor(group) if isinstance(group, str) else group
    rng = _default_rng(rng)
    pts = []
    for i in range(samples):
        gp = group.identity() if i == 0 else group.random_point(rng)
        n = gp.dim
        conj = np.eye(n) - adjoint_inv(gp)
        pts.append(
            QHamPoint(
                f"group[{i}]", gp, np.eye(n), np.zeros((n, n)), np.eye(n), conj,
                frame=gp, source=fiber_model(gp).cartan_dirac(),
            )
        )
    return QHamPointModel("group", group, {}, tuple(pts))


# ---------------------------------------------------------------------------
# fusion


def _block_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]), dtype=np.result_type(a, b))
    out[: a.shape[0], : a.shape[1]] = a
    out[a.shape[0] :, a.shape[1] :] = b
    return out


def fuse_points(p1: QHamPoint, p2: QHamPoint, label: str | None = None) -> QHamPoint:
    """(Mult, ς)∘(Φ₁ × Φ₂, ω₁ + ω₂) at (p₁, p₂), with the diagonal action."""
    mf = mult_morphism_fiber(p1.image, p2.image)
    prod = LinearDiracMorphism(_block_diag(p1.d_phi, p2.d_phi), _block_diag(p1.omega, p2.omega))
    fused = compose_morphisms(mf.morphism, prod)
    extras = {"factors": (p1, p2)}
    return QHamPoint(
        label or f"({p1.label},{p2.label})",
        mf.product,
        _block_diag(p1.tangent, p2.tangent),
        fused.omega,
        fused.phi,
        np.vstack([p1.action, p2.action]),
        frame=(p1.frame, p2.frame),
        extras=extras,
    )


def fuse(m1: QHamPointModel, m2: QHamPointModel) -> QHamPointModel:
    """Fusion product, paired point by point."""
    if m1.group.name != m2.group.name:
        raise UsageError("fusion needs two spaces for the same group")
    if len(m1.points) != len(m2.points):
        raise UsageError("fusion pairs sample points; the models must have equal sample counts")
    pts = tuple(fuse_points(a, b, f"fus[{i}]") for i, (a, b) in enumerate(zip(m1.points, m2.points)))
    return QHamPointModel("fused-product", m1.group, {"factors": (m1, m2)}, pts)


# ---------------------------------------------------------------------------
# axioms


def moment_residual(pt: QHamPoint) -> float:
    """max_ξ ‖ι(A_M(ξ))ω − Φ*B(ξ, (θ^L + θ^R)/2)‖ over a basis of 𝔤."""
    g = pt.image.group.algebra
    lhs = pt.action.T @ pt.omega  # row i: ι(A_M(e_i))ω
    rhs = 0.5 * (g.gram @ (np.eye(g.dim) + adjoint(pt.image))) @ pt.d_phi
    return float(np.abs(lhs - rhs).max(initial=0))


def equivariance_residual(pt: QHamPoint) -> float:
    """‖dΦ(A_M(ξ)) − A_ad(ξ)‖: Φ intertwines the action with conjugation."""
    conj = np.eye(pt.image.dim) - adjoint_inv(pt.image)
    return float(np.abs(pt.d_phi @ pt.action - conj).max(initial=0))


def is_strong(pt: QHamPoint) -> bool:
    """ker ω ∩ ker dΦ = 0, computed by rank."""
    m = pt.dim
    if m == 0:
        return True
    return _rank(np.vstack([pt.omega, pt.d_phi])) == m


def dirac_report(pt: QHamPoint):
    """Forward image of the source structure against E_G, with strongness."""
    return is_strong_dirac_morphism(pt.morphism(), pt.source_structure(), fiber_model(pt.image).cartan_dirac())


def closure_residual(pt: QHamPoint) -> float:
    """d(q*ω) − q*Φ*η for the orbit map q: G → M, k ↦ k·p.

    q*ω is left-invariant, so its exterior derivative is the Chevalley-Eilenberg
    differential; this is exact for homogeneous models.
    """
    g = pt.image.group.algebra
    dq = -pt.action  # tangent coordinates of dq_e(ξ) = −A_M(ξ)
    left = two_form(dq.T @ pt.omega @ dq)
    d_left = Multivector(g.dim, ce_differential(g) @ left.coeffs)
    eta = pullback(pt.d_phi @ dq, eta_tensor(g))
    return float(np.abs((d_left - eta).coeffs).max(initial=0))


@dataclass(frozen=True)
class AxiomReport:
    label: str
    moment: float
    equivariance: float
    closure: float | None
    dirac: bool
    strong: bool


def check_axioms(model: QHamPointModel, closure: bool | None = None) -> list[AxiomReport]:
    """Pointwise q-Hamiltonian axioms; the closure test runs on homogeneous models."""
    if closure is None:
        closure = model.kind in ("conjugacy-class", "exponential-orbit")
    out = []
    for pt in model.points:
        rep = dirac_report(pt)
        out.append(
            AxiomReport(
                pt.label,
                moment_residual(pt),
                equivariance_residual(pt),
                closure_residual(pt) if closure else None,
                rep.is_dirac,
                rep.is_strong and is_strong(pt),
            )
        )
    return out


# ---------------------------------------------------------------------------
# volume forms


def pulled_spinor(pt: QHamPoint, spinor: str = "psi") -> Multivector:
    """exp(ω)∧Φ*ψ on the tangent basis (ψ = ψ_G or ψ̂_G)."""
    if spinor == "psi":
        psi = psi_G(pt.image)
    elif spinor == "psi_hat":
        psi = psi_hat_G(pt.image)
    else:
        raise UsageError(f"spinor must be 'psi' or 'psi_hat', not {spinor!r}")
    return wedge(exp_wedge(two_form(pt.omega)), pullback(pt.d_phi, psi))


def liouville_volume(model: QHamPointModel | None, point: QHamPoint | int, spinor: str = "psi") -> complex:
    """μ_M(v_1, …, v_m) = (exp(ω)∧Φ*ψ_G)^{[m]} on the stored tangent basis."""
    pt = model.points[point] if isinstance(point, int) else point
    val = complex(pulled_spinor(pt, spinor).top_coeff)
    return val.real if abs(val.imag) <= 1e-14 * max(1.0, abs(val)) else val


def product_volume(pt: QHamPoint) -> complex:
    """μ_{M₁}·μ_{M₂} for a fused point: the volume of the unfused product."""
    p1, p2 = pt.extras["factors"]
    return liouville_volume(None, p1) * liouville_volume(None, p2)


def exponential_volume(pt: QHamPoint) -> complex:
    """J^{1/2}(ν)·(e^{ω₀})^{[top]} at an orbit point."""
    top = complex(exp_wedge(two_form(pt.extras["omega0"])).top_coeff)
    return pt.extras["j_sqrt"] * top


def round_area(pt: QHamPoint, normal: np.ndarray) -> complex:
    """μ_𝔤(n, v_1, …, v_m) for a unit normal n (left frame), μ_𝔤 the basis top form."""
    cols = np.column_stack([normal, pt.tangent])
    return complex(np.linalg.det(cols))


def conjugate_model(model: QHamPointModel, k: GroupPoint) -> QHamPointModel:
    """Rebuild every point of a class or orbit model at k·p from scratch."""
    ad_k = adjoint(k)
    if model.kind == "conjugacy-class":
        g0, xi0 = model.base["representative"], model.base["xi0"]
        pts = tuple(
            _class_point(g0, k.multiply(pt.frame), xi0, pt.label + "^k") for pt in model.points
        )
        return replace(model, points=pts)
    if model.kind == "exponential-orbit":
        pts = tuple(
            orbit_point(model.group, ad_k @ pt.extras["nu"], ad_k @ pt.frame, pt.label + "^k")
            for pt in model.points
        )
        return replace(model, points=pts)
    if model.kind == "fused-product":
        m1, m2 = model.base["factors"]
        return fuse(conjugate_model(m1, k), conjugate_model(m2, k))
    raise UsageError(f"conjugation is not modelled for kind {model.kind!r}")


def equivariance_factor(model: QHamPointModel, k: GroupPoint, rule: str = "derived") -> float:
    """Sign relating μ(k·p)(Ad_k v) to μ(p)(v).

    ``"det"`` is det(Ad_k); ``"derived"`` is (−1)^{|k|(dim M + 1 + dim G)}, which
    follows from τ(k)q(μ)τ(k)⁻¹ = (−1)^{|k|(1 + dim G)}q(μ) and agrees with
    det(Ad_k) whenever dim M + dim G is odd or k is in the identity component.
    """
    if rule == "det":
        return float(np.sign(np.real(np.linalg.det(adjoint(k)))))
    if rule == "derived":
        return float((-1) ** (k.parity * (model.dim + 1 + k.dim)))
    raise UsageError(f"rule must be 'det' or 'derived', not {rule!r}")


def equivariance_volume_residual(model: QHamPointModel, k: GroupPoint, rule: str = "derived") -> float:
    """max_p |μ(k·p)(Ad_k v) − c(k)·μ(p)(v)| with c from :func:`equivariance_factor`."""
    moved = conjugate_model(model, k)
    c = equivariance_factor(model, k, rule)
    return max(
        (abs(liouville_volume(moved, a) - c * liouville_volume(model, b)) for a, b in zip(moved.points, model.points)),
        default=0.0,
    )


def parity(model: QHamPointModel) -> list[tuple[int, int]]:
    """(dim M mod 2, [det Ad_Φ = −1]) at each point; equal pairs are expected."""
    return [(pt.dim % 2, int(np.real(np.linalg.det(adjoint(pt.image))) < 0)) for pt in model.points]


# ---------------------------------------------------------------------------
# q-Poisson structure


@dataclass(frozen=True)
class QPoissonReport:
    label: str
    anchor: float  # π♯Φ*α' + Σ⟨α', (v_a^L + v_a^R)/2⟩A_M(v^a)
    rank_ok: bool  # ran A_M + ran π♯ = TM
    schouten: float | None  # only for M = G


def qpoisson_bivector(pt: QHamPoint) -> np.ndarray:
    """Splitting bivector of (E, F) with F the backward image of F_G."""
    if pt.dim == 0:
        return np.zeros((0, 0))
    f = backward_image(pt.morphism(), fiber_model(pt.image).complement()).lagrangian
    pi, _ = splitting_bivector(pt.source_structure(), f)
    return pi


def qpoisson_consistency(model: QHamPointModel) -> list[QPoissonReport]:
    g = model.group.algebra
    out = []
    for pt in model.points:
        pi = qpoisson_bivector(pt)
        avg = 0.5 * (np.eye(g.dim) + adjoint_inv(pt.image))
        lhs = pi.T @ pt.d_phi.T
        rhs = -pt.action @ g.gram_inv @ avg.T
        rank_ok = _rank(np.hstack([pt.action, pi.T])) == pt.dim
        sch = schouten_check(pt.image) if model.kind == "group" else None
        out.append(QPoissonReport(pt.label, float(np.abs(lhs - rhs).max(initial=0)), rank_ok, sch))
    return out


# ---------------------------------------------------------------------------
# the embedding 𝔨* → 𝔨*⋊K


@dataclass(frozen=True)
class KStarReport:
    psi: float  # ‖j*ψ_G − 1‖
    maurer_cartan: float  # ‖j*θ^L − j*θ^R‖
    relations: float  # e₀(ξ) ∼ e(β', ξ) and f₀(β') ∼ f(β', 0) under (dj, 0)

    @property
    def residual(self) -> float:
        return max(self.psi, self.maurer_cartan, self.relations)


def _kstar_relations(g: LieAlgebraData, k: int, beta: np.ndarray, gp: GroupPoint) -> float:
    fm = fiber_model(gp)
    dj = np.vstack([np.eye(k), np.zeros((k, k))])
    m = LinearDiracMorphism(dj, np.zeros((k, k)))
    base_c = g.c[k:, k:, k:]  # structure constants of 𝔨
    out = 0.0
    for xi in np.eye(k):
        # A(ξ) at β: the covector x ↦ β([ξ, x]); the 1-form ⟨dβ, ξ⟩ is constant ξ
        vec = np.einsum("i,ilm,m->l", xi, base_c, beta)
        e0 = np.concatenate([vec, xi])
        for beta2 in np.eye(k):
            w = np.concatenate([beta2, xi])
            out = max(out, relation_residual(m, e0, fm.e(w)))
    for beta2 in np.eye(k):
        f0 = np.concatenate([beta2, np.zeros(k)])
        out = max(out, relation_residual(m, f0, fm.f(np.concatenate([beta2, np.zeros(k)]))))
    return out


def kstar_embedding_check(
    k_name: str = "su2", samples: int = 20, rng: np.random.Generator | None = None
) -> KStarReport:
    """j*ψ_G = 1, j*θ^L = j*θ^R and the section relations on 𝔨* ⊂ 𝔨*⋊K."""
    rng = _default_rng(rng)
    group = group_descriptor(f"kstar_semidirect({k_name})")
    g = group.algebra
    k = g.dim // 2
    dj = np.vstack([np.eye(k), np.zeros((k, k))])
    psi = mc = rel = 0.0
    for i in range(samples):
        beta = np.zeros(k) if i == 0 else rng.normal(size=k)
        gp = group.point(np.concatenate([beta, np.zeros(k)]))
        pulled = pullback(dj, psi_G(gp))
        psi = max(psi, float(np.abs((pulled - Multivector.scalar(k)).coeffs).max()))
        mc = max(mc, float(np.abs((adjoint(gp) - np.eye(g.dim)) @ dj).max()))
        rel = max(rel, _kstar_relations(g, k, beta, gp))
    return KStarReport(psi, mc, rel)
