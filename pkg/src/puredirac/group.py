"""Pointwise models of the Cartan-Dirac geometry of matrix Lie groups.

Everything is left-trivialized: tangent vectors at g are elements of 𝔤
(ξ ↔ ξ^L), cotangent vectors are covectors in the dual basis θ^i of the
left Maurer-Cartan form, and forms are multivectors over dim 𝔤 in the
coframe θ^i. A right-invariant vector field ξ^R has value Ad_{g⁻¹}ξ.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .algebra import Multivector, _generator_matrices, exterior_power, wedge
from .errors import DomainError, UsageError
from .lie import (
    LieAlgebraData,
    algebroid_schouten,
    builtin_algebra,
    cartan_three_tensor,
    f_of_ad,
    gauss_subalgebra,
    r_matrix,
)
from .linear import (
    LagrangianSubspace,
    LinearDiracMorphism,
    backward_image,
    is_strong_dirac_morphism,
    null_space,
    splitting_bivector,
    split_gram,
    two_form,
    two_form_matrix,
    wedge_matrix_of,
)

MEMBER_TOL = 1e-10


# ---------------------------------------------------------------------------
# descriptors and points


@dataclass(frozen=True, eq=False)
class GroupDescriptor:
    """Matrix group with Lie algebra ``algebra`` (basis matrices ``algebra.matrices``).

    ``component_reps`` lists one matrix per non-identity component and
    ``component_lifts`` the corresponding Pin lifts in Cl(𝔤).
    """

    name: str
    algebra: LieAlgebraData
    kind: str
    component_reps: tuple[np.ndarray, ...] = ()
    component_lifts: tuple[Multivector, ...] = ()

    @property
    def dim(self) -> int:
        return self.algebra.dim

    @property
    def rep_dim(self) -> int:
        return self.algebra.matrices[0].shape[0]

    @property
    def is_complex(self) -> bool:
        return self.algebra.scalar_kind == "complex"

    @functools.cached_property
    def _coord_map(self) -> np.ndarray:
        flat = np.column_stack([m.ravel() for m in self.algebra.matrices])
        return np.linalg.pinv(flat)

    def coords(self, x: np.ndarray) -> np.ndarray:
        """Coordinates of a matrix in the algebra basis."""
        c = self._coord_map @ np.asarray(x).ravel()
        flat = np.column_stack([m.ravel() for m in self.algebra.matrices])
        if np.abs(flat @ c - np.asarray(x).ravel()).max(initial=0) > 1e-8 * max(1.0, np.abs(x).max()):
            raise DomainError("matrix does not lie in the Lie algebra")
        return c if self.is_complex else np.real_if_close(c, tol=1e6).real

    def matrix_of(self, xi: np.ndarray) -> np.ndarray:
        return sum(x * m for x, m in zip(xi, self.algebra.matrices))

    def member_residual(self, m: np.ndarray) -> float:
        m = np.asarray(m)
        eye = np.eye(m.shape[0])
        kind = self.kind
        if kind == "unitary":
            return max(np.abs(m @ m.conj().T - eye).max(), abs(np.linalg.det(m) - 1))
        if kind == "special-orthogonal":
            return max(np.abs(m.imag).max(initial=0), np.abs(m @ m.T - eye).max(), abs(np.linalg.det(m) - 1))
        if kind == "orthogonal":
            return max(np.abs(m.imag).max(initial=0), np.abs(m @ m.T - eye).max())
        if kind == "special-real":
            return max(np.abs(m.imag).max(initial=0), abs(np.linalg.det(m) - 1))
        if kind == "special":
            return abs(np.linalg.det(m) - 1)
        if kind == "diagonal":
            off = m - np.diag(np.diag(m))
            return max(np.abs(off).max(), np.abs(m.imag).max(initial=0), float(np.any(np.diag(m).real <= 0)))
        if kind == "semidirect":
            d = m.shape[0] // 2
            k = m[:d, :d]
            res = max(np.abs(m[:d, d:]).max(), np.abs(m[d:, d:] - k).max())
            return max(res, np.abs(k @ k.conj().T - np.eye(d)).max(), abs(np.linalg.det(k) - 1))
        raise UsageError(f"unknown group kind {kind!r}")

    def component_of(self, m: np.ndarray) -> int:
        if not self.component_reps:
            return 0
        if self.kind == "orthogonal":
            return 0 if np.linalg.det(m).real > 0 else 1
        raise UsageError("component detection not available")

    def exp(self, xi: np.ndarray) -> np.ndarray:
        return scipy.linalg.expm(self.matrix_of(xi))

    def point(self, xi: np.ndarray | None = None, component: int = 0) -> "GroupPoint":
        xi = np.zeros(self.dim) if xi is None else np.asarray(xi)
        if not self.is_complex:
            xi = np.real(xi).astype(float)
        m = self.exp(xi)
        if component:
            m = self.component_reps[component - 1] @ m
        return GroupPoint(self, m, xi, component)

    def identity(self) -> "GroupPoint":
        return self.point()

    def from_matrix(self, m: np.ndarray) -> "GroupPoint":
        m = np.asarray(m, dtype=np.result_type(self.algebra.matrices[0], float))
        comp = self.component_of(m)
        base = m if comp == 0 else np.linalg.solve(self.component_reps[comp - 1], m)
        log = scipy.linalg.logm(base)
        xi = self.coords(log)
        gp = GroupPoint(self, m, xi, comp)
        if np.abs(gp.matrix - self.point(xi, comp).matrix).max() > 1e-8:
            raise DomainError("matrix logarithm did not reproduce the point")
        return gp

    def random_point(self, rng: np.random.Generator, max_norm: float = 2.0, component: int | None = None) -> "GroupPoint":
        xi = rng.normal(size=self.dim)
        if self.is_complex:
            xi = xi + 1j * rng.normal(size=self.dim)
        xi = xi * (rng.uniform(0, max_norm) / max(np.linalg.norm(xi), 1e-300))
        if component is None:
            component = int(rng.integers(0, len(self.component_reps) + 1)) if self.component_reps else 0
        return self.point(xi, component)


@dataclass(frozen=True, eq=False)
class GroupPoint:
    """A group element m = c·exp(ξ) with c the representative of its component."""

    group: GroupDescriptor
    matrix: np.ndarray
    log: np.ndarray | None
    component: int = 0

    def __post_init__(self) -> None:
        res = self.group.member_residual(self.matrix)
        if res > MEMBER_TOL * max(1.0, np.abs(self.matrix).max() ** self.matrix.shape[0]):
            raise DomainError(f"matrix is not in {self.group.name} (residual {res:.2e})")

    @property
    def dim(self) -> int:
        return self.group.dim

    def inverse_matrix(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)

    def multiply(self, other: "GroupPoint") -> "GroupPoint":
        """Product as a GroupPoint; no logarithm is attached."""
        comp = self.group.component_of(self.matrix @ other.matrix)
        return GroupPoint(self.group, self.matrix @ other.matrix, None, comp)

    @property
    def parity(self) -> int:
        """|g| = 1 when det(Ad_g) = −1."""
        return int(np.real(np.linalg.det(adjoint(self))) < 0)


def group_descriptor(name: str) -> GroupDescriptor:
    key = name.strip().lower().replace(" ", "")
    aliases = {"su(2)": "su2", "so(3)": "so3", "sl(2,r)": "sl2r", "sl(2,c)": "sl2c", "sl(3,c)": "sl3c", "o(2)": "o2"}
    key = aliases.get(key, key)
    alg = builtin_algebra(key)
    kinds = {
        "su2": "unitary",
        "so3": "special-orthogonal",
        "sl2r": "special-real",
        "sl2c": "special",
        "sl3c": "special",
        "o2": "orthogonal",
    }
    if alg.name in kinds:
        kind = kinds[alg.name]
    elif alg.name.startswith("abelian"):
        kind = "diagonal"
    elif alg.name.startswith("kstar"):
        kind = "semidirect"
    else:  # pragma: no cover - builtin_algebra rejects other names
        raise UsageError(f"no group for {name!r}")
    if alg.name == "o2":
        lift = Multivector.vector([1.0])  # e² = ½B(e, e) = 1
        return GroupDescriptor("o2", alg, kind, alg.component_matrices, (lift,))
    return GroupDescriptor(alg.name, alg, kind)


GROUP_NAMES = ("su2", "so3", "sl2r", "sl2c", "sl3c", "o2", "abelian(2)", "kstar_semidirect(su2)")


# ---------------------------------------------------------------------------
# adjoint action and the sections s, e, f


def adjoint(gp: GroupPoint) -> np.ndarray:
    """Ad_g on the algebra basis: column j holds the coordinates of g X_j g⁻¹."""
    return _adjoint_of(gp.group, gp.matrix)


def adjoint_inv(gp: GroupPoint) -> np.ndarray:
    return _adjoint_of(gp.group, np.linalg.inv(gp.matrix))


def _adjoint_of(desc: GroupDescriptor, m: np.ndarray) -> np.ndarray:
    minv = np.linalg.inv(m)
    cols = [desc.coords(m @ x @ minv) for x in desc.algebra.matrices]
    return np.column_stack(cols)


@dataclass(frozen=True, eq=False)
class FiberModel:
    """𝕋_gG ≅ 𝔤 ⊕ 𝔤* at a point, with the isometry s: 𝔡 → 𝕋_gG."""

    point: GroupPoint
    ad: np.ndarray
    ad_inv: np.ndarray

    @property
    def algebra(self) -> LieAlgebraData:
        return self.point.group.algebra

    def s(self, xi: np.ndarray, xi2: np.ndarray) -> np.ndarray:
        """s(ξ, ξ') = (ξ − Ad_{g⁻¹}ξ') ⊕ B♭((ξ + Ad_{g⁻¹}ξ')/2)."""
        b = self.algebra.gram
        return np.concatenate([xi - self.ad_inv @ xi2, b @ (xi + self.ad_inv @ xi2) / 2])

    def s_matrix(self) -> np.ndarray:
        """s as a 2n × 2n matrix acting on 𝔡 = 𝔤 ⊕ 𝔤̄."""
        n = self.algebra.dim
        b = self.algebra.gram
        top = np.hstack([np.eye(n), -self.ad_inv])
        bottom = np.hstack([b / 2, b @ self.ad_inv / 2])
        return np.vstack([top, bottom])

    def e(self, xi: np.ndarray) -> np.ndarray:
        return self.s(xi, xi)

    def f(self, xi: np.ndarray) -> np.ndarray:
        return self.s(xi / 2, -xi / 2)

    def s_left(self, xi: np.ndarray) -> np.ndarray:
        """s^L(ξ) = s(ξ, 0) = ξ^L ⊕ ½B(θ^L, ξ)."""
        return self.s(xi, np.zeros_like(xi))

    def s_right(self, xi: np.ndarray) -> np.ndarray:
        """s^R(ξ) = s(0, ξ) = −ξ^R ⊕ ½B(θ^R, ξ)."""
        return self.s(np.zeros_like(xi), xi)

    def cartan_dirac(self) -> LagrangianSubspace:
        eye = np.eye(self.algebra.dim)
        return LagrangianSubspace(np.column_stack([self.e(v) for v in eye]))

    def complement(self) -> LagrangianSubspace:
        eye = np.eye(self.algebra.dim)
        return LagrangianSubspace(np.column_stack([self.f(v) for v in eye]))

    def subspace_of(self, s_basis: np.ndarray) -> LagrangianSubspace:
        """E^𝔰|_g = s(𝔰)."""
        return LagrangianSubspace(self.s_matrix() @ s_basis)


def fiber_model(gp: GroupPoint) -> FiberModel:
    return FiberModel(gp, adjoint(gp), adjoint_inv(gp))


def cartan_dirac_fibers(gp: GroupPoint, s_basis: np.ndarray | None = None):
    """(E_G, F_G) at g, plus E^𝔰 when a Lagrangian 𝔰 ⊂ 𝔡 is supplied."""
    fm = fiber_model(gp)
    out = (fm.cartan_dirac(), fm.complement())
    if s_basis is not None:
        return out + (fm.subspace_of(s_basis),)
    return out


def action_vector(gp: GroupPoint, zeta: np.ndarray) -> np.ndarray:
    """Generating vector of ζ = (ξ, ξ') ∈ 𝔡: ξ − Ad_{g⁻¹}ξ' (left frame)."""
    n = gp.dim
    return zeta[:n] - adjoint_inv(gp) @ zeta[n:]


def conjugation_vector(gp: GroupPoint, xi: np.ndarray) -> np.ndarray:
    """A_ad(ξ) = ξ − Ad_{g⁻¹}ξ."""
    return xi - adjoint_inv(gp) @ xi


# ---------------------------------------------------------------------------
# forms in the left coframe


def eta_tensor(g: LieAlgebraData) -> Multivector:
    """η = (1/12)B(θ^L, [θ^L, θ^L]) with η(ξ1, ξ2, ξ3) = ½B(ξ1, [ξ2, ξ3])."""
    n = g.dim
    low = np.einsum("jkl,li->ijk", g.c, g.gram)
    coeffs = np.zeros(1 << n)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                coeffs[(1 << i) | (1 << j) | (1 << k)] = 0.5 * low[i, j, k]
    return Multivector(n, coeffs)


def evaluate_form(form: Multivector, vectors: Sequence[np.ndarray]) -> complex:
    """α(v_1, …, v_k) for the degree-k part of α (determinant convention)."""
    k = len(vectors)
    vs = np.column_stack(vectors) if k else np.zeros((form.dim, 0))
    total = 0.0
    for mask in np.flatnonzero(form.coeffs):
        idx = [i for i in range(form.dim) if int(mask) >> i & 1]
        if len(idx) != k:
            continue
        total = total + form.coeffs[mask] * (np.linalg.det(vs[idx, :]) if k else 1.0)
    return total


def ce_differential(g: LieAlgebraData) -> sp.csr_matrix:
    """Derivation δ on ∧𝔤* with δθ^k = −Σ_{i<j} c_ij^k θ^i∧θ^j (Maurer-Cartan)."""
    memo = g.__dict__.setdefault("_ce_memo", {})
    if "delta" in memo:
        return memo["delta"]
    n = g.dim
    eps, iota = _generator_matrices(n)
    size = 1 << n
    out = sp.csr_matrix((size, size))
    for k in range(n):
        beta = sp.csr_matrix((size, size))
        for i in range(n):
            for j in range(i + 1, n):
                if g.c[i, j, k] != 0:
                    beta = beta - g.c[i, j, k] * (eps[i] @ eps[j])
        out = out + beta @ iota[k]
    memo["delta"] = out.tocsr()
    return memo["delta"]


def left_exterior_derivative(g: LieAlgebraData, value: Multivector, derivs: Sequence[Multivector]) -> Multivector:
    """dα at g from α|_g and its derivatives ∂_a α along e_a^L: Σ θ^a∧∂_aα + δα."""
    n = g.dim
    out = Multivector(n, ce_differential(g) @ value.coeffs)
    eye = np.eye(n)
    for a in range(n):
        out = out + wedge(Multivector.vector(eye[a]), derivs[a])
    return out


# ---------------------------------------------------------------------------
# conjugacy classes and orbit forms


def conjugacy_form_matrix(gp: GroupPoint) -> np.ndarray:
    """W with ω_𝒞(A_ad ξ1, A_ad ξ2) = ξ1ᵀ W ξ2 = −½B((Ad_g − Ad_{g⁻¹})ξ1, ξ2)."""
    b = gp.group.algebra.gram
    return -0.5 * (adjoint(gp) - adjoint_inv(gp)).T @ b


def conjugacy_form(gp: GroupPoint, xi1: np.ndarray, xi2: np.ndarray) -> complex:
    return xi1 @ conjugacy_form_matrix(gp) @ xi2


def conjugacy_kernel(gp: GroupPoint) -> np.ndarray:
    """Tangent vectors A_ad(ξ) with Ad_gξ = −ξ: the kernel of ω_𝒞."""
    ad = adjoint(gp)
    k = null_space(ad + np.eye(gp.dim))
    return np.column_stack([conjugation_vector(gp, k[:, i]) for i in range(k.shape[1])]) if k.size else k


def orbit_form(gp: GroupPoint, zeta1: np.ndarray, zeta2: np.ndarray) -> complex:
    """ω_𝒪(A(ζ1), A(ζ2)) = ½(B(Ad_gξ2, ξ1') − B(ξ2', Ad_gξ1)) for ζ_i = (ξ_i, ξ_i') in a Lagrangian 𝔰."""
    n = gp.dim
    b = gp.group.algebra.gram
    ad = adjoint(gp)
    x1, y1, x2, y2 = zeta1[:n], zeta1[n:], zeta2[:n], zeta2[n:]
    return 0.5 * ((ad @ x2) @ b @ y1 - y2 @ b @ (ad @ x1))


def orbit_form_middle(gp: GroupPoint, zeta1: np.ndarray, zeta2: np.ndarray) -> complex:
    """½B(ξ2 − Ad_{g⁻¹}ξ2', ξ1 + Ad_{g⁻¹}ξ1') (agrees with orbit_form on Lagrangian 𝔰)."""
    n = gp.dim
    b = gp.group.algebra.gram
    ai = adjoint_inv(gp)
    x1, y1, x2, y2 = zeta1[:n], zeta1[n:], zeta2[:n], zeta2[n:]
    return 0.5 * (x2 - ai @ y2) @ b @ (x1 + ai @ y1)


# ---------------------------------------------------------------------------
# the bivector π_G and its Schouten identity


def _pi_matrix(g: LieAlgebraData, ad_inv: np.ndarray) -> np.ndarray:
    bi = g.gram_inv
    return 0.5 * (bi @ ad_inv.T - ad_inv @ bi)


def pi_G(gp: GroupPoint) -> np.ndarray:
    """π_G = ½Σ v^i∧Ad_{g⁻¹}v_i in the left frame (matrix form)."""
    return _pi_matrix(gp.group.algebra, adjoint_inv(gp))


def pi_G_derivatives(gp: GroupPoint) -> list[np.ndarray]:
    """∂_{e_a^L}π_G using ∂_{ξ^L}Ad_{g⁻¹} = −ad_ξ∘Ad_{g⁻¹}."""
    g = gp.group.algebra
    ai = adjoint_inv(gp)
    eye = np.eye(g.dim)
    return [_pi_matrix(g, -g.ad(eye[a]) @ ai) for a in range(g.dim)]


def conjugation_trivector(gp: GroupPoint) -> Multivector:
    """A_ad(Ξ) = ∧³(1 − Ad_{g⁻¹})Ξ."""
    g = gp.group.algebra
    act = np.eye(g.dim) - adjoint_inv(gp)
    return Multivector(g.dim, exterior_power(act) @ cartan_three_tensor(g).coeffs)


def schouten_check(gp: GroupPoint) -> float:
    """‖½[π_G, π_G] − A_ad(Ξ)‖ with exact left-frame derivatives."""
    g = gp.group.algebra
    pi = two_form(pi_G(gp))
    dpi = [two_form(m) for m in pi_G_derivatives(gp)]
    half = 0.5 * algebroid_schouten(g, pi, pi, dpi, dpi)
    return float(np.abs((half - conjugation_trivector(gp)).coeffs).max(initial=0))


# ---------------------------------------------------------------------------
# twisted Courant bracket of constant sections


def courant_bracket_of_sections(gp: GroupPoint, zeta1: np.ndarray, zeta2: np.ndarray) -> np.ndarray:
    """[[s(ζ1), s(ζ2)]]_η at g from exact left-frame derivatives.

    [[X⊕α, Y⊕β]] = [X, Y] ⊕ (L_Xβ − ι_Y dα − ι_Yι_Xη).
    """
    g = gp.group.algebra
    n = g.dim
    b = g.gram
    ai = adjoint_inv(gp)
    eye = np.eye(n)

    def section(z):
        x, y = z[:n], z[n:]
        val = np.concatenate([x - ai @ y, b @ (x + ai @ y) / 2])
        ders = []
        for a in range(n):
            dy = -g.ad(eye[a]) @ ai @ y  # ∂_a(Ad_{g⁻¹}ξ')
            ders.append(np.concatenate([-dy, b @ dy / 2]))
        return val, ders

    (w1, d1), (w2, d2) = section(zeta1), section(zeta2)
    x, alpha = w1[:n], w1[n:]
    y, beta = w2[:n], w2[n:]
    vec_bracket = g.bracket(x, y) + sum(x[a] * d2[a][:n] for a in range(n)) - sum(y[a] * d1[a][:n] for a in range(n))

    def d_one_form(coef, ders):
        # (dβ)(e_a, e_b) = ∂_aβ_b − ∂_bβ_a − β([e_a, e_b])
        m = np.array([[ders[a][n + bb] - ders[bb][n + a] for bb in range(n)] for a in range(n)])
        return m - np.einsum("abk,k->ab", g.c, coef)

    dbeta = d_one_form(beta, d2)
    dalpha = d_one_form(alpha, d1)
    # L_Xβ = ι_X dβ + d(β(X))
    grad = np.array([d2[a][n:] @ x + beta @ d1[a][:n] for a in range(n)])
    lie_deriv = x @ dbeta + grad
    eta = eta_tensor(g)
    eta_xy = np.array([evaluate_form(eta, [x, y, eye[c]]) for c in range(n)])
    form = lie_deriv - y @ dalpha - eta_xy
    return np.concatenate([vec_bracket, form])


# ---------------------------------------------------------------------------
# multiplication morphism


@dataclass(frozen=True, eq=False)
class MultFiber:
    a: GroupPoint
    b: GroupPoint
    morphism: LinearDiracMorphism
    product: GroupPoint

    def varsigma(self) -> np.ndarray:
        return self.morphism.omega


def mult_morphism_fiber(a: GroupPoint, b: GroupPoint) -> MultFiber:
    """(dMult, ς) at (a, b): ξ at a ↦ Ad_{b⁻¹}ξ, ζ at b ↦ ζ.

    ς((ξ1, ζ1), (ξ2, ζ2)) = −½(B(ξ1, Ad_bζ2) − B(ξ2, Ad_bζ1)).
    """
    if a.group is not b.group and a.group.name != b.group.name:
        raise UsageError("points belong to different groups")
    g = a.group.algebra
    n = g.dim
    ad_b = adjoint(b)
    phi = np.hstack([adjoint_inv(b), np.eye(n)])
    cross = -0.5 * g.gram @ ad_b
    omega = np.block([[np.zeros((n, n)), cross], [-cross.T, np.zeros((n, n))]])
    return MultFiber(a, b, LinearDiracMorphism(phi, omega), a.multiply(b))


def _product_fiber(fm1: FiberModel, fm2: FiberModel, w1: np.ndarray, w2: np.ndarray) -> np.ndarray:
    n = fm1.algebra.dim
    return np.concatenate([w1[:n], w2[:n], w1[n:], w2[n:]])


def mult_relation_residuals(mf: MultFiber) -> dict[str, float]:
    """Residuals of s^{R,1}(ξ) ∼ s^R(ξ), s^{L,2}(ξ) ∼ s^L(ξ), s^{L,1}(ξ)+s^{R,2}(ξ) ∼ 0 and e¹+e² ∼ e."""
    fa, fb, fab = fiber_model(mf.a), fiber_model(mf.b), fiber_model(mf.product)
    n = mf.a.dim
    zero = np.zeros(2 * n)
    out = {"right": 0.0, "left": 0.0, "cross": 0.0, "cartan": 0.0}
    for xi in np.eye(n):
        pairs = {
            "right": (_product_fiber(fa, fb, fa.s_right(xi), zero), fab.s_right(xi)),
            "left": (_product_fiber(fa, fb, zero, fb.s_left(xi)), fab.s_left(xi)),
            "cross": (_product_fiber(fa, fb, fa.s_left(xi), fb.s_right(xi)), np.zeros(2 * n)),
            "cartan": (_product_fiber(fa, fb, fa.e(xi), fb.e(xi)), fab.e(xi)),
        }
        for key, (w, w2) in pairs.items():
            out[key] = max(out[key], relation_residual(mf.morphism, w, w2))
    return out


def relation_residual(m: LinearDiracMorphism, w: np.ndarray, w2: np.ndarray) -> float:
    n, k = m.source_dim, m.target_dim
    r1 = m.phi @ w[:n] - w2[:k]
    r2 = m.phi.T @ w2[k:] - w[n:] - m.omega.T @ w[:n]
    return float(max(np.abs(r1).max(initial=0), np.abs(r2).max(initial=0)))


def gamma_bivector(g: LieAlgebraData) -> np.ndarray:
    """γ = ½Σ (v_i)¹∧(v^i)² as a 2n × 2n matrix on 𝔤 ⊕ 𝔤."""
    n = g.dim
    out = np.zeros((2 * n, 2 * n))
    dual = g.dual_basis()
    eye = np.eye(n)
    for i in range(n):
        out += 0.5 * wedge_matrix_of(np.concatenate([eye[i], np.zeros(n)]), np.concatenate([np.zeros(n), dual[:, i]]))
    return out


def _product_subspace(l1: LagrangianSubspace, l2: LagrangianSubspace) -> LagrangianSubspace:
    n = l1.n
    b1, b2 = l1.basis, l2.basis
    z = np.zeros((n, n))
    basis = np.vstack([np.hstack([b1[:n], z]), np.hstack([z, b2[:n]]), np.hstack([b1[n:], z]), np.hstack([z, b2[n:]])])
    return LagrangianSubspace(basis)


def mult_complement_check(mf: MultFiber) -> float:
    """Span distance between F_G∘(Mult, ς) and the gauge of F¹⊕F² by e(γ)."""
    fa, fb, fab = fiber_model(mf.a), fiber_model(mf.b), fiber_model(mf.product)
    g = mf.a.group.algebra
    n = g.dim
    pulled = backward_image(mf.morphism, fab.complement()).lagrangian
    base = _product_subspace(fa.complement(), fb.complement())
    # e(γ) = ½Σ e¹(v_i)∧e²(v^i) as a bivector on 𝕋(G×G)
    dual = g.dual_basis()
    eps = np.zeros((4 * n, 4 * n), dtype=np.result_type(fa.ad_inv, fb.ad_inv, float))
    zero = np.zeros(2 * n)
    for i in range(n):
        e1 = _product_fiber(fa, fb, fa.e(np.eye(n)[i]), zero)
        e2 = _product_fiber(fa, fb, zero, fb.e(dual[:, i]))
        eps += 0.5 * wedge_matrix_of(e1, e2)
    gram = split_gram(2 * n)
    moved = scipy.linalg.expm(-eps @ gram) @ base.basis
    return _span_distance(pulled.basis, moved)


def mult_is_strong(mf: MultFiber) -> bool:
    """Whether (dMult, ς) maps E_G¹ ⊕ E_G² onto E_G strongly at (a, b)."""
    fa, fb, fab = fiber_model(mf.a), fiber_model(mf.b), fiber_model(mf.product)
    src = _product_subspace(fa.cartan_dirac(), fb.cartan_dirac())
    return is_strong_dirac_morphism(mf.morphism, src, fab.cartan_dirac()).is_strong


def varsigma_coboundary(a: GroupPoint, b: GroupPoint, c: GroupPoint, u: np.ndarray, w: np.ndarray) -> complex:
    """(∂ς)(u, w) at (a, b, c) for tangent vectors u, w ∈ 𝔤³ in the left frame.

    The face maps are (b, c), (ab, c), (a, bc), (a, b).
    """
    n = a.dim
    ab, bc = a.multiply(b), b.multiply(c)
    adb, adc = adjoint_inv(b), adjoint_inv(c)

    def faces(v):
        x, y, z = v[:n], v[n : 2 * n], v[2 * n :]
        return (
            np.concatenate([y, z]),
            np.concatenate([adb @ x + y, z]),
            np.concatenate([x, adc @ y + z]),
            np.concatenate([x, y]),
        )

    points = ((b, c), (ab, c), (a, bc), (a, b))
    total = 0.0
    for k, ((p, q), fu, fw) in enumerate(zip(points, faces(u), faces(w))):
        om = mult_morphism_fiber(p, q).morphism.omega
        total = total + (-1) ** k * (fu @ om @ fw)
    return total


def _span_distance(a: np.ndarray, b: np.ndarray) -> float:
    qa, _ = np.linalg.qr(a)
    qb, _ = np.linalg.qr(b)
    return float(np.abs(qb - qa @ (qa.conj().T @ qb)).max())


# ---------------------------------------------------------------------------
# exponential map


def _phi_function(ad: np.ndarray, kind: str) -> np.ndarray:
    """Entire functions of ad via an augmented exponential (no division by ad)."""
    n = ad.shape[0]
    eye = np.eye(n)
    if kind == "UL":  # (1 − e^{−z})/z
        big = np.block([[-ad, eye], [np.zeros((n, n)), np.zeros((n, n))]])
        return scipy.linalg.expm(big)[:n, n:]
    if kind == "UR":  # (e^z − 1)/z
        big = np.block([[ad, eye], [np.zeros((n, n)), np.zeros((n, n))]])
        return scipy.linalg.expm(big)[:n, n:]
    if kind == "T":  # (sinh z − z)/z² = Σ z^{2k+1}/(2k+3)!
        # odd part of (e^z − 1 − z)/z²
        return 0.5 * (_phi2(ad) - _phi2(-ad))
    raise UsageError(kind)


def _phi2(a: np.ndarray) -> np.ndarray:
    """(e^z − 1 − z)/z² through the 3-block augmented exponential."""
    n = a.shape[0]
    z = np.zeros((n, n))
    eye = np.eye(n)
    big = np.block([[a, eye, z], [z, z, eye], [z, z, z]])
    return scipy.linalg.expm(big)[:n, 2 * n :]


@dataclass(frozen=True, eq=False)
class ExpFiber:
    nu: np.ndarray
    d_exp: np.ndarray  # U^L(ν)
    T: np.ndarray
    varpi: np.ndarray  # matrix: ϖ(ξ, ζ) = ξᵀ varpi ζ = B(ζ, Tξ)
    J: complex
    J_sqrt: complex
    regular: bool

    def morphism(self) -> LinearDiracMorphism:
        return LinearDiracMorphism(self.d_exp, self.varpi)


def ray_is_regular(g: LieAlgebraData, nu: np.ndarray, tol: float = 1e-9) -> bool:
    """J(tν) ≠ 0 for t ∈ (0, 1]: no eigenvalue of ad_ν lies on iℝ outside the disc |z| < 2π."""
    lam = np.linalg.eigvals(g.ad(nu))
    on_axis = np.abs(lam.real) <= tol * np.maximum(1.0, np.abs(lam))
    return not np.any(on_axis & (np.abs(lam.imag) >= 2 * np.pi - tol))


def j_sqrt(g: LieAlgebraData, nu: np.ndarray, samples: int = 32) -> complex:
    """J^{1/2} continued along t ↦ tν from J^{1/2}(0) = 1, sampled at ``samples`` points."""
    if not ray_is_regular(g, nu):
        raise DomainError("J vanishes on the ray through ν (ad_ν has an eigenvalue in 2πiℤ∖0)")
    prev, before = 1.0 + 0j, 1.0 + 0j
    for t in np.linspace(0, 1, samples + 1)[1:]:
        root = np.sqrt(complex(np.linalg.det(_phi_function(g.ad(t * nu), "UL"))))
        guess = 2 * prev - before
        before, prev = prev, (root if abs(root - guess) <= abs(root + guess) else -root)
    return prev


def exp_morphism_fiber(g: LieAlgebraData, nu: np.ndarray) -> ExpFiber:
    nu = np.asarray(nu)
    ad = g.ad(nu)
    ul = _phi_function(ad, "UL")
    t = _phi_function(ad, "T")
    varpi = t.T @ g.gram
    j = complex(np.linalg.det(ul))
    regular = abs(j) > 1e-12 and ray_is_regular(g, nu)
    root = j_sqrt(g, nu) if regular else 0.0
    jj = j.real if abs(j.imag) < 1e-14 else j
    rr = root.real if abs(complex(root).imag) < 1e-14 else root
    return ExpFiber(nu, ul, t, varpi, jj, rr, regular)


def exp_relation_residuals(g: LieAlgebraData, nu: np.ndarray, gp: GroupPoint | None = None) -> dict[str, float]:
    """Residuals of e₀(ξ) ∼ e(ξ) and f₀(ξ) + e₀(Cξ) ∼ f(ξ) under (exp, ϖ) at ν."""
    ef = exp_morphism_fiber(g, nu)
    m = ef.morphism()
    n = g.dim
    b = g.gram
    if gp is None:
        raise UsageError("the group point exp(ν) is required")
    fm = fiber_model(gp)
    c = f_of_ad(g.ad(nu))

    def e0(xi):
        return np.concatenate([g.bracket(nu, xi), b @ xi])

    def f0(xi):
        return np.concatenate([xi, np.zeros(n)])

    out = {"erel": 0.0, "frel": 0.0}
    for xi in np.eye(n):
        out["erel"] = max(out["erel"], relation_residual(m, e0(xi), fm.e(xi)))
        out["frel"] = max(out["frel"], relation_residual(m, f0(xi) + e0(c @ xi), fm.f(xi)))
    return out


# ---------------------------------------------------------------------------
# Gauss decomposition (SL(n, ℂ))


@dataclass(frozen=True)
class GaussFactors:
    lower: np.ndarray
    diagonal: np.ndarray
    upper: np.ndarray

    def product(self) -> np.ndarray:
        return self.lower @ self.diagonal @ self.upper


def leading_minors(m: np.ndarray) -> np.ndarray:
    return np.array([np.linalg.det(m[:k, :k]) for k in range(1, m.shape[0] + 1)])


def gauss_decompose_matrix(m: np.ndarray, tol: float = 1e-12) -> GaussFactors:
    """m = g₋ g₀ g₊ (unit lower, diagonal, unit upper) without pivoting."""
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    minors = leading_minors(m)
    scale = max(1.0, np.abs(m).max()) ** n
    for k, d in enumerate(minors[:-1], start=1):
        if abs(d) <= tol * scale:
            raise DomainError(f"leading principal minor of order {k} vanishes: not in the big cell")
    lower = np.eye(n, dtype=complex)
    upper = np.eye(n, dtype=complex)
    work = m.copy()
    diag = np.zeros(n, dtype=complex)
    for k in range(n):
        diag[k] = work[k, k]
        lower[k + 1 :, k] = work[k + 1 :, k] / diag[k]
        upper[k, k + 1 :] = work[k, k + 1 :] / diag[k]
        work[k + 1 :, k + 1 :] -= np.outer(work[k + 1 :, k], work[k, k + 1 :]) / diag[k]
    return GaussFactors(lower, np.diag(diag), upper)


def gauss_decompose(gp: GroupPoint) -> GaussFactors:
    if gp.group.kind not in ("special", "special-real"):
        raise UsageError("Gauss decomposition requires an SL(n) group")
    return gauss_decompose_matrix(gp.matrix)


def g0_rho(factors: GaussFactors) -> complex:
    """g₀^ρ = Π_k (d_1⋯d_k): ρ is the sum of the fundamental weights."""
    d = np.diag(factors.diagonal)
    return complex(np.prod(np.cumprod(d)[:-1]))


def _split_triangular(desc: GroupDescriptor, y: np.ndarray):
    low = np.tril(y, -1)
    up = np.triu(y, 1)
    return desc.coords(low), desc.coords(up)


def gauss_orbit_form(gp: GroupPoint) -> np.ndarray:
    """Matrix of ω_𝒪 = −½B(θ^L_−, Ad_{g₀}θ^R_+) in the left frame at g.

    For ξ ∈ T_gG, Y = Ad_{g₀g₊}ξ splits as θ^L_−(ξ) (strictly lower),
    g₀⁻¹ġ₀ (diagonal) and Ad_{g₀}θ^R_+(ξ) (strictly upper).
    """
    desc = gp.group
    g = desc.algebra
    fac = gauss_decompose(gp)
    conj = fac.diagonal @ fac.upper
    cinv = np.linalg.inv(conj)
    n = g.dim
    lows, ups = [], []
    for xi in np.eye(n):
        y = conj @ desc.matrix_of(xi) @ cinv
        lo, up = _split_triangular(desc, y)
        lows.append(lo)
        ups.append(up)
    lows, ups = np.array(lows), np.array(ups)
    b = g.gram
    w = -0.5 * (lows @ b @ ups.T - ups @ b @ lows.T)
    return w


def sts_bivector(gp: GroupPoint) -> np.ndarray:
    """π̂_G = π_G + ½A_ad(𝔯) (matrix, left frame).

    The factor ½ matches the normalization 𝔯 = Σ_{α≻0} e_{−α}∧e_α used by
    r_matrix; with it π̂_G is the bivector of the splitting (E_G, E^𝔰).
    """
    r = two_form_matrix(r_matrix(_require_cartan(gp)))
    return pi_G(gp) + 0.5 * conjugation_bivector(gp, r)


def sts_bivector_expanded(gp: GroupPoint) -> np.ndarray:
    """½Σ e_i^L∧(e^i)^R − ½Σ_{α≻0}(e_{−α}^L∧e_α^R + e_{−α}^R∧e_α^L) + ½𝔯^L + ½𝔯^R."""
    g = _require_cartan(gp)
    ai = adjoint_inv(gp)
    eye = np.eye(g.dim)
    dual = g.dual_basis()
    out = np.zeros((g.dim, g.dim), dtype=np.result_type(ai, float))
    for i in range(g.dim):
        out += 0.5 * wedge_matrix_of(eye[i], ai @ dual[:, i])
    for root in g.cartan.roots:
        out -= 0.5 * wedge_matrix_of(eye[root.minus], ai @ eye[root.plus])
        out -= 0.5 * wedge_matrix_of(ai @ eye[root.minus], eye[root.plus])
    r = two_form_matrix(r_matrix(g))
    out += 0.5 * r + 0.5 * ai @ r @ ai.T
    return out


def sts_bivector_splitting(gp: GroupPoint) -> np.ndarray:
    """The splitting bivector of E_G|_g against the Gauss-Dirac fiber E^𝔰|_g."""
    fm = fiber_model(gp)
    pi, _ = splitting_bivector(fm.cartan_dirac(), fm.subspace_of(gauss_subalgebra(_require_cartan(gp))))
    return pi


def _require_cartan(gp: GroupPoint) -> LieAlgebraData:
    g = gp.group.algebra
    if g.cartan is None:
        raise UsageError(f"{g.name} has no Cartan-Weyl data")
    return g


def conjugation_bivector(gp: GroupPoint, r: np.ndarray) -> np.ndarray:
    """A_ad(r) = ∧²(1 − Ad_{g⁻¹}) r."""
    act = np.eye(gp.dim) - adjoint_inv(gp)
    return act @ r @ act.T


def gauss_dirac_fiber(gp: GroupPoint) -> LagrangianSubspace:
    """E^𝔰|_g for the Gauss subalgebra 𝔰."""
    return fiber_model(gp).subspace_of(gauss_subalgebra(gp.group.algebra))
