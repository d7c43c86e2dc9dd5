"""Linear Dirac geometry on 𝕍 = V ⊕ V*.

Vectors of 𝕍 are column vectors [v; α] of length 2n and the split pairing
is ⟨v⊕α, v'⊕α'⟩ = α(v') + α'(v). Forms on V are multivectors of dimension
n (bit i = e^i) and 𝕍 acts on them by ρ(v⊕α) = ι(v) + ε(α).

Matrix conventions: a 2-form ω has matrix Ω_ij = ω(e_i, e_j), so the
covector ι_vω is Ωᵀv. A bivector π has matrix Π with π(α, β) = αᵀΠβ,
so π♯(α) = ι_απ = Πᵀα.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from .algebra import (
    RANK_TOL,
    Multivector,
    contraction_matrix,
    exp_wedge,
    module_quantize,
    transpose,
    wedge,
    wedge_matrix,
)
from .errors import ConsistencyError, UsageError

ISOTROPY_TOL = 1e-10
COMPAT_TOL = 1e-9


# ---------------------------------------------------------------------------
# subspace helpers


def rank(m: np.ndarray, tol: float = RANK_TOL) -> int:
    m = np.asarray(m)
    if m.size == 0:
        return 0
    sv = np.linalg.svd(m, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def null_space(m: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of ker m."""
    m = np.asarray(m)
    cols = m.shape[1]
    if m.shape[0] == 0 or not np.any(m):
        return np.eye(cols, dtype=m.dtype if np.iscomplexobj(m) else float)
    _, sv, vh = np.linalg.svd(m)
    r = int(np.sum(sv > tol * sv[0])) if sv.size else 0
    return vh[r:].conj().T


def column_space(m: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the span of the columns of m."""
    m = np.asarray(m)
    if m.size == 0 or not np.any(m):
        return np.zeros((m.shape[0], 0))
    u, sv, _ = np.linalg.svd(m, full_matrices=False)
    r = int(np.sum(sv > tol * sv[0]))
    return u[:, :r]


def same_span(a: np.ndarray, b: np.ndarray, tol: float = RANK_TOL) -> bool:
    ra, rb = rank(a, tol), rank(b, tol)
    return ra == rb == rank(np.hstack([a, b]), tol)


def subspace_distance(a: np.ndarray, b: np.ndarray, tol: float = RANK_TOL) -> float:
    """Largest sine of a principal angle between two column spans (1 when ranks differ)."""
    qa, qb = column_space(a, tol), column_space(b, tol)
    if qa.shape[1] != qb.shape[1]:
        return 1.0
    if qa.shape[1] == 0:
        return 0.0
    return float(np.linalg.norm(qb - qa @ (qa.conj().T @ qb), 2))


def contains(big: np.ndarray, small: np.ndarray, tol: float = RANK_TOL) -> bool:
    return rank(np.hstack([big, small]), tol) == rank(big, tol)


def intersection_dim(a: np.ndarray, b: np.ndarray, tol: float = RANK_TOL) -> int:
    return rank(a, tol) + rank(b, tol) - rank(np.hstack([a, b]), tol)


def split_gram(n: int) -> np.ndarray:
    z, i = np.zeros((n, n)), np.eye(n)
    return np.block([[z, i], [i, z]])


def pair(w1: np.ndarray, w2: np.ndarray) -> complex:
    """The split pairing ⟨w1, w2⟩ on 𝕍."""
    n = w1.shape[0] // 2
    return w1[n:] @ w2[:n] + w2[n:] @ w1[:n]


# ---------------------------------------------------------------------------
# forms and bivectors as multivectors


def two_form(omega: np.ndarray) -> Multivector:
    """Σ_{i<j} Ω_ij e^i∧e^j."""
    omega = np.asarray(omega)
    n = omega.shape[0]
    c = np.zeros(1 << n, dtype=np.result_type(omega, float))
    for i, j in itertools.combinations(range(n), 2):
        c[(1 << i) | (1 << j)] = omega[i, j]
    return Multivector(n, c)


def two_form_matrix(x: Multivector) -> np.ndarray:
    n = x.dim
    out = np.zeros((n, n), dtype=x.coeffs.dtype)
    for i, j in itertools.combinations(range(n), 2):
        out[i, j] = x.coeffs[(1 << i) | (1 << j)]
        out[j, i] = -out[i, j]
    return out


def wedge_matrix_of(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix of the bivector (or 2-form) a∧b: abᵀ − baᵀ."""
    return np.outer(a, b) - np.outer(b, a)


def check_antisymmetric(m: np.ndarray, what: str, tol: float = 1e-12) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise UsageError(f"{what} must be a square matrix")
    if np.abs(m + m.T).max(initial=0) > tol * max(1.0, np.abs(m).max(initial=0)):
        raise UsageError(f"{what} must be antisymmetric")
    return m


def contraction_by_bivector(pi: np.ndarray) -> sp.csr_matrix:
    """ι(π) on ∧V* with ι(e_i∧e_j) = ι(e_i)ι(e_j)."""
    pi = np.asarray(pi)
    n = pi.shape[0]
    size = 1 << n
    out = sp.csr_matrix((size, size), dtype=np.result_type(pi, float))
    for i, j in itertools.combinations(range(n), 2):
        if pi[i, j] != 0:
            ei, ej = np.eye(n)[i], np.eye(n)[j]
            out = out + pi[i, j] * (contraction_matrix(n, ei) @ contraction_matrix(n, ej))
    return out.tocsr()


def exp_neg_contraction(pi: np.ndarray, phi: Multivector) -> Multivector:
    """e^{−ι(π)}φ."""
    op = contraction_by_bivector(pi)
    out = phi.coeffs.astype(np.result_type(phi.coeffs, op.dtype))
    term = out.copy()
    for k in range(1, phi.dim // 2 + 1):
        term = -(op @ term) / k
        out = out + term
    return Multivector(phi.dim, out)


# ---------------------------------------------------------------------------
# spinor module over Cl(𝕍)


def rho_matrix(w: np.ndarray) -> sp.csr_matrix:
    """ρ(v⊕α) = ι(v) + ε(α) on ∧V*."""
    w = np.asarray(w)
    n = w.shape[0] // 2
    return (contraction_matrix(n, w[:n]) + wedge_matrix(n, w[n:])).tocsr()


def rho(w: np.ndarray, phi: Multivector) -> Multivector:
    return Multivector(phi.dim, rho_matrix(w) @ phi.coeffs)


def rho_quantized(ambient_gram: np.ndarray, basis: np.ndarray, y: Multivector) -> sp.csr_matrix:
    """ρ(q(y)) for y ∈ ∧U, where U ⊂ 𝕍 has columns ``basis``.

    The generators are ρ(u_k) and the Clifford relation uses the restricted
    Gram matrix basisᵀ·G·basis.
    """
    basis = np.asarray(basis)
    gens = [rho_matrix(basis[:, k]) for k in range(basis.shape[1])]
    gram = basis.T @ ambient_gram @ basis
    return sp.csr_matrix(module_quantize(gram, gens, y))


def bivector_on_split(eps: np.ndarray) -> Multivector:
    """ε = ½ Σ E_ab w_a∧w_b ∈ ∧²𝕍 from its antisymmetric 2n×2n matrix."""
    return two_form(eps)


def gauge_map(eps: np.ndarray) -> np.ndarray:
    """A^ε = exp(ad_ε) on 𝕍 where ad_ε w = −ι(w)ε = E·G·w."""
    eps = np.asarray(eps)
    n = eps.shape[0] // 2
    gen = eps @ split_gram(n)
    return scipy.linalg.expm(gen)


def gauge_spinor(eps: np.ndarray, phi: Multivector) -> Multivector:
    """ρ(exp q(ε))φ, the spinor lift of A^ε."""
    eps = np.asarray(eps)
    n = eps.shape[0] // 2
    op = rho_quantized(split_gram(n), np.eye(2 * n), two_form(eps))
    return Multivector(phi.dim, scipy.sparse.linalg.expm_multiply(op.tocsc(), phi.coeffs.astype(complex)))


# ---------------------------------------------------------------------------
# Lagrangian subspaces


@dataclass(frozen=True, eq=False)
class LagrangianSubspace:
    """A maximal isotropic subspace of 𝕍 = V⊕V* (or of a given split space)."""

    basis: np.ndarray
    gram: np.ndarray | None = None

    def __post_init__(self) -> None:
        b = np.array(self.basis)
        if b.ndim != 2 or b.shape[0] != 2 * b.shape[1]:
            raise UsageError("a Lagrangian basis must be a 2n×n matrix")
        n = b.shape[1]
        g = split_gram(n) if self.gram is None else np.asarray(self.gram)
        if g.shape != (2 * n, 2 * n):
            raise UsageError("ambient gram has the wrong size")
        if rank(b) != n:
            raise UsageError("Lagrangian basis columns are dependent")
        scale = max(1.0, np.abs(b).max(initial=0) ** 2)
        if np.abs(b.T @ g @ b).max(initial=0) > ISOTROPY_TOL * scale:
            raise UsageError("subspace is not isotropic")
        b.flags.writeable = False
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "gram", g)

    @property
    def n(self) -> int:
        return self.basis.shape[1]

    def contains(self, w: np.ndarray) -> bool:
        w = np.asarray(w)
        w = w.reshape(-1, 1) if w.ndim == 1 else w
        return contains(self.basis, w)

    def equals(self, other: "LagrangianSubspace") -> bool:
        return same_span(self.basis, other.basis)

    def orthonormal(self) -> np.ndarray:
        return column_space(self.basis)

    def range_v(self) -> np.ndarray:
        """ran(E) = pr_V(E) as an orthonormal basis of V."""
        return column_space(self.basis[: self.n])

    def transverse_to(self, other: "LagrangianSubspace") -> bool:
        return rank(np.hstack([self.basis, other.basis])) == 2 * self.n

    def to_dict(self) -> dict:
        b = self.basis
        out = {"ambient_dim": int(b.shape[0]), "basis": [float(x) for x in b.real.ravel(order="F")]}
        if np.iscomplexobj(b):
            out["basis_im"] = [float(x) for x in b.imag.ravel(order="F")]
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "LagrangianSubspace":
        m = int(data["ambient_dim"])
        b = np.array(data["basis"], dtype=float).reshape((m, m // 2), order="F")
        if "basis_im" in data:
            b = b + 1j * np.array(data["basis_im"], dtype=float).reshape((m, m // 2), order="F")
        return cls(b)

    # standard examples -------------------------------------------------

    @classmethod
    def tangent(cls, n: int) -> "LagrangianSubspace":
        return cls(np.vstack([np.eye(n), np.zeros((n, n))]))

    @classmethod
    def cotangent(cls, n: int) -> "LagrangianSubspace":
        return cls(np.vstack([np.zeros((n, n)), np.eye(n)]))

    @classmethod
    def graph_of_form(cls, omega: np.ndarray) -> "LagrangianSubspace":
        """Gr_ω = {v ⊕ ι_vω}."""
        omega = check_antisymmetric(omega, "ω", 1e-10)
        n = omega.shape[0]
        return cls(np.vstack([np.eye(n), omega.T]))

    @classmethod
    def graph_of_bivector(cls, pi: np.ndarray) -> "LagrangianSubspace":
        """Gr_π = {ι_απ ⊕ α}."""
        pi = check_antisymmetric(pi, "π", 1e-10)
        n = pi.shape[0]
        return cls(np.vstack([pi.T, np.eye(n)]))


def lagrangian_from_span(vectors: np.ndarray) -> LagrangianSubspace:
    """Wrap an isotropic spanning set of the right rank as a Lagrangian."""
    return LagrangianSubspace(column_space(vectors))


def random_lagrangian(rng: np.random.Generator, n: int, k: int | None = None) -> LagrangianSubspace:
    """E = {v⊕α : v ∈ Q, α − ι_vω̃ ∈ ann(Q)} for random Q (dim k) and ω̃."""
    k = int(rng.integers(0, n + 1)) if k is None else k
    qb = rng.normal(size=(n, n))
    q_basis, ann_basis = qb[:, :k], np.linalg.inv(qb).T[:, k:]
    om = rng.normal(size=(n, n))
    om = om - om.T
    top = np.hstack([q_basis, np.zeros((n, n - k))])
    bot = np.hstack([om.T @ q_basis, ann_basis])
    return LagrangianSubspace(np.vstack([top, bot]))


# ---------------------------------------------------------------------------
# pure spinors


@dataclass(frozen=True)
class NullSpace:
    basis: np.ndarray
    is_pure: bool

    def lagrangian(self) -> LagrangianSubspace:
        if not self.is_pure:
            raise UsageError("spinor is not pure")
        return LagrangianSubspace(self.basis)


def null_space_of_spinor(phi: Multivector) -> NullSpace:
    """N_φ = {w : ρ(w)φ = 0}."""
    if phi.is_zero():
        raise UsageError("the zero spinor has no null space")
    n = phi.dim
    if n == 0:
        return NullSpace(np.zeros((0, 0)), True)
    eye = np.eye(2 * n)
    act = np.column_stack([rho_matrix(eye[:, k]) @ phi.coeffs for k in range(2 * n)])
    scale = np.abs(phi.coeffs).max()
    if not np.any(np.abs(act) > RANK_TOL * scale):
        basis = eye
    else:
        basis = null_space(act)
    return NullSpace(basis, basis.shape[1] == n)


def normalize_spinor(phi: Multivector) -> Multivector:
    """Scale so the first coefficient of (near-)maximal magnitude equals 1."""
    c = phi.coeffs
    mags = np.abs(c)
    peak = mags.max()
    if peak == 0:
        raise UsageError("cannot normalize the zero spinor")
    idx = int(np.flatnonzero(mags >= peak * (1 - 1e-9))[0])
    return Multivector(phi.dim, c / c[idx])


def spinor_of_lagrangian(e: LagrangianSubspace) -> Multivector:
    """The pure spinor (up to scale) whose null space is E."""
    n = e.n
    stack = sp.vstack([rho_matrix(e.basis[:, k]) for k in range(n)]).toarray() if n else np.zeros((0, 1))
    kern = null_space(stack) if n else np.ones((1, 1))
    if kern.shape[1] != 1:
        raise ConsistencyError(f"joint kernel has dimension {kern.shape[1]}, expected 1")
    return normalize_spinor(Multivector(n, kern[:, 0]))


def pairing_top(phi: Multivector, psi: Multivector) -> complex:
    """(φ, ψ) = (φᵀ∧ψ)^[top]."""
    if phi.dim != psi.dim:
        raise UsageError("spinors over different dimensions")
    return wedge(transpose(phi), psi).top_coeff


@dataclass(frozen=True)
class NormalForm:
    """φ = e^{−ω̃}∧θ with Q = pr_V(N_φ), ω̃ any extension of ω_Q, θ top on ann(Q)."""

    q_basis: np.ndarray
    omega_q: np.ndarray
    theta: Multivector
    omega_ext: np.ndarray

    def rebuild(self) -> Multivector:
        return wedge(exp_wedge(-two_form(self.omega_ext)), self.theta)


def normal_form(phi: Multivector) -> NormalForm:
    if phi.parity() is None:
        raise UsageError("a pure spinor has definite parity")
    ns = null_space_of_spinor(phi)
    if not ns.is_pure:
        raise UsageError("spinor is not pure")
    n = phi.dim
    nb = ns.basis
    q_basis = column_space(nb[:n])
    k = q_basis.shape[1]
    coeff, *_ = np.linalg.lstsq(nb[:n], q_basis, rcond=None)
    alphas = nb[n:] @ coeff
    omega_q = alphas.T @ q_basis
    omega_q = 0.5 * (omega_q - omega_q.T)
    left = np.linalg.pinv(q_basis) if k else np.zeros((0, n))
    omega_ext = left.T @ omega_q @ left
    theta = wedge(exp_wedge(two_form(omega_ext)), phi)
    nf = NormalForm(q_basis, omega_q, theta, omega_ext)
    if theta.degrees() - {n - k}:
        raise ConsistencyError("normal form θ is not homogeneous of degree n − dim Q")
    scale = max(1.0, np.abs(phi.coeffs).max())
    if np.abs(nf.rebuild().coeffs - phi.coeffs).max() > 1e-10 * scale:
        raise ConsistencyError("normal form does not reproduce the spinor")
    return nf


# ---------------------------------------------------------------------------
# gauge transformations


def gauge_matrix_form(omega: np.ndarray) -> np.ndarray:
    """A^{−ω}: v⊕α ↦ v⊕(α + ι_vω)."""
    omega = np.asarray(omega)
    n = omega.shape[0]
    return np.block([[np.eye(n), np.zeros((n, n))], [omega.T, np.eye(n)]])


def gauge_matrix_bivector(pi: np.ndarray) -> np.ndarray:
    """A^{−π}: v⊕α ↦ (v + ι_απ)⊕α."""
    pi = np.asarray(pi)
    n = pi.shape[0]
    return np.block([[np.eye(n), pi.T], [np.zeros((n, n)), np.eye(n)]])


def gauge_transform(obj, omega: np.ndarray | None = None, pi: np.ndarray | None = None):
    """Apply A^{−ω} or A^{−π} to a Lagrangian, or e^{−ω}∧ / e^{−ι(π)} to a spinor."""
    if (omega is None) == (pi is None):
        raise UsageError("give exactly one of omega or pi")
    if omega is not None:
        omega = check_antisymmetric(omega, "ω", 1e-10)
        if isinstance(obj, LagrangianSubspace):
            return LagrangianSubspace(gauge_matrix_form(omega) @ obj.basis)
        return wedge(exp_wedge(-two_form(omega)), obj)
    pi = check_antisymmetric(pi, "π", 1e-10)
    if isinstance(obj, LagrangianSubspace):
        return LagrangianSubspace(gauge_matrix_bivector(pi) @ obj.basis)
    return exp_neg_contraction(pi, obj)


# ---------------------------------------------------------------------------
# morphisms


@dataclass(frozen=True, eq=False)
class LinearDiracMorphism:
    """(Φ, ω): 𝕍 ⇢ 𝕍' with v⊕α ∼ v'⊕α' iff v' = Φv and Φ*α' = α + ι_vω."""

    phi: np.ndarray
    omega: np.ndarray

    def __post_init__(self) -> None:
        p = np.atleast_2d(np.array(self.phi))
        o = np.atleast_2d(np.array(self.omega))
        if o.shape != (p.shape[1], p.shape[1]):
            raise UsageError("ω must be an n×n matrix for Φ: V → V' with dim V = n")
        check_antisymmetric(o, "ω")
        p.flags.writeable = False
        o.flags.writeable = False
        object.__setattr__(self, "phi", p)
        object.__setattr__(self, "omega", o)

    @property
    def source_dim(self) -> int:
        return self.phi.shape[1]

    @property
    def target_dim(self) -> int:
        return self.phi.shape[0]

    def related(self, w: np.ndarray, w2: np.ndarray, tol: float = 1e-9) -> bool:
        n = self.source_dim
        v, a = w[:n], w[n:]
        v2, a2 = w2[: self.target_dim], w2[self.target_dim :]
        r1 = self.phi @ v - v2
        r2 = self.phi.T @ a2 - a - self.omega.T @ v
        scale = max(1.0, np.abs(w).max(), np.abs(w2).max())
        return bool(max(np.abs(r1).max(initial=0), np.abs(r2).max(initial=0)) <= tol * scale)

    def graph_basis(self) -> np.ndarray:
        """Basis of Γ ⊂ 𝕍' × 𝕍 as stacked columns [w'; w], parametrized by (v, α')."""
        n, m = self.source_dim, self.target_dim
        v_part = np.vstack([np.eye(n), np.zeros((m, n))])
        a_part = np.vstack([np.zeros((n, m)), np.eye(m)])
        par = np.hstack([v_part, a_part])
        return np.vstack([self._target_of(par), self._source_of(par)])

    def _source_of(self, par: np.ndarray) -> np.ndarray:
        n = self.source_dim
        v, a2 = par[:n], par[n:]
        return np.vstack([v, self.phi.T @ a2 + self.omega @ v])

    def _target_of(self, par: np.ndarray) -> np.ndarray:
        n = self.source_dim
        v, a2 = par[:n], par[n:]
        return np.vstack([self.phi @ v, a2])

    def kernel(self) -> np.ndarray:
        """ker(Φ,ω) = {v ⊕ (−ι_vω) : v ∈ ker Φ}."""
        k = null_space(self.phi)
        return np.vstack([k, self.omega @ k])

    def range(self) -> np.ndarray:
        """ran(Φ,ω) = ran Φ ⊕ V'*."""
        m = self.target_dim
        rp = column_space(self.phi)
        return np.hstack(
            [np.vstack([rp, np.zeros((m, rp.shape[1]))]), np.vstack([np.zeros((m, m)), np.eye(m)])]
        )

    def to_dict(self) -> dict:
        return {"phi": np.real(self.phi).tolist(), "omega": np.real(self.omega).tolist()}

    @classmethod
    def from_dict(cls, data: Mapping) -> "LinearDiracMorphism":
        return cls(np.array(data["phi"], dtype=float), np.array(data["omega"], dtype=float))


def compose_morphisms(m1: LinearDiracMorphism, m2: LinearDiracMorphism) -> LinearDiracMorphism:
    """m1∘m2 = (Φ1Φ2, ω2 + Φ2*ω1)."""
    if m1.source_dim != m2.target_dim:
        raise UsageError("morphism dimensions do not chain")
    return LinearDiracMorphism(m1.phi @ m2.phi, m2.omega + m2.phi.T @ m1.omega @ m2.phi)


@dataclass(frozen=True)
class Image:
    lagrangian: LagrangianSubspace
    transverse: bool


def forward_image(m: LinearDiracMorphism, e: LagrangianSubspace) -> Image:
    """Γ_m∘E = {w' : w ∼ w' for some w ∈ E}."""
    if e.n != m.source_dim:
        raise UsageError("Lagrangian does not live in the source of the morphism")
    n, k = m.source_dim, m.target_dim
    g = split_gram(n)
    par = np.eye(n + k)
    cond = e.basis.T @ g @ m._source_of(par)
    sol = null_space(cond)
    image = lagrangian_from_span(m._target_of(sol))
    transverse = intersection_dim(m.kernel(), e.basis) == 0 if m.kernel().shape[1] else True
    return Image(image, transverse)


def backward_image(m: LinearDiracMorphism, f2: LagrangianSubspace) -> Image:
    """F'∘Γ_m = {w : w ∼ w' for some w' ∈ F'}."""
    if f2.n != m.target_dim:
        raise UsageError("Lagrangian does not live in the target of the morphism")
    n, k = m.source_dim, m.target_dim
    g2 = split_gram(k)
    par = np.eye(n + k)
    cond = f2.basis.T @ g2 @ m._target_of(par)
    sol = null_space(cond)
    image = lagrangian_from_span(m._source_of(sol))
    transverse = rank(np.hstack([m.range(), f2.basis])) == 2 * k
    return Image(image, transverse)


def image_through_morphism(m: LinearDiracMorphism, e: LagrangianSubspace, direction: str) -> Image:
    if direction == "forward":
        return forward_image(m, e)
    if direction == "backward":
        return backward_image(m, e)
    raise UsageError(f"direction must be forward or backward, not {direction!r}")


@dataclass(frozen=True)
class StrongMorphismReport:
    is_dirac: bool
    is_strong: bool
    lift: np.ndarray | None
    target_basis: np.ndarray

    def lift_map(self) -> np.ndarray:
        """â as a 2n×2n' matrix (meaningful on E')."""
        if self.lift is None:
            raise UsageError("morphism is not strong")
        return self.lift @ np.linalg.pinv(self.target_basis)

    def anchor(self) -> np.ndarray:
        """𝔞 = pr_V∘â as an n×2n' matrix (meaningful on E')."""
        lm = self.lift_map()
        return lm[: lm.shape[0] // 2]


def lift_through(m: LinearDiracMorphism, e: LagrangianSubspace, targets: np.ndarray) -> np.ndarray:
    """For each column w' find the w ∈ E with w ∼ w' (least squares, checked)."""
    n = m.source_dim
    k = m.target_dim
    g = split_gram(n)
    top = m.phi
    # w = [v; Φᵀα' + Ωv] ∈ E ⇔ Eᵀ G w = 0
    src_v = e.basis.T @ g @ np.vstack([np.eye(n), m.omega])
    lhs = np.vstack([top, src_v])
    out = []
    for col in range(targets.shape[1]):
        v2, a2 = targets[:k, col], targets[k:, col]
        rhs = np.concatenate([v2, -(e.basis.T @ g @ np.concatenate([np.zeros(n), m.phi.T @ a2]))])
        v, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
        res = np.abs(lhs @ v - rhs).max(initial=0)
        if res > 1e-8 * max(1.0, np.abs(rhs).max(initial=0)):
            raise UsageError("target vector has no related element in E")
        out.append(np.concatenate([v, m.phi.T @ a2 + m.omega @ v]))
    return np.column_stack(out) if out else np.zeros((2 * n, 0))


def is_strong_dirac_morphism(
    m: LinearDiracMorphism, e: LagrangianSubspace, e2: LagrangianSubspace
) -> StrongMorphismReport:
    img = forward_image(m, e)
    is_dirac = img.lagrangian.equals(e2)
    is_strong = is_dirac and img.transverse
    lift = lift_through(m, e, e2.basis) if is_strong else None
    return StrongMorphismReport(is_dirac, is_strong, lift, e2.basis)


# ---------------------------------------------------------------------------
# splittings


@dataclass(frozen=True, eq=False)
class LagrangianSplitting:
    """𝕍 = E ⊕ F with projector p onto E along F."""

    e: LagrangianSubspace
    f: LagrangianSubspace
    projector: np.ndarray

    def __post_init__(self) -> None:
        p = self.projector
        g = self.e.gram
        pt = np.linalg.solve(g, p.T @ g)
        ident = np.eye(p.shape[0])
        scale = max(1.0, np.abs(p).max())
        if np.abs(p @ p - p).max() > 1e-10 * scale ** 2 or np.abs(p + pt - ident).max() > 1e-10 * scale:
            raise ConsistencyError("projector violates p² = p or p + pᵗ = 1")

    @property
    def n(self) -> int:
        return self.e.n

    def transpose_projector(self) -> np.ndarray:
        g = self.e.gram
        return np.linalg.solve(g, self.projector.T @ g)

    def bivector(self) -> np.ndarray:
        """π with π♯(α) = −pr_V p(α)."""
        n = self.n
        return -self.projector[:n, n:].T


def projector(e: LagrangianSubspace, f: LagrangianSubspace) -> np.ndarray:
    if not e.transverse_to(f):
        raise UsageError("E and F are not transverse")
    n = e.n
    frame = np.hstack([e.basis, f.basis])
    sel = np.diag(np.concatenate([np.ones(n), np.zeros(n)]))
    return frame @ sel @ np.linalg.inv(frame)


def splitting_bivector(e: LagrangianSubspace, f: LagrangianSubspace) -> tuple[np.ndarray, LagrangianSplitting]:
    split = LagrangianSplitting(e, f, projector(e, f))
    pi = split.bivector()
    return 0.5 * (pi - pi.T), split


def bivector_from_dual_bases(e: LagrangianSubspace, f: LagrangianSubspace) -> np.ndarray:
    """π = ½ Σ pr_V(e_i) ∧ pr_V(f^i) with ⟨e_i, f^j⟩ = δ_ij."""
    n = e.n
    g = e.gram
    pairing = e.basis.T @ g @ f.basis
    fdual = f.basis @ np.linalg.inv(pairing)
    out = np.zeros((n, n), dtype=np.result_type(e.basis, f.basis))
    for i in range(n):
        out += 0.5 * wedge_matrix_of(e.basis[:n, i], fdual[:n, i])
    return out


def reconstruct_splitting(
    m: LinearDiracMorphism,
    e2: LagrangianSubspace,
    f2: LagrangianSubspace,
    pi: np.ndarray,
    anchor: np.ndarray,
) -> LagrangianSubspace:
    """Build E from (π, 𝔞) so that (Φ,ω): (V,E) → (V',E') is strong.

    ``anchor`` is 𝔞 as an n×2n' matrix; only its values on E' matter.
    """
    n, k = m.source_dim, m.target_dim
    pi = check_antisymmetric(pi, "π", 1e-9)
    p2 = projector(e2, f2)
    a_on_e = anchor @ e2.basis
    phi_emb = np.vstack([m.phi, np.zeros((k, n))])
    # compatibility: Φ∘𝔞 = pr_V'|E' and π♯∘Φ* = −𝔞∘p'|V'*
    r1 = np.abs(m.phi @ a_on_e - e2.basis[:k]).max(initial=0)
    r2 = np.abs(pi.T @ m.phi.T + anchor @ p2[:, k:]).max(initial=0)
    if max(r1, r2) > COMPAT_TOL * max(1.0, np.abs(anchor).max(initial=0)):
        raise UsageError(f"compatibility equations violated (residuals {r1:.3g}, {r2:.3g})")
    g2 = split_gram(k)
    # 𝔞*α ∈ F' is the element d with ⟨e'_j, F'd⟩ = α(𝔞 e'_j)
    pairing = e2.basis.T @ g2 @ f2.basis
    dmap = np.linalg.solve(pairing, a_on_e.T)
    # K = pᵀG holds the pairings ⟨p(x), y⟩; with v⊕(−ι_vω) ∼ Φv⊕0 the
    # vector-vector block picks up ω terms beyond ⟨p'Φv1, Φv2⟩
    om = m.omega
    ap = anchor @ p2 @ phi_emb
    k_vv = phi_emb.T @ p2.T @ g2 @ phi_emb - ap.T @ om - om @ ap + om + om @ pi @ om
    k_va = phi_emb.T @ g2 @ f2.basis @ dmap - om @ pi
    k_aa = -pi
    k_av = np.eye(n) - k_va.T
    kmat = np.block([[k_vv, k_va], [k_av, k_aa]])
    g = split_gram(n)
    p = g @ kmat.T
    e = lagrangian_from_span(column_space(p))
    if e.n != n:
        raise ConsistencyError("reconstructed projector has the wrong rank")
    return e


def splitting_data(
    m: LinearDiracMorphism, e: LagrangianSubspace, e2: LagrangianSubspace, f2: LagrangianSubspace
) -> tuple[np.ndarray, np.ndarray, LagrangianSubspace]:
    """(π, 𝔞, F) extracted from a strong morphism and a complement F' of E'."""
    rep = is_strong_dirac_morphism(m, e, e2)
    if not rep.is_strong:
        raise UsageError("morphism is not strong")
    f = backward_image(m, f2).lagrangian
    pi, _ = splitting_bivector(e, f)
    # 𝔞 as n×2n': extend by zero on F'
    frame = np.hstack([e2.basis, f2.basis])
    vals = np.hstack([rep.lift[: e.n], np.zeros((e.n, f2.n))])
    anchor = vals @ np.linalg.inv(frame)
    return pi, anchor, f

