"""Quadratic Lie algebras and their Clifford-algebra calculus.

Structure constants follow [e_i, e_j] = Σ_k c[i, j, k] e_k. Elements of ∧𝔤
and Cl(𝔤) are multivectors over dim 𝔤 (bit i = e_i); Cl(𝔤) uses the
invariant form B. Contractions ι(ξ) on ∧𝔤 go through B:
ι(ξ)e_i = B(ξ, e_i).
"""

from __future__ import annotations

import functools
import itertools
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .algebra import (
    Multivector,
    QuadraticSpace,
    clifford_product,
    commutator,
    contract,
    contraction_matrix,
    left_operator,
    module_quantize,
    right_operator,
    supertrace,
    wedge,
)
from .errors import DomainError, UsageError
from .linear import rank, two_form, two_form_matrix

# Bernoulli numbers B_2 … B_16 for ½coth(z/2) − 1/z = Σ_k B_{2k} z^{2k−1}/(2k)!
_BERNOULLI = [1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510]


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class Root:
    alpha: np.ndarray  # values α̃(h_i) on the Cartan basis
    plus: int
    minus: int


@dataclass(frozen=True, eq=False)
class CartanWeylData:
    """Triangular decomposition 𝔫₋ ⊕ 𝔱 ⊕ 𝔫₊ with B(e_{−α}, e_α) = 1."""

    t_indices: tuple[int, ...]
    roots: tuple[Root, ...]

    @property
    def plus_indices(self) -> tuple[int, ...]:
        return tuple(r.plus for r in self.roots)

    @property
    def minus_indices(self) -> tuple[int, ...]:
        return tuple(r.minus for r in self.roots)


@dataclass(frozen=True, eq=False)
class LieAlgebraData:
    name: str
    c: np.ndarray
    gram: np.ndarray
    matrices: tuple[np.ndarray, ...] | None = None
    cartan: CartanWeylData | None = None
    scalar_kind: str = "real"
    component_matrices: tuple[np.ndarray, ...] = field(default=())

    def __post_init__(self) -> None:
        c = np.array(self.c, dtype=float)
        g = np.array(self.gram, dtype=float)
        n = g.shape[0]
        if c.shape != (n, n, n):
            raise UsageError("structure constants must have shape (dim, dim, dim)")
        c.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "gram", g)
        res = self.residuals()
        if res["antisymmetry"] > 1e-12 or res["jacobi"] > 1e-12 or res["invariance"] > 1e-12:
            raise UsageError(f"invalid Lie algebra data: {res}")
        QuadraticSpace(g)  # nondegeneracy

    @property
    def dim(self) -> int:
        return self.gram.shape[0]

    # basic operations ---------------------------------------------------

    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.einsum("i,j,ijk->k", x, y, self.c)

    def ad(self, x: np.ndarray) -> np.ndarray:
        """Matrix of ad_x: column j is [x, e_j]."""
        return np.einsum("i,ijk->kj", x, self.c)

    @functools.cached_property
    def gram_inv(self) -> np.ndarray:
        return np.linalg.inv(self.gram)

    @functools.cached_property
    def space(self) -> QuadraticSpace:
        return QuadraticSpace(self.gram)

    def B(self, x: np.ndarray, y: np.ndarray) -> complex:
        return x @ self.gram @ y

    def flat(self, x: np.ndarray) -> np.ndarray:
        """B♭x as a covector."""
        return self.gram @ x

    def sharp(self, a: np.ndarray) -> np.ndarray:
        return self.gram_inv @ a

    def dual_basis(self) -> np.ndarray:
        """Columns e^i with B(e^i, e_j) = δ_ij."""
        return self.gram_inv

    def killing(self) -> np.ndarray:
        ads = [self.ad(np.eye(self.dim)[i]) for i in range(self.dim)]
        return np.array([[np.trace(a @ b) for b in ads] for a in ads])

    def casimir_ad(self) -> np.ndarray:
        """Σ_i ad(e_i) ad(e^i)."""
        eye = np.eye(self.dim)
        dual = self.dual_basis()
        return sum(self.ad(eye[i]) @ self.ad(dual[:, i]) for i in range(self.dim))

    def residuals(self) -> dict[str, float]:
        c = self.c
        n = c.shape[0]
        anti = float(np.abs(c + c.transpose(1, 0, 2)).max(initial=0))
        jac = np.einsum("ijl,lkm->ijkm", c, c)
        jac = jac + jac.transpose(1, 2, 0, 3) + jac.transpose(2, 0, 1, 3)
        inv = np.einsum("ijl,lk->ijk", c, self.gram)  # B([e_i,e_j],e_k)
        inv = inv + inv.transpose(0, 2, 1)  # + B(e_j,[e_i,e_k]) after swapping roles
        return {
            "antisymmetry": anti,
            "jacobi": float(np.abs(jac).max(initial=0)) if n else 0.0,
            "invariance": float(np.abs(inv).max(initial=0)) if n else 0.0,
        }

    @functools.cached_property
    def _schouten_memo(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        out: dict = {
            "name": self.name,
            "dim": self.dim,
            "c": [float(x) for x in self.c.ravel()],
            "gram": [float(x) for x in self.gram.ravel()],
        }
        if self.cartan is not None:
            out["cartan"] = {
                "t_indices": list(self.cartan.t_indices),
                "roots": [
                    {"alpha_on_t": [float(a) for a in r.alpha], "plus_index": r.plus, "minus_index": r.minus}
                    for r in self.cartan.roots
                ],
            }
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "LieAlgebraData":
        n = int(data["dim"])
        cartan = None
        if data.get("cartan"):
            cw = data["cartan"]
            cartan = CartanWeylData(
                tuple(int(i) for i in cw["t_indices"]),
                tuple(
                    Root(np.array(r["alpha_on_t"], dtype=float), int(r["plus_index"]), int(r["minus_index"]))
                    for r in cw["roots"]
                ),
            )
        return cls(
            str(data.get("name", "custom")),
            np.array(data["c"], dtype=float).reshape(n, n, n),
            np.array(data["gram"], dtype=float).reshape(n, n),
            cartan=cartan,
        )


# ---------------------------------------------------------------------------
# builtin algebras


def structure_from_matrices(mats: Sequence[np.ndarray]) -> np.ndarray:
    """c[i, j, :] = coordinates of [X_i, X_j] in the basis X."""
    n = len(mats)
    flat = np.column_stack([np.asarray(m).ravel() for m in mats])
    c = np.zeros((n, n, n))
    for i, j in itertools.product(range(n), repeat=2):
        comm = mats[i] @ mats[j] - mats[j] @ mats[i]
        coef, *_ = np.linalg.lstsq(flat, comm.ravel(), rcond=None)
        if np.abs(flat @ coef - comm.ravel()).max(initial=0) > 1e-12:
            raise UsageError("matrices do not span a Lie algebra")
        if np.abs(coef.imag).max(initial=0) > 1e-12:
            raise UsageError("structure constants are not real")
        c[i, j] = coef.real
    return c


def _su2_matrices() -> list[np.ndarray]:
    s1 = np.array([[0, 1], [1, 0]], dtype=complex)
    s2 = np.array([[0, -1j], [1j, 0]])
    s3 = np.array([[1, 0], [0, -1]], dtype=complex)
    return [-0.5j * s for s in (s1, s2, s3)]


def _so3_matrices() -> list[np.ndarray]:
    out = []
    for k in range(3):
        m = np.zeros((3, 3))
        for i, j in itertools.product(range(3), repeat=2):
            m[i, j] = -_levi(k, i, j)
        out.append(m)
    return out


def _levi(i: int, j: int, k: int) -> int:
    return int(np.sign(np.linalg.det(np.eye(3)[[i, j, k]]))) if len({i, j, k}) == 3 else 0


def _elementary(n: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((n, n))
    m[i, j] = 1
    return m


def _sl_data(name: str, n: int, complex_: bool) -> LieAlgebraData:
    """sl(n) with basis E_ij (i<j), E_ij (i>j), H_k = E_kk − E_{k+1,k+1}; B = trace form."""
    upper = [(i, j) for i in range(n) for j in range(i + 1, n)]
    lower = [(j, i) for (i, j) in upper]
    mats = [_elementary(n, i, j) for i, j in upper] + [_elementary(n, i, j) for i, j in lower]
    mats += [_elementary(n, k, k) - _elementary(n, k + 1, k + 1) for k in range(n - 1)]
    gram = np.array([[np.trace(a @ b) for b in mats] for a in mats])
    c = structure_from_matrices(mats)
    npos = len(upper)
    t_idx = tuple(range(2 * npos, 2 * npos + n - 1))
    roots = []
    for r, (i, j) in enumerate(upper):
        x = mats[r]
        alpha = np.array([np.sum((mats[t] @ x - x @ mats[t]) * x) for t in t_idx])
        roots.append(Root(alpha, r, npos + r))
    cartan = CartanWeylData(t_idx, tuple(roots))
    if complex_:
        mats = [m.astype(complex) for m in mats]
    return LieAlgebraData(name, c, gram, tuple(mats), cartan, "complex" if complex_ else "real")


def _kstar_semidirect(base: LieAlgebraData) -> LieAlgebraData:
    """𝔨*⋊𝔨 with basis (β_1..β_n, ξ_1..ξ_n), 𝔨* ≅ 𝔨 through B, pairing form."""
    n = base.dim
    c = np.zeros((2 * n, 2 * n, 2 * n))
    for i, j in itertools.product(range(n), repeat=2):
        c[n + i, n + j, n:] = base.c[i, j]
        c[n + i, j, :n] = _coadjoint_coeffs(base, i, j)
        c[j, n + i, :n] = -c[n + i, j, :n]
    z, eye = np.zeros((n, n)), np.eye(n)
    gram = np.block([[z, eye], [eye, z]])
    mats = None
    if base.matrices is not None:
        d = base.matrices[0].shape[0]
        zero = np.zeros((d, d), dtype=base.matrices[0].dtype)
        # β_j ↦ Y_j with [X_i, Y_j] = Σ c'_ijk Y_k: use dual matrices Y_j = Σ_l (B⁻¹)_jl X_l
        ys = [sum(base.gram_inv[j, l] * base.matrices[l] for l in range(n)) for j in range(n)]
        mats = tuple(np.block([[zero, zero], [y, zero]]) for y in ys) + tuple(
            np.block([[x, zero], [zero, x]]) for x in base.matrices
        )
    out = LieAlgebraData(f"kstar_semidirect({base.name})", c, gram, mats, None, base.scalar_kind)
    if mats is not None and np.abs(structure_from_matrices(mats) - c).max() > 1e-12:
        raise UsageError("semidirect matrix realization is inconsistent")
    return out


def _coadjoint_coeffs(base: LieAlgebraData, i: int, j: int) -> np.ndarray:
    """[ξ_i, β_j] in the β basis, where β_j is the functional B(e_j', ·) dual to ξ_j."""
    # β_j pairs with ξ_k as δ_jk; (ad*_ξ β)(ζ) = −β([ξ, ζ])
    n = base.dim
    out = np.zeros(n)
    for k in range(n):
        out[k] = -base.c[i, k, j]
    return out


def builtin_algebra(name: str) -> LieAlgebraData:
    key = name.strip().lower().replace(" ", "")
    if key == "su2":
        mats = _su2_matrices()
        return LieAlgebraData("su2", structure_from_matrices(mats), np.eye(3), tuple(mats))
    if key == "so3":
        mats = _so3_matrices()
        return LieAlgebraData("so3", structure_from_matrices(mats), np.eye(3), tuple(mats))
    if key in ("sl2r", "sl2c", "sl3c"):
        n = 3 if key == "sl3c" else 2
        return _sl_data(key, n, key.endswith("c"))
    if key in ("o2", "o2-lie", "u1"):
        j = np.array([[0.0, -1.0], [1.0, 0.0]])
        return LieAlgebraData(
            "o2", np.zeros((1, 1, 1)), np.array([[2.0]]), (j,), component_matrices=(np.diag([1.0, -1.0]),)
        )
    m = re.fullmatch(r"abelian\(?(\d+)\)?", key)
    if m:
        n = int(m.group(1))
        mats = tuple(_elementary(n, i, i) for i in range(n))
        return LieAlgebraData(f"abelian({n})", np.zeros((n, n, n)), np.eye(n), mats)
    m = re.fullmatch(r"kstar(?:_semidirect)?\(?(\w+?)\)?", key)
    if m:
        return _kstar_semidirect(builtin_algebra(m.group(1)))
    raise UsageError(f"unknown algebra {name!r}")


BUILTIN_NAMES = ("su2", "so3", "sl2r", "sl2c", "sl3c", "o2", "abelian(2)", "kstar_semidirect(su2)")


# ---------------------------------------------------------------------------
# Ξ, λ, τ


def lowered_structure(g: LieAlgebraData) -> np.ndarray:
    """c_ijk = B(e_i, [e_j, e_k]) (totally antisymmetric)."""
    return np.einsum("jkl,li->ijk", g.c, g.gram)


def cartan_three_tensor(g: LieAlgebraData) -> Multivector:
    """Ξ ∈ ∧³𝔤 with ι(ξ3)ι(ξ2)ι(ξ1)Ξ = ¼B(ξ1, [ξ2, ξ3])."""
    low = lowered_structure(g)
    bi = g.gram_inv
    up = np.einsum("abc,ai,bj,ck->ijk", low, bi, bi, bi)
    n = g.dim
    coeffs = np.zeros(1 << n)
    for i, j, k in itertools.combinations(range(n), 3):
        coeffs[(1 << i) | (1 << j) | (1 << k)] = 0.25 * up[i, j, k]
    return Multivector(n, coeffs)


def lambda_map(g: LieAlgebraData, xi: np.ndarray) -> Multivector:
    """λ(ξ) ∈ ∧²𝔤 with −ι(ζ)λ(ξ) = [ξ, ζ]."""
    return two_form(g.ad(xi) @ g.gram_inv)


def tau_alg(g: LieAlgebraData, xi: np.ndarray) -> Multivector:
    """τ(ξ) = q(λ(ξ)) ∈ Cl(𝔤)."""
    return lambda_map(g, xi)


@dataclass(frozen=True)
class CartanTensor:
    xi: Multivector
    lam: tuple[Multivector, ...]
    tau: tuple[Multivector, ...]


def cartan_tensor(g: LieAlgebraData) -> CartanTensor:
    eye = np.eye(g.dim)
    lam = tuple(lambda_map(g, eye[i]) for i in range(g.dim))
    return CartanTensor(cartan_three_tensor(g), lam, lam)


def b_contract(g: LieAlgebraData, xi: np.ndarray, x: Multivector) -> Multivector:
    """ι(ξ) on ∧𝔤 through B."""
    return Multivector(x.dim, contraction_matrix(g.dim, g.flat(xi)) @ x.coeffs)


# ---------------------------------------------------------------------------
# Clifford differential and the double


def clifford_differential(g: LieAlgebraData, x: Multivector) -> Multivector:
    """d^Cl x = −4[q(Ξ), x] (graded commutator)."""
    return -4 * commutator(g.space, cartan_three_tensor(g), x)


def clifford_differential_matrix(g: LieAlgebraData) -> np.ndarray:
    """d^Cl as a dense operator: −4(l(q(Ξ)) − r(q(Ξ))), Ξ odd."""
    xi = cartan_three_tensor(g)
    return -4 * (left_operator(g.space, xi).dense() - right_operator(g.space, xi).dense())


def double(g: LieAlgebraData) -> LieAlgebraData:
    """𝔡 = 𝔤 ⊕ 𝔤̄ with B_𝔡 = B ⊕ (−B)."""
    n = g.dim
    c = np.zeros((2 * n, 2 * n, 2 * n))
    c[:n, :n, :n] = g.c
    c[n:, n:, n:] = g.c
    z = np.zeros((n, n))
    gram = np.block([[g.gram, z], [z, -g.gram]])
    return LieAlgebraData(f"double({g.name})", c, gram, None, None, g.scalar_kind)


def diagonal(g: LieAlgebraData) -> np.ndarray:
    """Columns (e_i, e_i) spanning 𝔤_Δ ⊂ 𝔡."""
    return np.vstack([np.eye(g.dim), np.eye(g.dim)])


def antidiagonal(g: LieAlgebraData) -> np.ndarray:
    """Columns (e_i, −e_i) spanning 𝔭 ⊂ 𝔡."""
    return np.vstack([np.eye(g.dim), -np.eye(g.dim)])


@dataclass(frozen=True, eq=False)
class DoubleSpinorRep:
    """ρ^Cl(ξ, ξ') = l(ξ) − r(ξ') on Cl(𝔤), generators indexed by the 𝔡 basis."""

    g: LieAlgebraData
    generators: tuple[sp.csr_matrix, ...]

    @property
    def gram(self) -> np.ndarray:
        n = self.g.dim
        z = np.zeros((n, n))
        return np.block([[self.g.gram, z], [z, -self.g.gram]])

    def vector(self, zeta: np.ndarray) -> sp.csr_matrix:
        out = sp.csr_matrix(self.generators[0].shape, dtype=np.result_type(zeta, float))
        for z, gen in zip(zeta, self.generators):
            if z != 0:
                out = out + z * gen
        return out.tocsr()

    def quantized(self, y: Multivector) -> sp.csr_matrix:
        """ρ^Cl(q(y)) for y ∈ ∧𝔡."""
        return sp.csr_matrix(module_quantize(self.gram, list(self.generators), y))


def double_spinor_rep(g: LieAlgebraData) -> DoubleSpinorRep:
    eye = np.eye(g.dim)
    left = [left_operator(g.space, Multivector.vector(eye[i])).matrix for i in range(g.dim)]
    right = [-right_operator(g.space, Multivector.vector(eye[i])).matrix for i in range(g.dim)]
    return DoubleSpinorRep(g, tuple(sp.csr_matrix(m) for m in left + right))


# ---------------------------------------------------------------------------
# Courant tensors of a Lagrangian subspace of 𝔡


@dataclass(frozen=True)
class CourantData:
    upsilon: Multivector  # ∧³ of the complement, via B_𝔡 duality with s
    sigma: np.ndarray  # element of the complement
    upsilon_values: np.ndarray  # Υ(s_i, s_j, s_k)
    sigma_values: np.ndarray  # σ(s_i)


def courant_data_subspace(d: LieAlgebraData, s: np.ndarray, p: np.ndarray) -> CourantData:
    """Υ^𝔰(ζ1,ζ2,ζ3) = B_𝔡(ζ1,[ζ2,ζ3]) and σ^𝔰(ξ) = ½tr(pr_𝔰∘ad_ξ|_𝔰).

    Both are transported to the complement 𝔭 ≅ 𝔰* through B_𝔡, so that
    ι(ζ3)ι(ζ2)ι(ζ1)Υ = Υ(ζ1,ζ2,ζ3).
    """
    s, p = np.asarray(s), np.asarray(p)
    m = s.shape[1]
    if s.shape != (d.dim, d.dim // 2) or p.shape != s.shape:
        raise UsageError("s and p must be dim𝔡 × dim𝔡/2 bases")
    iso = max(np.abs(s.T @ d.gram @ s).max(), np.abs(p.T @ d.gram @ p).max())
    if iso > 1e-10 or rank(s) != m or rank(np.hstack([s, p])) != d.dim:
        raise UsageError("s and p must be transverse Lagrangian subspaces")
    brackets = np.einsum("ai,bj,abk->ijk", s, s, d.c)  # [s_i, s_j] in 𝔡 coordinates
    ups = np.einsum("ai,ab,jkb->ijk", s, d.gram, brackets)
    frame = np.hstack([s, p])
    coords = np.linalg.solve(frame, brackets.reshape(m * m, d.dim).T)  # columns: [s-part; p-part]
    s_part = coords[:m].reshape(m, m, m)  # s_part[k, i, j] = s_k-coefficient of [s_i, s_j]
    sig = 0.5 * np.array([np.trace(s_part[:, i, :]) for i in range(m)])
    # dual basis of p: B_𝔡(s_i, f^j) = δ
    pair = s.T @ d.gram @ p
    fdual = p @ np.linalg.inv(pair)
    fvecs = [Multivector.vector(fdual[:, i]) for i in range(m)]
    up = Multivector.zero(d.dim)
    for i, j, k in itertools.combinations(range(m), 3):
        if ups[i, j, k] != 0:
            up = up + ups[i, j, k] * wedge(wedge(fvecs[i], fvecs[j]), fvecs[k])
    return CourantData(up, fdual @ sig, ups, sig)


# ---------------------------------------------------------------------------
# Schouten bracket on ∧𝔤


def schouten(g: LieAlgebraData, x: Multivector, y: Multivector) -> Multivector:
    """Biderivation extension of the bracket of 𝔤 to ∧𝔤.

    Uses [a, Y] = Σ_j y_1∧…∧[a, y_j]∧…∧y_q for vectors a and
    [a∧X', Y] = a∧[X', Y] + (−1)^{(p−1)(q−1)}[a, Y]∧X' for a of degree 1.
    """
    n = g.dim
    out = Multivector.zero(n)
    for ma in np.flatnonzero(x.coeffs):
        for mb in np.flatnonzero(y.coeffs):
            out = out + x.coeffs[ma] * y.coeffs[mb] * _schouten_blades(g, int(ma), int(mb))
    return out


def _schouten_blades(g: LieAlgebraData, ma: int, mb: int) -> Multivector:
    memo = g._schouten_memo
    if (ma, mb) not in memo:
        memo[(ma, mb)] = _schouten_blades_uncached(g, ma, mb)
    return memo[(ma, mb)]


def _schouten_blades_uncached(g: LieAlgebraData, ma: int, mb: int) -> Multivector:
    n = g.dim
    eye = np.eye(n)
    ia = [i for i in range(n) if ma >> i & 1]
    ib = [i for i in range(n) if mb >> i & 1]
    if not ia or not ib:
        return Multivector.zero(n)
    if len(ia) == 1:
        a = ia[0]
        out = Multivector.zero(n)
        for pos, b in enumerate(ib):
            parts = [Multivector.vector(eye[k]) for k in ib]
            parts[pos] = Multivector.vector(g.c[a, b])
            term = parts[0]
            for p in parts[1:]:
                term = wedge(term, p)
            out = out + term
        return out
    a, rest = ia[0], ma ^ (1 << ia[0])
    p, q = len(ia), len(ib)
    va = Multivector.vector(eye[a])
    first = wedge(va, _schouten_blades(g, rest, mb))
    second = wedge(_schouten_blades(g, 1 << a, mb), Multivector.blade(n, ia[1:]))
    return first + (-1) ** ((p - 1) * (q - 1)) * second


# ---------------------------------------------------------------------------
# dynamical r-matrix


def _f_series(z):
    """Taylor polynomial of f through z¹⁵ (scalar or square matrix)."""
    matrix = np.ndim(z) == 2
    zsq = z @ z if matrix else z * z
    term, out = z, 0 * z
    fact = 1.0
    for k, b in enumerate(_BERNOULLI, start=1):
        fact *= (2 * k - 1) * (2 * k)
        out = out + (b / fact) * term
        term = term @ zsq if matrix else term * zsq
    return out


def f_scalar(z: complex) -> complex:
    """½coth(z/2) − 1/z with its removable singularity at 0."""
    if abs(z) < 0.5:
        return complex(_f_series(complex(z)))
    return 0.5 / np.tanh(z / 2) - 1 / z


def _check_natural(ad: np.ndarray) -> None:
    for lam in np.linalg.eigvals(ad) if ad.size else ():
        k = np.round(lam.imag / (2 * np.pi))
        if k != 0 and abs(lam - 2j * np.pi * k) < 1e-8:
            raise DomainError(
                f"ad_ν has eigenvalue {lam:.6g} ≈ 2πi·{int(k)}: the factor (1 − e^(−z))/z of dexp vanishes"
            )


def _f_contour(a: np.ndarray, nodes: int = 256) -> np.ndarray:
    """Cauchy integral of f over a circle inside the disc |z| < 2π."""
    radius = max(abs(np.linalg.eigvals(a)))
    if radius >= 2 * np.pi * 0.95:
        raise DomainError("spectrum of ad_ν too close to the poles of f for a defective ad_ν")
    r = 0.5 * (radius + 2 * np.pi)
    eye = np.eye(a.shape[0])
    out = np.zeros(a.shape, dtype=complex)
    for t in np.arange(nodes) * 2 * np.pi / nodes:
        z = r * np.exp(1j * t)
        out += f_scalar(z) * z * np.linalg.inv(z * eye - a)
    return out / nodes


def f_of_ad(ad: np.ndarray, method: str = "auto") -> np.ndarray:
    """f(ad_ν) with f(z) = ½coth(z/2) − 1/z.

    ``method``: "series" (Taylor through z¹⁵), "eig" (eigendecomposition) or
    "auto" (series when ‖ad_ν‖₂ < 1, otherwise eigendecomposition, with a
    contour integral when the eigenbasis is ill-conditioned).
    """
    if method not in ("auto", "series", "eig"):
        raise UsageError(f"unknown method {method!r}")
    _check_natural(ad)
    norm = np.linalg.norm(ad, 2) if ad.size else 0.0
    if method == "series" or (method == "auto" and norm < 1.0):
        out = _f_series(ad)
    else:
        lam, vec = np.linalg.eig(ad)
        if np.linalg.cond(vec) < 1e8:
            out = vec @ np.diag([f_scalar(x) for x in lam]) @ np.linalg.inv(vec)
        else:
            out = _f_contour(ad)
    return out.real if np.isrealobj(ad) else out


@dataclass(frozen=True, eq=False)
class DynamicalTwist:
    nu: np.ndarray
    C: np.ndarray
    epsilon: Multivector

    def matrix(self) -> np.ndarray:
        return two_form_matrix(self.epsilon)


def cdybe_twist(g: LieAlgebraData, nu: np.ndarray, method: str = "auto") -> DynamicalTwist:
    nu = np.asarray(nu, dtype=float)
    ad = g.ad(nu)
    cmat = f_of_ad(ad, method)
    # ε = ½ Σ_i e^i ∧ C(e_i): matrix ½(B⁻¹Cᵀ − C B⁻¹)
    bi = g.gram_inv
    eps = 0.5 * (bi @ cmat.T - cmat @ bi)
    return DynamicalTwist(nu, cmat, two_form(eps))


def algebroid_schouten(
    g: LieAlgebraData, x: Multivector, y: Multivector, dx: Sequence[Multivector], dy: Sequence[Multivector]
) -> Multivector:
    """Bracket of ∧²-valued sections of the coadjoint action algebroid 𝔤*⋊𝔤.

    ``dx[a]`` is the derivative of x along the anchor of e_a. For bivectors,
    [fA, gB] = fg[A, B] − f(ι(dg)A)∧B − g(ι(df)B)∧A.
    """
    if x.degrees() - {2} or y.degrees() - {2}:
        raise UsageError("algebroid bracket is implemented for bivector sections")
    eye = np.eye(g.dim)
    out = schouten(g, x, y)
    for a in range(g.dim):
        out = out - wedge(contract(eye[a], x), dy[a]) - wedge(contract(eye[a], y), dx[a])
    return out


def exterior_derivative(g: LieAlgebraData, derivs: Sequence[Multivector]) -> Multivector:
    """dε = Σ_c e^c∧∂_c ε for a ∧𝔤-valued function, with 1-forms identified through B."""
    dual = g.dual_basis()
    out = Multivector.zero(g.dim)
    for c, d in enumerate(derivs):
        out = out + wedge(Multivector.vector(dual[:, c]), d)
    return out


def cdybe_residual(g: LieAlgebraData, nu: np.ndarray, step: float = 1e-5) -> tuple[float, Multivector]:
    """Max-norm of dε + ½[ε, ε] − Ξ.

    dε uses central differences. The bracket is that of the action algebroid;
    its anchor derivatives come from equivariance, ∂_{[ν, e_a]}ε = −[e_a, ε].
    """
    n = g.dim
    nu = np.asarray(nu, dtype=float)
    eps = cdybe_twist(g, nu).epsilon
    eye = np.eye(n)
    derivs = [
        (cdybe_twist(g, nu + step * eye[c]).epsilon - cdybe_twist(g, nu - step * eye[c]).epsilon) / (2 * step)
        for c in range(n)
    ]
    anchor = [-schouten(g, Multivector.vector(eye[a]), eps) for a in range(n)]
    total = exterior_derivative(g, derivs) + 0.5 * algebroid_schouten(g, eps, eps, anchor, anchor)
    total = total - cartan_three_tensor(g)
    return float(np.abs(total.coeffs).max(initial=0)), total


# ---------------------------------------------------------------------------
# Gauss-Dirac data


def require_cartan(g: LieAlgebraData) -> CartanWeylData:
    if g.cartan is None:
        raise UsageError(f"{g.name} carries no Cartan-Weyl data")
    return g.cartan


def gauss_subalgebra(g: LieAlgebraData) -> np.ndarray:
    """𝔰 ⊂ 𝔡 spanned by e_α⊕0, 0⊕e_{−α}, h_i⊕(−h_i)."""
    cw = require_cartan(g)
    n = g.dim
    eye = np.eye(n)
    cols = [np.concatenate([eye[i], np.zeros(n)]) for i in cw.plus_indices]
    cols += [np.concatenate([np.zeros(n), eye[i]]) for i in cw.minus_indices]
    cols += [np.concatenate([eye[i], -eye[i]]) for i in cw.t_indices]
    return np.column_stack(cols)


def r_matrix(g: LieAlgebraData) -> Multivector:
    """𝔯 = Σ_{α≻0} e_{−α}∧e_α."""
    cw = require_cartan(g)
    out = Multivector.zero(g.dim)
    for r in cw.roots:
        out = out + Multivector.blade(g.dim, [r.minus, r.plus])
    return out


def diagonal_image(g: LieAlgebraData, x: Multivector) -> Multivector:
    """Image of x ∈ ∧𝔤 under ξ ↦ (ξ, ξ) in ∧𝔡."""
    from .algebra import exterior_power

    return Multivector(2 * g.dim, exterior_power(diagonal(g)) @ x.coeffs)


def rho_vector(g: LieAlgebraData) -> np.ndarray:
    """B♯(½Σ_{α≻0} α̃) as an element of 𝔱 ⊂ 𝔤."""
    cw = require_cartan(g)
    t = list(cw.t_indices)
    gt = g.gram[np.ix_(t, t)]
    half = 0.5 * sum(r.alpha for r in cw.roots)
    out = np.zeros(g.dim)
    out[t] = np.linalg.solve(gt, half)
    return out


@dataclass(frozen=True)
class GaussSpinor:
    x: Multivector
    h_rho: np.ndarray
    residual: float


def gauss_spinor(g: LieAlgebraData) -> GaussSpinor:
    """x = Π_{α≻0} e_α e_{−α}·q(h_1∧…∧h_l) normalized by str(x) = 1, and h_ρ with d^Cl x = [h_ρ, x]."""
    cw = require_cartan(g)
    q = g.space
    eye = np.eye(g.dim)
    factors = []
    for r in cw.roots:
        factors += [Multivector.vector(eye[r.plus]), Multivector.vector(eye[r.minus])]
    x = Multivector.scalar(g.dim)
    for f in factors:
        x = clifford_product(q, x, f)
    # q(h_1∧…∧h_l) agrees with the product h_1⋯h_l for a B-orthogonal Cartan basis
    x = clifford_product(q, x, Multivector.blade(g.dim, list(cw.t_indices)))
    st = supertrace(x)
    if abs(st) < 1e-12:
        raise UsageError("Gauss spinor has vanishing supertrace")
    x = x / st
    dx = clifford_differential(g, x)
    cols = [commutator(q, Multivector.vector(eye[i]), x).coeffs for i in cw.t_indices]
    coef, *_ = np.linalg.lstsq(np.column_stack(cols), dx.coeffs, rcond=None)
    res = float(np.abs(np.column_stack(cols) @ coef - dx.coeffs).max(initial=0))
    h = np.zeros(g.dim, dtype=coef.dtype)
    h[list(cw.t_indices)] = coef
    return GaussSpinor(x, h.real if np.isrealobj(coef) or not np.any(coef.imag) else h, res)


def r_gauge_matrix(g: LieAlgebraData) -> np.ndarray:
    """Orthogonal map of 𝔡 taking the anti-diagonal to 𝔰: A^{−½𝔯_Δ} = exp(−½ R G_𝔡).

    The factor ½ reflects the wedge convention a∧b = a⊗b − b⊗a used here.
    """
    d = double(g)
    mat = two_form_matrix(diagonal_image(g, r_matrix(g)))
    return scipy.linalg.expm(-0.5 * mat @ d.gram)


def gauss_spinor_from_r_matrix(g: LieAlgebraData) -> Multivector:
    """ρ^Cl(exp(−½𝔯_Δ))q(μ) with μ the top blade of 𝔤."""
    rep = double_spinor_rep(g)
    op = rep.quantized(diagonal_image(g, r_matrix(g)))
    top = Multivector.top(g.dim).coeffs.astype(float)
    return Multivector(g.dim, spla.expm_multiply(-0.5 * op, top))
