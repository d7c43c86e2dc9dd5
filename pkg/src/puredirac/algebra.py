"""Exterior and Clifford algebra over a finite-dimensional quadratic space.

Elements of ∧V and Cl(V) share one storage: a dense coefficient vector of
length 2**dim indexed by bitmask, bit i standing for the basis vector e_i.
A Clifford element is stored through its symbol, so ``quantize`` and
``symbol`` only retag the coefficients. The Clifford relation is
vv' + v'v = B(v, v')·1, hence v·v = ½B(v, v).

Operators (wedge, contraction, regular representations) are sparse
matrices acting on the same coefficient vectors.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import UsageError

DROP_TOL = 1e-13
RANK_TOL = 1e-9
MAX_EXP_DIM = 8
MAX_TRANSFORM_DIM = 12


# ---------------------------------------------------------------------------
# bitmask helpers


@functools.lru_cache(maxsize=None)
def grades(n: int) -> np.ndarray:
    """Degree of every blade index for dimension ``n``."""
    out = np.bitwise_count(np.arange(1 << n, dtype=np.int64)).astype(np.int64)
    out.flags.writeable = False
    return out


def mask_of(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << int(i)
    return m


def indices_of(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def swap_parity(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """Parity of moving blade ``b`` past blade ``a`` into sorted order.

    For each element j of b this counts the elements of a greater than j,
    which is the sign of e_A e_B in any orthogonal basis (and of e_A ∧ e_B).
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    s = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
    for j in range(n):
        s += ((b >> j) & 1) * np.bitwise_count(a >> (j + 1))
    return s & 1


def _sign(parity: np.ndarray) -> np.ndarray:
    return 1 - 2 * parity


def _sorting_sign(indices: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sign of the permutation sorting ``indices`` (0 if any repeats)."""
    idx = list(indices)
    if len(set(idx)) != len(idx):
        return 0, ()
    inversions = sum(1 for i in range(len(idx)) for j in range(i + 1, len(idx)) if idx[i] > idx[j])
    return (-1) ** inversions, tuple(sorted(idx))


# ---------------------------------------------------------------------------
# quadratic spaces


def _congruence_diagonalize(gram: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (P, d) with Pᵀ·gram·P = diag(d) via symmetric Gaussian elimination."""
    n = gram.shape[0]
    m = np.array(gram, dtype=complex)
    p = np.eye(n, dtype=complex)
    scale = max(np.abs(m).max(), 1.0)
    for k in range(n):
        sub = np.abs(np.diag(m)[k:])
        i = k + int(np.argmax(sub))
        if sub.max() <= 1e-8 * scale:
            off = np.abs(m[k:, k:])
            np.fill_diagonal(off, 0.0)
            a, b = np.unravel_index(int(np.argmax(off)), off.shape)
            a, b = a + k, b + k
            if off.max() <= RANK_TOL * scale:
                raise UsageError("gram matrix is degenerate")
            # e_a ← e_a + e_b gives a nonzero diagonal entry
            m[:, a] += m[:, b]
            m[a, :] += m[b, :]
            p[:, a] += p[:, b]
            i = a
        m[:, [k, i]] = m[:, [i, k]]
        m[[k, i], :] = m[[i, k], :]
        p[:, [k, i]] = p[:, [i, k]]
        piv = m[k, k]
        for j in range(k + 1, n):
            c = m[k, j] / piv
            if c != 0:
                m[:, j] -= c * m[:, k]
                m[j, :] -= c * m[k, :]
                p[:, j] -= c * p[:, k]
    return p, np.diag(m).copy()


@dataclass(frozen=True, eq=False)
class QuadraticSpace:
    """A vector space with a nondegenerate symmetric Gram matrix."""

    gram: np.ndarray
    scalar_kind: str = field(default="")

    def __post_init__(self) -> None:
        g = np.array(self.gram)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise UsageError("gram must be a square matrix")
        if not np.array_equal(g, g.T):
            raise UsageError("gram must be exactly symmetric")
        kind = self.scalar_kind or ("complex" if np.iscomplexobj(g) and np.any(g.imag != 0) else "real")
        if kind not in ("real", "complex"):
            raise UsageError(f"unknown scalar kind {kind!r}")
        g = g.astype(complex) if kind == "complex" else g.real.astype(float)
        if g.shape[0] > 0:
            sv = np.linalg.svd(g, compute_uv=False)
            if sv[-1] <= RANK_TOL * max(sv[0], 1.0):
                raise UsageError("gram matrix is degenerate")
        g.flags.writeable = False
        object.__setattr__(self, "gram", g)
        object.__setattr__(self, "scalar_kind", kind)

    @property
    def dim(self) -> int:
        return self.gram.shape[0]

    @functools.cached_property
    def _orthogonal_frame(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(P, P⁻¹, squares) where the columns of P are B-orthogonal, f_j² = squares[j]."""
        if self.dim == 0:
            e = np.eye(0)
            return e, e, np.zeros(0)
        off = self.gram - np.diag(np.diag(self.gram))
        if not np.any(off):
            p = np.eye(self.dim)
            d = np.diag(self.gram).copy()
        elif self.scalar_kind == "real":
            d, p = np.linalg.eigh(self.gram)
        else:
            p, d = _congruence_diagonalize(self.gram)
        pinv = np.linalg.inv(p)
        return p, pinv, 0.5 * d

    @functools.cached_property
    def _blade_transforms(self) -> tuple[np.ndarray, np.ndarray] | None:
        p, pinv, _ = self._orthogonal_frame
        if np.array_equal(p, np.eye(self.dim)):
            return None
        if self.dim > MAX_TRANSFORM_DIM:
            raise UsageError(f"non-orthogonal Clifford products need dim ≤ {MAX_TRANSFORM_DIM}")
        # blade coordinates: e-coords = ∧P · f-coords
        return exterior_power(p), exterior_power(pinv)

    def to_dict(self) -> dict:
        g = np.asarray(self.gram)
        out: dict = {"dim": self.dim, "gram": [float(x) for x in g.real.ravel()]}
        if self.scalar_kind == "complex":
            out["gram_im"] = [float(x) for x in g.imag.ravel()]
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "QuadraticSpace":
        n = int(data["dim"])
        g = np.array(data["gram"], dtype=float).reshape(n, n)
        if "gram_im" in data:
            g = g + 1j * np.array(data["gram_im"], dtype=float).reshape(n, n)
        return cls(g)


def split_space(n: int) -> QuadraticSpace:
    """V ⊕ V* with vector layout [v; α] and pairing ⟨v⊕α, v'⊕α'⟩ = α(v') + α'(v)."""
    z = np.zeros((n, n))
    i = np.eye(n)
    return QuadraticSpace(np.block([[z, i], [i, z]]))


# ---------------------------------------------------------------------------
# multivectors


@dataclass(frozen=True, eq=False)
class Multivector:
    """Element of ∧V or Cl(V) stored as a dense blade coefficient vector."""

    dim: int
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.array(self.coeffs)
        if c.shape != (1 << self.dim,):
            raise UsageError(f"expected {1 << self.dim} coefficients, got shape {c.shape}")
        if not np.iscomplexobj(c):
            c = c.astype(float)
        elif not np.any(c.imag):
            c = c.real.copy()
        peak = np.abs(c).max() if c.size else 0.0
        if peak > 0:
            c[np.abs(c) < DROP_TOL * peak] = 0
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    # constructors -------------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "Multivector":
        return cls(dim, np.zeros(1 << dim))

    @classmethod
    def scalar(cls, dim: int, value: complex = 1.0) -> "Multivector":
        c = np.zeros(1 << dim, dtype=np.result_type(value, float))
        c[0] = value
        return cls(dim, c)

    @classmethod
    def blade(cls, dim: int, indices: Sequence[int], coeff: complex = 1.0) -> "Multivector":
        """The wedge e_{i1}∧…∧e_{ik} in the given (possibly unsorted) order."""
        s, idx = _sorting_sign(indices)
        if any(i < 0 or i >= dim for i in idx):
            raise UsageError(f"blade indices {tuple(indices)} out of range for dim {dim}")
        c = np.zeros(1 << dim, dtype=np.result_type(coeff, float))
        if s:
            c[mask_of(idx)] = s * coeff
        return cls(dim, c)

    @classmethod
    def vector(cls, v: Sequence[complex]) -> "Multivector":
        v = np.asarray(v)
        n = v.shape[0]
        c = np.zeros(1 << n, dtype=np.result_type(v, float))
        c[1 << np.arange(n)] = v
        return cls(n, c)

    @classmethod
    def top(cls, dim: int, coeff: complex = 1.0) -> "Multivector":
        return cls.blade(dim, range(dim), coeff)

    @classmethod
    def from_terms(cls, dim: int, terms: Mapping[Sequence[int], complex] | Iterable) -> "Multivector":
        items = terms.items() if isinstance(terms, Mapping) else terms
        out = np.zeros(1 << dim, dtype=complex)
        for idx, val in items:
            out += Multivector.blade(dim, idx, val).coeffs
        return cls(dim, out)

    # views --------------------------------------------------------------

    @property
    def terms(self) -> dict[tuple[int, ...], complex]:
        nz = np.flatnonzero(self.coeffs)
        order = sorted(nz, key=lambda m: (int(grades(self.dim)[m]), indices_of(int(m))))
        return {indices_of(int(m)): self.coeffs[m].item() for m in order}

    def grade(self, k: int) -> "Multivector":
        c = np.where(grades(self.dim) == k, self.coeffs, 0)
        return Multivector(self.dim, c)

    def even(self) -> "Multivector":
        return Multivector(self.dim, np.where(grades(self.dim) % 2 == 0, self.coeffs, 0))

    def odd(self) -> "Multivector":
        return Multivector(self.dim, np.where(grades(self.dim) % 2 == 1, self.coeffs, 0))

    def parity(self) -> int | None:
        """0 or 1 for homogeneous parity, None for mixed; zero counts as even."""
        g = grades(self.dim)[np.flatnonzero(self.coeffs)] % 2
        if g.size == 0 or np.all(g == 0):
            return 0
        if np.all(g == 1):
            return 1
        return None

    def degrees(self) -> set[int]:
        return set(int(k) for k in grades(self.dim)[np.flatnonzero(self.coeffs)])

    @property
    def scalar_part(self) -> complex:
        return self.coeffs[0].item()

    @property
    def top_coeff(self) -> complex:
        return self.coeffs[-1].item()

    def vector_part(self) -> np.ndarray:
        return self.coeffs[1 << np.arange(self.dim)].copy()

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    # arithmetic ---------------------------------------------------------

    def _check(self, other: "Multivector") -> None:
        if not isinstance(other, Multivector) or other.dim != self.dim:
            raise UsageError("multivectors belong to different spaces")

    def __add__(self, other: "Multivector") -> "Multivector":
        self._check(other)
        return Multivector(self.dim, self.coeffs + other.coeffs)

    def __sub__(self, other: "Multivector") -> "Multivector":
        self._check(other)
        return Multivector(self.dim, self.coeffs - other.coeffs)

    def __neg__(self) -> "Multivector":
        return Multivector(self.dim, -self.coeffs)

    def __mul__(self, s: complex) -> "Multivector":
        if isinstance(s, Multivector):
            raise UsageError("use wedge or clifford_product for products of multivectors")
        return Multivector(self.dim, self.coeffs * s)

    __rmul__ = __mul__

    def __truediv__(self, s: complex) -> "Multivector":
        return Multivector(self.dim, self.coeffs / s)

    def allclose(self, other: "Multivector", atol: float = 1e-10) -> bool:
        self._check(other)
        return bool(np.allclose(self.coeffs, other.coeffs, rtol=0, atol=atol))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "terms": [
                {"indices": list(k), "re": float(np.real(v)), "im": float(np.imag(v))}
                for k, v in self.terms.items()
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Multivector":
        return cls.from_terms(
            int(data["dim"]),
            [(t["indices"], complex(t["re"], t.get("im", 0.0))) for t in data["terms"]],
        )

    def __repr__(self) -> str:
        body = " + ".join(f"({v:.6g})e{list(k)}" for k, v in self.terms.items()) or "0"
        return f"Multivector(dim={self.dim}: {body})"


# ---------------------------------------------------------------------------
# exterior algebra


def _pairs(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ia = np.flatnonzero(a)
    ib = np.flatnonzero(b)
    return ia[:, None], ib[None, :]


PAIRWISE_LIMIT = 1 << 14


def wedge(a: Multivector, b: Multivector) -> Multivector:
    a._check(b)
    n = a.dim
    ia, ib = np.flatnonzero(a.coeffs), np.flatnonzero(b.coeffs)
    out = np.zeros(1 << n, dtype=np.result_type(a.coeffs, b.coeffs))
    if ia.size * ib.size <= PAIRWISE_LIMIT:
        ia, ib = ia[:, None], ib[None, :]
        if ia.size and ib.size:
            ok = (ia & ib) == 0
            val = _sign(swap_parity(ia, ib, n)) * a.coeffs[ia] * b.coeffs[ib]
            np.add.at(out, (ia | ib)[ok], val[ok])
        return Multivector(n, out)
    # one blade of the smaller factor at a time; targets are then distinct
    if ib.size <= ia.size:
        for mb in ib.tolist():
            ok = ia[(ia & mb) == 0]
            par = np.zeros(ok.shape, dtype=np.int64)
            for j in indices_of(mb):  # elements of A above each j ∈ B
                par += np.bitwise_count(ok >> (j + 1))
            out[ok | mb] += _sign(par & 1) * a.coeffs[ok] * b.coeffs[mb]
    else:
        for ma in ia.tolist():
            ok = ib[(ib & ma) == 0]
            par = np.zeros(ok.shape, dtype=np.int64)
            for i in indices_of(ma):  # elements of B below each i ∈ A
                par += np.bitwise_count(ok & ((1 << i) - 1))
            out[ok | ma] += _sign(par & 1) * a.coeffs[ma] * b.coeffs[ok]
    return Multivector(n, out)


def wedge_all(items: Sequence[Multivector], dim: int | None = None) -> Multivector:
    if not items:
        if dim is None:
            raise UsageError("empty wedge needs a dimension")
        return Multivector.scalar(dim)
    out = items[0]
    for x in items[1:]:
        out = wedge(out, x)
    return out


def exp_wedge(x: Multivector) -> Multivector:
    """Exponential in the exterior algebra for even nilpotent x."""
    if x.parity() != 0:
        raise UsageError("exp_wedge needs an even element")
    if abs(x.scalar_part) > 0:
        raise UsageError("exp_wedge needs vanishing scalar part")
    out = Multivector.scalar(x.dim)
    term = Multivector.scalar(x.dim)
    for k in range(1, x.dim // 2 + 1):
        term = wedge(term, x) / k
        out = out + term
    return out


def contract(alpha: Sequence[complex], x: Multivector) -> Multivector:
    """ι(α)x for a covector α acting on ∧V (odd derivation)."""
    return Multivector(x.dim, contraction_matrix(x.dim, alpha) @ x.coeffs)


def transpose(x: Multivector) -> Multivector:
    k = grades(x.dim)
    return Multivector(x.dim, np.where((k * (k - 1) // 2) % 2 == 1, -x.coeffs, x.coeffs))


def parity_involution(x: Multivector) -> Multivector:
    return Multivector(x.dim, np.where(grades(x.dim) % 2 == 1, -x.coeffs, x.coeffs))


def exterior_power(m: np.ndarray) -> np.ndarray:
    """Matrix of ∧M on blade coordinates: ∧M(e_A) = M e_{a1} ∧ … ∧ M e_{ak}.

    ``m`` may be rectangular (rows = target dim, cols = source dim).
    """
    m = np.asarray(m)
    rows, cols = m.shape
    out = np.zeros((1 << rows, 1 << cols), dtype=np.result_type(m, float))
    out[0, 0] = 1
    for mask in range(1, 1 << cols):
        top = mask.bit_length() - 1
        prev = mask ^ (1 << top)
        col = out[:, prev]
        k = bin(prev).count("1")
        # (prev blade) ∧ v = (-1)^k v ∧ (prev blade)
        out[:, mask] = (-1) ** k * (wedge_matrix(rows, m[:, top]) @ col)
    return out


def pullback(m: np.ndarray, phi: Multivector) -> Multivector:
    """Pull back a form on W along the linear map m: V → W (m is dim W × dim V)."""
    m = np.asarray(m)
    if m.shape[0] != phi.dim:
        raise UsageError("pullback map does not match the form's dimension")
    rows, cols = m.shape
    rowvecs = [Multivector.vector(m[i]) if cols else None for i in range(rows)]
    out = np.zeros(1 << cols, dtype=np.result_type(phi.coeffs, m, float))
    cache: dict[int, Multivector] = {0: Multivector.scalar(cols)}

    def image(mask: int) -> Multivector:
        if mask not in cache:
            top = mask.bit_length() - 1
            cache[mask] = wedge(image(mask ^ (1 << top)), rowvecs[top])
        return cache[mask]

    for mask in np.flatnonzero(phi.coeffs):
        out += phi.coeffs[mask] * image(int(mask)).coeffs
    return Multivector(cols, out)


# ---------------------------------------------------------------------------
# sparse operator building blocks


@functools.lru_cache(maxsize=None)
def _generator_matrices(n: int) -> tuple[tuple[sp.csr_matrix, ...], tuple[sp.csr_matrix, ...]]:
    """(ε(e^i), ι(e^i)) for i < n as sparse matrices on 2**n coefficients."""
    size = 1 << n
    masks = np.arange(size, dtype=np.int64)
    eps, iota = [], []
    for i in range(n):
        bit = 1 << i
        below = np.bitwise_count(masks & (bit - 1)) % 2
        sgn = 1.0 - 2.0 * below
        free = (masks & bit) == 0
        src = masks[free]
        eps.append(sp.csr_matrix((sgn[free], (src | bit, src)), shape=(size, size)))
        src = masks[~free]
        iota.append(sp.csr_matrix((sgn[~free], (src ^ bit, src)), shape=(size, size)))
    return tuple(eps), tuple(iota)


def _combine(mats: Sequence[sp.csr_matrix], coeffs: Sequence[complex], size: int) -> sp.csr_matrix:
    out = sp.csr_matrix((size, size), dtype=np.result_type(np.asarray(coeffs), float))
    for m, c in zip(mats, coeffs):
        if c != 0:
            out = out + c * m
    return out


def wedge_matrix(n: int, v: Sequence[complex]) -> sp.csr_matrix:
    """ε(v): x ↦ v ∧ x."""
    return _combine(_generator_matrices(n)[0], np.asarray(v), 1 << n)


def contraction_matrix(n: int, alpha: Sequence[complex]) -> sp.csr_matrix:
    """ι(α): the odd derivation with ι(α)e_i = α_i."""
    return _combine(_generator_matrices(n)[1], np.asarray(alpha), 1 << n)


def parity_matrix(n: int) -> sp.csr_matrix:
    return sp.diags(1.0 - 2.0 * (grades(n) % 2)).tocsr()


@dataclass(frozen=True, eq=False)
class AlgebraOperator:
    """A linear operator on 2**dim blade coefficients with a provenance tag."""

    matrix: sp.spmatrix | np.ndarray
    kind: str

    KINDS = ("left-clifford", "right-clifford-graded", "wedge", "contraction", "module", "composite")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise UsageError(f"unknown operator kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0]).bit_length() - 1

    def __call__(self, x: Multivector) -> Multivector:
        if x.dim != self.dim:
            raise UsageError("operator and multivector dimensions differ")
        return Multivector(x.dim, self.matrix @ x.coeffs)

    def __matmul__(self, other: "AlgebraOperator") -> "AlgebraOperator":
        return AlgebraOperator(self.matrix @ other.matrix, "composite")

    def dense(self) -> np.ndarray:
        m = self.matrix
        return m.toarray() if sp.issparse(m) else np.asarray(m)


def wedge_operator(n: int, v: Sequence[complex]) -> AlgebraOperator:
    return AlgebraOperator(wedge_matrix(n, v), "wedge")


def contraction_operator(n: int, alpha: Sequence[complex]) -> AlgebraOperator:
    return AlgebraOperator(contraction_matrix(n, alpha), "contraction")


# ---------------------------------------------------------------------------
# Clifford algebra


def _check_space(q: QuadraticSpace, *xs: Multivector) -> None:
    for x in xs:
        if not isinstance(x, Multivector) or x.dim != q.dim:
            raise UsageError("multivector does not belong to this quadratic space")


def _orthogonal_product(a: np.ndarray, b: np.ndarray, squares: np.ndarray) -> np.ndarray:
    n = squares.shape[0]
    ia, ib = _pairs(a, b)
    out = np.zeros(1 << n, dtype=np.result_type(a, b, squares))
    if ia.size == 0 or ib.size == 0:
        return out
    common = ia & ib
    weight = np.ones(common.shape, dtype=squares.dtype)
    for j in range(n):
        weight = np.where((common >> j) & 1, weight * squares[j], weight)
    val = _sign(swap_parity(ia, ib, n)) * weight * a[ia] * b[ib]
    np.add.at(out, np.broadcast_to(ia ^ ib, val.shape), val)
    return out


def clifford_product(q: QuadraticSpace, a: Multivector, b: Multivector) -> Multivector:
    """Product in Cl(V) of two elements in symbol storage."""
    _check_space(q, a, b)
    _, _, squares = q._orthogonal_frame
    transforms = q._blade_transforms
    if transforms is None:
        return Multivector(q.dim, _orthogonal_product(a.coeffs, b.coeffs, squares))
    to_e, to_f = transforms
    prod = _orthogonal_product(to_f @ a.coeffs, to_f @ b.coeffs, squares)
    return Multivector(q.dim, to_e @ prod)


def clifford_product_all(q: QuadraticSpace, items: Sequence[Multivector]) -> Multivector:
    out = Multivector.scalar(q.dim)
    for x in items:
        out = clifford_product(q, out, x)
    return out


def quantize(q: QuadraticSpace, a: Multivector) -> Multivector:
    """q: ∧V → Cl(V). Coordinates are shared, so this is a checked identity."""
    _check_space(q, a)
    return a


def symbol(q: QuadraticSpace, x: Multivector) -> Multivector:
    """q⁻¹: Cl(V) → ∧V."""
    _check_space(q, x)
    return x


def monomial(q: QuadraticSpace, vectors: Sequence[Sequence[complex]]) -> Multivector:
    """The Clifford monomial v1·v2⋯vr."""
    return clifford_product_all(q, [Multivector.vector(v) for v in vectors])


def commutator(q: QuadraticSpace, x: Multivector, y: Multivector) -> Multivector:
    """Graded commutator [x, y] = xy − (−1)^{|x||y|} yx, extended bilinearly."""
    out = Multivector.zero(q.dim)
    for xp in (x.even(), x.odd()):
        for yp in (y.even(), y.odd()):
            if xp.is_zero() or yp.is_zero():
                continue
            s = -1 if (xp.parity() == 1 and yp.parity() == 1) else 1
            out = out + clifford_product(q, xp, yp) - s * clifford_product(q, yp, xp)
    return out


def supertrace(x: Multivector) -> complex:
    """str(x): the coefficient of the top blade e_0∧…∧e_{n−1} in the symbol."""
    return x.top_coeff


def supertrace_pairing(q: QuadraticSpace, x: Multivector, y: Multivector) -> complex:
    """(x, y)_Cl = str(xᵀ·y)."""
    return supertrace(clifford_product(q, transpose(x), y))


def pin_norm(q: QuadraticSpace, x: Multivector) -> Multivector:
    """Nm(x) = xᵀx."""
    return clifford_product(q, transpose(x), x)


def module_quantize(gram: np.ndarray, generators: Sequence, y: Multivector):
    """Image of q(y) under the Cl(V)-module map sending e_i to ``generators[i]``.

    Uses q(e_a ∧ y') = e_a q(y') − ½ q(ι(B♭e_a) y') for a below every index of y'.
    The generators can be any objects supporting ``@``, ``+`` and scalar ``*``
    (sparse or dense matrices).
    """
    gram = np.asarray(gram)
    n = y.dim
    if len(generators) != n or gram.shape != (n, n):
        raise UsageError("generator count and gram size must match the multivector dimension")
    size = generators[0].shape[0] if n else 1
    ident = sp.identity(size, format="csr") if (n == 0 or sp.issparse(generators[0])) else np.eye(size)
    memo: dict[int, object] = {0: ident}

    def image(mask: int):
        if mask in memo:
            return memo[mask]
        idx = indices_of(mask)
        a, rest = idx[0], mask ^ (1 << idx[0])
        out = generators[a] @ image(rest)
        for pos, b in enumerate(idx[1:]):
            if gram[a, b] != 0:
                out = out - (0.5 * gram[a, b] * (-1) ** pos) * image(rest ^ (1 << b))
        memo[mask] = out
        return out

    total = None
    for mask in np.flatnonzero(y.coeffs):
        term = y.coeffs[mask] * image(int(mask))
        total = term if total is None else total + term
    return total if total is not None else 0 * ident


def _vector_ops(q: QuadraticSpace) -> tuple[list, list]:
    n = q.dim
    eps, iota = _generator_matrices(n)
    left, right = [], []
    for i in range(n):
        half = contraction_matrix(n, 0.5 * q.gram[i])
        left.append((eps[i] + half).tocsr())
        right.append((eps[i] - half).tocsr())
    return left, right


def left_operator(q: QuadraticSpace, x: Multivector) -> AlgebraOperator:
    """l^Cl(x): y ↦ x·y; on vectors l(v) = ε(v) + ½ι(B♭v)."""
    _check_space(q, x)
    left, _ = _vector_ops(q)
    return AlgebraOperator(sp.csr_matrix(module_quantize(q.gram, left, x)), "left-clifford")


def right_operator(q: QuadraticSpace, x: Multivector) -> AlgebraOperator:
    """Graded right multiplication r^Cl(x): y ↦ (−1)^{|x||y|} y·x.

    On vectors r(v) = ε(v) − ½ι(B♭v). Ungraded right multiplication by v is
    r(v)∘P with P the parity involution; it is an anti-homomorphism, so
    x ↦ R(xᵀ) is a homomorphism and module quantization applies.
    """
    _check_space(q, x)
    _, right = _vector_ops(q)
    par = parity_matrix(q.dim)
    ungraded = [(r @ par).tocsr() for r in right]
    out = None
    for part in (x.even(), x.odd()):
        if part.is_zero():
            continue
        mat = sp.csr_matrix(module_quantize(q.gram, ungraded, transpose(part)))
        if part.parity() == 1:
            mat = mat @ par
        out = mat if out is None else out + mat
    if out is None:
        out = sp.csr_matrix((1 << q.dim, 1 << q.dim))
    return AlgebraOperator(out.tocsr(), "right-clifford-graded")


def clifford_exp(q: QuadraticSpace, x: Multivector) -> Multivector:
    """exp(x) in Cl(V) for even x via the regular representation."""
    _check_space(q, x)
    if x.parity() != 0:
        raise UsageError("clifford_exp needs an even element")
    if q.dim > MAX_EXP_DIM:
        raise UsageError(f"clifford_exp supports dim ≤ {MAX_EXP_DIM}")
    mat = left_operator(q, x).dense()
    return Multivector(q.dim, scipy.linalg.expm(mat)[:, 0])


# ---------------------------------------------------------------------------
# star operator on a top blade


def _star_signs(n: int) -> np.ndarray:
    masks = np.arange(1 << n, dtype=np.int64)
    total = np.zeros(1 << n, dtype=np.int64)
    for j in range(n):
        total += ((masks >> j) & 1) * j
    return 1.0 - 2.0 * (total % 2)


def star_operator(mu: Multivector, phi: Multivector) -> Multivector:
    """⋆φ = ι(φ)μ with ι(e^{a1}∧…∧e^{ak}) = ι(e^{a1})∘…∘ι(e^{ak})."""
    if mu.dim != phi.dim:
        raise UsageError("μ and φ live over different dimensions")
    c = mu.top_coeff
    if c == 0 or mu.degrees() != {mu.dim}:
        raise UsageError("μ must be a nonzero top-degree element")
    n = mu.dim
    full = (1 << n) - 1
    masks = np.arange(1 << n)
    out = np.zeros(1 << n, dtype=np.result_type(phi.coeffs, c))
    out[full ^ masks] = c * _star_signs(n) * phi.coeffs
    return Multivector(n, out)


def inverse_star(mu: Multivector, x: Multivector) -> Multivector:
    """⋆⁻¹ for the same top blade μ."""
    if mu.dim != x.dim:
        raise UsageError("μ and x live over different dimensions")
    c = mu.top_coeff
    if c == 0 or mu.degrees() != {mu.dim}:
        raise UsageError("μ must be a nonzero top-degree element")
    n = mu.dim
    full = (1 << n) - 1
    masks = np.arange(1 << n)
    out = np.zeros(1 << n, dtype=np.result_type(x.coeffs, c))
    out[masks] = x.coeffs[full ^ masks] * _star_signs(n) / c
    return Multivector(n, out)


def wedge_pairing(phi: Multivector, psi: Multivector) -> complex:
    """(φ, ψ) = [φᵀ ∧ ψ]_top on an exterior algebra."""
    return wedge(transpose(phi), psi).top_coeff
