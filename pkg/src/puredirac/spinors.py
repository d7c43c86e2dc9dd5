"""Spinors on matrix groups: the Pin lift τ and the map ℛ: Cl(𝔤) → ∧𝔤*.

Values of forms are left-trivialized (coframe θ^i, bit i of a multivector),
and μ is the top blade e_0∧…∧e_{n−1} of 𝔤. ℛ(x)|_g = ⋆⁻¹(q⁻¹(x·τ(g))),
where ⋆φ = ι(φ)μ.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .algebra import (
    Multivector,
    clifford_exp,
    clifford_product,
    exp_wedge,
    exterior_power,
    inverse_star,
    pullback,
    pin_norm,
    supertrace_pairing,
    transpose,
    wedge,
    wedge_pairing,
)
from .errors import DomainError, UsageError
from .group import (
    GroupPoint,
    adjoint,
    eta_tensor,
    exp_morphism_fiber,
    fiber_model,
    g0_rho,
    gauss_decompose,
    gauss_orbit_form,
    left_exterior_derivative,
    mult_morphism_fiber,
)
from .lie import (
    LieAlgebraData,
    cartan_three_tensor,
    cdybe_twist,
    clifford_differential,
    gauss_spinor,
    r_matrix,
    tau_alg,
)
from .linear import gauge_spinor, rho, rho_matrix, two_form, two_form_matrix


def mu_of(g: LieAlgebraData) -> Multivector:
    return Multivector.top(g.dim)


# ---------------------------------------------------------------------------
# the Pin lift


def tau_group(gp: GroupPoint) -> Multivector:
    """τ(g) ∈ Pin(𝔤): c·exp(τ(ξ)) for g = c·exp(ξ), c the component representative."""
    g = gp.group.algebra
    if gp.log is None:
        gp = gp.group.from_matrix(gp.matrix)
    out = clifford_exp(g.space, tau_alg(g, np.asarray(gp.log)))
    if gp.component:
        lifts = gp.group.component_lifts
        if len(lifts) < gp.component:
            raise UsageError(f"no Pin lift supplied for component {gp.component} of {gp.group.name}")
        out = clifford_product(g.space, lifts[gp.component - 1], out)
    return out


def tau_inverse(gp: GroupPoint) -> Multivector:
    """τ(g)⁻¹ = 𝖭(g)τ(g)ᵀ since 𝖭(g) = τ(g)ᵀτ(g) = ±1."""
    t = tau_group(gp)
    return transpose(t) * pin_norm_scalar(gp, t)


def pin_norm_scalar(gp: GroupPoint, tau: Multivector | None = None) -> float:
    """𝖭(g) = τ(g)ᵀτ(g) ∈ {±1}."""
    g = gp.group.algebra
    t = tau_group(gp) if tau is None else tau
    nm = pin_norm(g.space, t)
    val = nm.scalar_part
    if np.abs((nm - Multivector.scalar(g.dim, val)).coeffs).max() > 1e-9 or abs(abs(val) - 1) > 1e-9:
        raise DomainError("τ(g)ᵀτ(g) is not ±1")
    return float(np.real(val))


def covering_residual(gp: GroupPoint) -> float:
    """max over basis v of |(−1)^{|g|}τ(g)vτ(g)⁻¹ − Ad_g v|."""
    g = gp.group.algebra
    t, ti = tau_group(gp), tau_inverse(gp)
    sign = -1 if gp.parity else 1
    ad = adjoint(gp)
    out = 0.0
    for i in range(g.dim):
        v = Multivector.vector(np.eye(g.dim)[i])
        w = clifford_product(g.space, clifford_product(g.space, t, v), ti) * sign
        want = Multivector.vector(ad[:, i])
        out = max(out, float(np.abs((w - want).coeffs).max()))
    return out


# ---------------------------------------------------------------------------
# ℛ and its properties


def R_map(x: Multivector, gp: GroupPoint, tau: Multivector | None = None) -> Multivector:
    g = gp.group.algebra
    t = tau_group(gp) if tau is None else tau
    return inverse_star(mu_of(g), clifford_product(g.space, x, t))


def phi_G(gp: GroupPoint) -> Multivector:
    """φ_G = ℛ(1)."""
    return R_map(Multivector.scalar(gp.dim), gp)


def psi_G(gp: GroupPoint) -> Multivector:
    """ψ_G = ℛ(q(μ))."""
    return R_map(mu_of(gp.group.algebra), gp)


def R_derivatives(x: Multivector, gp: GroupPoint) -> list[Multivector]:
    """∂_{e_a^L}ℛ(x) = ⋆⁻¹q⁻¹(x·τ(g)·τ(e_a)), from τ(g exp tξ) = τ(g)exp(tτ(ξ))."""
    g = gp.group.algebra
    xt = clifford_product(g.space, x, tau_group(gp))
    mu = mu_of(g)
    eye = np.eye(g.dim)
    return [inverse_star(mu, clifford_product(g.space, xt, tau_alg(g, eye[a]))) for a in range(g.dim)]


def twisted_differential_of_R(x: Multivector, gp: GroupPoint) -> Multivector:
    """(d + η)ℛ(x) at g from exact left-frame derivatives."""
    g = gp.group.algebra
    value = R_map(x, gp)
    d = left_exterior_derivative(g, value, R_derivatives(x, gp))
    return d + wedge(eta_tensor(g), value)


def differential_residual(x: Multivector, gp: GroupPoint) -> float:
    """‖(d + η)ℛ(x) − ℛ(d^Cl x)‖ at g."""
    lhs = twisted_differential_of_R(x, gp)
    rhs = R_map(clifford_differential(gp.group.algebra, x), gp)
    return float(np.abs((lhs - rhs).coeffs).max(initial=0))


def e_xi_action(gp: GroupPoint, phi: Multivector) -> Multivector:
    """ρ(e(Ξ))φ = Σ Ξ^{ijk} ρ(e(e_i))ρ(e(e_j))ρ(e(e_k))φ."""
    g = gp.group.algebra
    fm = fiber_model(gp)
    eye = np.eye(g.dim)
    xi = cartan_three_tensor(g)
    out = Multivector.zero(g.dim)
    for mask in np.flatnonzero(xi.coeffs):
        i, j, k = (b for b in range(g.dim) if int(mask) >> b & 1)
        out = out + rho(fm.e(eye[i]), rho(fm.e(eye[j]), rho(fm.e(eye[k]), phi))) * xi.coeffs[mask]
    return out


def phi_equation_residual(gp: GroupPoint) -> float:
    """‖(d + η)φ_G‖."""
    return float(np.abs(twisted_differential_of_R(Multivector.scalar(gp.dim), gp).coeffs).max(initial=0))


def psi_equation_residual(gp: GroupPoint) -> float:
    """‖(d + η)ψ_G + ρ(e(Ξ))ψ_G‖."""
    lhs = twisted_differential_of_R(mu_of(gp.group.algebra), gp) + e_xi_action(gp, psi_G(gp))
    return float(np.abs(lhs.coeffs).max(initial=0))


def intertwining_residual(x: Multivector, zeta: np.ndarray, gp: GroupPoint) -> float:
    """‖ℛ(ρ^Cl(ζ)x) − ρ(s(ζ))ℛ(x)‖: ρ^Cl(ξ, ξ') = l(ξ) − r(ξ') with r graded."""
    from .lie import double_spinor_rep

    g = gp.group.algebra
    rep = double_spinor_rep(g)
    lhs = R_map(Multivector(g.dim, rep.vector(zeta) @ x.coeffs), gp)
    n = g.dim
    rhs = rho(fiber_model(gp).s(zeta[:n], zeta[n:]), R_map(x, gp))
    return float(np.abs((lhs - rhs).coeffs).max(initial=0))


def pairing_sign(gp: GroupPoint) -> float:
    """(−1)^{|g|(dim G+1)}𝖭(g)."""
    return (-1) ** (gp.parity * (gp.dim + 1)) * pin_norm_scalar(gp)


def volume_coefficient(g: LieAlgebraData) -> float:
    """c with (ℛ(x), ℛ(x'))|_e = c·(x, x')_Cl: the μ_G-coefficient of the wedge pairing."""
    n = g.dim
    mu = mu_of(g)
    return float(np.real(wedge_pairing(inverse_star(mu, Multivector.scalar(n)), inverse_star(mu, mu))))


def pairing_residual(x: Multivector, y: Multivector, gp: GroupPoint) -> float:
    """|(ℛ(x), ℛ(y)) − (−1)^{|g|(dim G+1)}𝖭(g)(x, y)_Cl·c| at g."""
    g = gp.group.algebra
    lhs = wedge_pairing(R_map(x, gp), R_map(y, gp))
    rhs = pairing_sign(gp) * supertrace_pairing(g.space, x, y) * volume_coefficient(g)
    return float(abs(lhs - rhs))


def left_translation_residual(x: Multivector, a: GroupPoint, gp: GroupPoint) -> float:
    """l_a*ℛ(x) = ℛ(x·τ(a)): left translation acts trivially on the left frame."""
    g = gp.group.algebra
    ag = GroupPoint(gp.group, a.matrix @ gp.matrix, None, gp.group.component_of(a.matrix @ gp.matrix))
    tau_ag = clifford_product(g.space, tau_group(a), tau_group(gp))
    lhs = R_map(x, ag, tau_ag)
    rhs = R_map(clifford_product(g.space, x, tau_group(a)), gp)
    return float(np.abs((lhs - rhs).coeffs).max(initial=0))


def right_translation_residual(x: Multivector, a: GroupPoint, gp: GroupPoint) -> float:
    """r_a*ℛ(x) = (−1)^{|a|(|g|+|x|)}ℛ(τ(a)x) for homogeneous x.

    Right translation by a pulls θ^L back through Ad_{a⁻¹}, so forms transform
    by ∧(Ad_{a⁻¹})ᵀ.
    """
    g = gp.group.algebra
    par = x.parity()
    if par is None:
        raise UsageError("x must be homogeneous")
    ga = GroupPoint(gp.group, gp.matrix @ a.matrix, None, gp.group.component_of(gp.matrix @ a.matrix))
    tau_ga = clifford_product(g.space, tau_group(gp), tau_group(a))
    value = R_map(x, ga, tau_ga)
    pull = exterior_power(np.linalg.inv(adjoint(a)).T)
    lhs = Multivector(g.dim, pull @ value.coeffs)
    sign = (-1) ** (a.parity * (gp.parity + par))
    rhs = R_map(clifford_product(g.space, tau_group(a), x), gp) * sign
    return float(np.abs((lhs - rhs).coeffs).max(initial=0))


# ---------------------------------------------------------------------------
# closed forms


def psi_explicit(gp: GroupPoint, sign: float = 1.0) -> Multivector:
    """det^{1/2}((1 + Ad_g)/2)·exp(¼B(((1 − Ad_g)/(1 + Ad_g))θ^L, θ^L)).

    ``sign`` selects the square root; psi_explicit_aligned fixes it from ψ_G.
    """
    g = gp.group.algebra
    ad = adjoint(gp)
    eye = np.eye(g.dim)
    plus = eye + ad
    if abs(np.linalg.det(plus)) < 1e-12:
        raise DomainError("1 + Ad_g is not invertible")
    cay = np.linalg.solve(plus.T, (eye - ad).T).T  # (1 − A)(1 + A)⁻¹
    # ¼B(Mθ, θ)(u, v) = ¼(B(Mu, v) − B(Mv, u)) = ½B(Mu, v) for B-skew M
    omega = 0.25 * (cay.T @ g.gram - g.gram @ cay)
    root = np.sqrt(complex(np.linalg.det(plus / 2)))
    return exp_wedge(two_form(omega)) * (sign * _real_if(root))


def psi_explicit_aligned(gp: GroupPoint) -> tuple[Multivector, float]:
    """Explicit ψ_G with the square-root sign chosen by continuity from the identity.

    Along t ↦ c·exp(tξ) the root is tracked at 33 samples by linear prediction; the sign at the
    component representative is fixed against ℛ(q(μ)).
    """
    desc = gp.group
    log = np.asarray(gp.log if gp.log is not None else desc.from_matrix(gp.matrix).log)
    base = desc.point(np.zeros_like(log), gp.component)
    ref = psi_G(base)
    cand = psi_explicit(base)
    sign = 1.0 if np.abs((ref - cand).coeffs).max() <= np.abs((ref + cand).coeffs).max() else -1.0
    prev = before = sign * _root_det_half(base)
    for t in np.linspace(0, 1, 33)[1:]:
        root = _root_det_half(desc.point(t * log, gp.component))
        guess = 2 * prev - before  # linear prediction carries the sign through simple zeros
        before, prev = prev, (root if abs(root - guess) <= abs(root + guess) else -root)
    final = _root_det_half(gp)
    s = 1.0 if abs(prev - final) <= abs(prev + final) else -1.0
    return psi_explicit(gp, s), s


def _root_det_half(gp: GroupPoint) -> complex:
    return np.sqrt(complex(np.linalg.det((np.eye(gp.dim) + adjoint(gp)) / 2)))


def _real_if(z: complex):
    return z.real if abs(z.imag) < 1e-14 * max(1.0, abs(z)) else z


def psi_hat_G(gp: GroupPoint) -> Multivector:
    """ψ̂_G = ℛ(x) for the Gauss spinor x."""
    return R_map(gauss_spinor(gp.group.algebra).x, gp)


def psi_hat_closed_form(gp: GroupPoint) -> Multivector:
    """g₀^ρ·exp(−ω_𝒪) on the big cell."""
    fac = gauss_decompose(gp)
    return exp_wedge(two_form(-gauss_orbit_form(gp))) * g0_rho(fac)


def psi_hat_from_r_matrix(gp: GroupPoint) -> Multivector:
    """ρ(exp(−½e(𝔯)))ψ_G, with e(𝔯) = Σ e(e_{−α})∧e(e_α) in 𝕋_gG."""
    g = gp.group.algebra
    fm = fiber_model(gp)
    r = two_form_matrix(r_matrix(g))
    es = np.column_stack([fm.e(v) for v in np.eye(g.dim)])
    eps = es @ r @ es.T
    return gauge_spinor(-0.5 * eps, psi_G(gp))


# ---------------------------------------------------------------------------
# multiplication


def _embed_forms(a: Multivector, b: Multivector) -> Multivector:
    """pr₁*a ∧ pr₂*b on 𝔤 ⊕ 𝔤."""
    # every index of the first factor precedes every index of the second, so no signs arise
    return Multivector(2 * a.dim, np.outer(b.coeffs, a.coeffs).ravel())


def mult_pullback_check(a: GroupPoint, b: GroupPoint) -> float:
    """‖e^{ς}∧Mult*ψ_G − ρ(exp(−e(γ)))(ψ_G¹⊗ψ_G²)‖ at (a, b)."""
    g = a.group.algebra
    n = g.dim
    mf = mult_morphism_fiber(a, b)
    tau_ab = clifford_product(g.space, tau_group(a), tau_group(b))
    psi_ab = R_map(mu_of(g), mf.product, tau_ab)
    pulled = pullback(mf.morphism.phi, psi_ab)
    lhs = wedge(exp_wedge(two_form(mf.morphism.omega)), pulled)
    fa, fb = fiber_model(a), fiber_model(b)
    dual = g.dual_basis()
    # e¹(v_i) and e²(v^i) are orthogonal, so q(e(γ)) = ½Σ e¹(v_i)·e²(v^i)
    op = None
    for i in range(n):
        e1 = _stack(fa.e(np.eye(n)[i]), np.zeros(2 * n))
        e2 = _stack(np.zeros(2 * n), fb.e(dual[:, i]))
        term = 0.5 * (rho_matrix(e1) @ rho_matrix(e2))
        op = term if op is None else op + term
    base = _embed_forms(psi_G(a), psi_G(b))
    rhs = Multivector(2 * n, scipy.sparse.linalg.expm_multiply(-op.tocsc(), base.coeffs.astype(complex)))
    return float(np.abs((lhs - rhs).coeffs).max(initial=0))


def _stack(w1: np.ndarray, w2: np.ndarray) -> np.ndarray:
    n = w1.shape[0] // 2
    return np.concatenate([w1[:n], w2[:n], w1[n:], w2[n:]])


# ---------------------------------------------------------------------------
# the exponential map and ℛ₀


def tau0(g: LieAlgebraData, nu: np.ndarray) -> Multivector:
    """τ₀(ν) = exp(d^∧ν) in ∧𝔤*, with ν ↦ B♭ν and (d^∧β)(a, b) = −β([a, b])."""
    beta = g.gram @ nu
    omega = -np.einsum("abk,k->ab", g.c, beta)
    return exp_wedge(two_form(omega))


def R0_map(y: Multivector, g: LieAlgebraData, nu: np.ndarray) -> Multivector:
    """ℛ₀(y)|_ν = ⋆⁻¹(y∧τ₀(ν)) for y ∈ ∧𝔤*, returned in the coframe dν^i of 𝔤.

    ⋆ uses the generator B♭μ of det 𝔤*; covectors on 𝔤* (elements of 𝔤) are
    carried to covectors on 𝔤 by B♭.
    """
    top = Multivector.top(g.dim, np.linalg.det(g.gram))
    value = inverse_star(top, wedge(y, tau0(g, nu)))
    return Multivector(g.dim, exterior_power(g.gram) @ value.coeffs)


def phi_lie(g: LieAlgebraData, nu: np.ndarray) -> Multivector:
    """(−1)^{n(n−1)/2}e^{−ι(π_{𝔤*})}μ_𝔤 with π_{𝔤*}|_ν = −d^∧ν (transported by B)."""
    from .linear import exp_neg_contraction

    n = g.dim
    beta = g.gram @ nu
    pi = np.einsum("abk,k->ab", g.c, beta)  # −d^∧ν as a bivector on 𝔤*
    bi = g.gram_inv
    # a bivector on 𝔤* ≅ 𝔤 acts on forms in the dν coframe through B⁻¹
    pi_forms = bi @ pi @ bi.T
    mu_g = Multivector.top(n)  # ∧B♭ of the dual generator μ*
    return exp_neg_contraction(pi_forms, mu_g) * (-1) ** (n * (n - 1) // 2)


def _e0_twist_operator(g: LieAlgebraData, nu: np.ndarray, eps: np.ndarray):
    """ρ(q(e₀(ε))) = Σ_{a<b} ε_ab ρ(e₀(e_a))ρ(e₀(e_b)); the e₀(e_a) are isotropic and orthogonal."""
    n = g.dim
    eye = np.eye(n)
    gens = [rho_matrix(np.concatenate([g.bracket(nu, eye[a]), g.gram @ eye[a]])) for a in range(n)]
    op = None
    for a in range(n):
        for b in range(a + 1, n):
            if eps[a, b] != 0:
                term = eps[a, b] * (gens[a] @ gens[b])
                op = term if op is None else op + term
    return op


def exp_pullback_sides(y: Multivector, g: LieAlgebraData, gp: GroupPoint) -> tuple[Multivector, Multivector]:
    """(exp*ℛ(q(y)), J^{1/2}e^{−ϖ}ρ(Ã^{−e₀(ε)})ℛ₀(B♭y)) at ν = log of gp."""
    nu = np.asarray(gp.log)
    ef = exp_morphism_fiber(g, nu)
    if not ef.regular:
        raise DomainError("ν is not a regular point of exp")
    n = g.dim
    lhs = Multivector(n, exterior_power(ef.d_exp.T) @ R_map(y, gp).coeffs)
    eps = cdybe_twist(g, nu).matrix()
    base = R0_map(Multivector(n, exterior_power(g.gram) @ y.coeffs), g, nu)
    op = _e0_twist_operator(g, nu, eps)
    coeffs = base.coeffs.astype(complex)
    if op is not None:
        coeffs = scipy.sparse.linalg.expm_multiply(-op.tocsc(), coeffs)
    twisted = Multivector(n, coeffs)
    rhs = wedge(exp_wedge(two_form(-ef.varpi)), twisted) * ef.J_sqrt
    return lhs, rhs


def exp_pullback_check(y: Multivector, g: LieAlgebraData, gp: GroupPoint) -> float:
    lhs, rhs = exp_pullback_sides(y, g, gp)
    return float(np.abs((lhs - rhs).coeffs).max(initial=0))


# ---------------------------------------------------------------------------
# highest-weight matrix coefficients on SL(n)


def _weight_multiplicities(weight, rank: int) -> np.ndarray:
    """Dominant weight as multiplicities of the fundamental weights ω_1, …, ω_rank."""
    if isinstance(weight, (int, np.integer)):
        if not 1 <= weight <= rank:
            raise UsageError(f"fundamental weight index must be in 1..{rank}")
        m = np.zeros(rank, dtype=int)
        m[weight - 1] = 1
        return m
    m = np.asarray(weight, dtype=int)
    if m.shape != (rank,) or np.any(m < 0):
        raise UsageError(f"dominant weight needs {rank} nonnegative multiplicities")
    return m


def _require_sl(gp: GroupPoint) -> int:
    if gp.group.kind not in ("special", "special-real"):
        raise UsageError("highest-weight coefficients are implemented for SL(n)")
    return gp.matrix.shape[0]


def delta_lambda(gp: GroupPoint, weight) -> complex:
    """Δ_λ(g) = Π_k (leading k-minor of g)^{m_k} for λ = Σ m_k ω_k.

    The highest-weight line of ∧^kℂⁿ is e_1∧…∧e_k, whose matrix coefficient
    is the leading k×k minor.
    """
    n = _require_sl(gp)
    m = _weight_multiplicities(weight, n - 1)
    out = 1.0 + 0j
    for k, mk in enumerate(m, start=1):
        if mk:
            out *= np.linalg.det(gp.matrix[:k, :k]) ** mk
    return out


def delta_lambda_derivatives(gp: GroupPoint, weight) -> np.ndarray:
    """∂_{e_a^L}Δ_λ, from d/dt det((g(1 + tX))_k) = det(M_k)·tr(M_k⁻¹(gX)_k)."""
    n = _require_sl(gp)
    m = _weight_multiplicities(weight, n - 1)
    value = delta_lambda(gp, weight)
    out = []
    for x in gp.group.algebra.matrices:
        gx = gp.matrix @ x
        total = 0.0
        for k, mk in enumerate(m, start=1):
            if mk:
                total += mk * np.trace(np.linalg.solve(gp.matrix[:k, :k], gx[:k, :k]))
        out.append(value * total)
    return np.array(out)


def weight_vector(g: LieAlgebraData, weight) -> np.ndarray:
    """B♯λ̃ ∈ 𝔱 for λ = Σ m_kω_k, with ω_k(H) = H_11 + … + H_kk."""
    cw = g.cartan
    if cw is None or g.matrices is None:
        raise UsageError("weights need Cartan-Weyl data and a matrix representation")
    t = list(cw.t_indices)
    n = g.matrices[0].shape[0]
    m = _weight_multiplicities(weight, n - 1)
    vals = np.array([sum(mk * np.trace(g.matrices[j][:k, :k]) for k, mk in enumerate(m, start=1)) for j in t])
    out = np.zeros(g.dim, dtype=np.result_type(vals, float))
    out[t] = np.linalg.solve(g.gram[np.ix_(t, t)], vals)
    return np.real_if_close(out)


def gauss_diffeq_check(gp: GroupPoint, weight) -> float:
    """‖(d + η − ρ(e(h_{λ+ρ})))(Δ_λψ̂_G)‖ at a cell point, h_ρ from the Gauss spinor."""
    g = gp.group.algebra
    gs = gauss_spinor(g)
    n = g.dim
    psi = R_map(gs.x, gp)
    dpsi = R_derivatives(gs.x, gp)
    delta = delta_lambda(gp, weight)
    ddelta = delta_lambda_derivatives(gp, weight)
    value = psi * delta
    derivs = [dpsi[a] * delta + psi * ddelta[a] for a in range(n)]
    lhs = left_exterior_derivative(g, value, derivs) + wedge(eta_tensor(g), value)
    h = gs.h_rho + weight_vector(g, weight)
    lhs = lhs - rho(fiber_model(gp).e(h), value)
    return float(np.abs(lhs.coeffs).max(initial=0))
