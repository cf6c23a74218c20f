"""Ricci form and scalar curvature of induced Kähler metrics, closed formulas against the Levi-Civita oracle.

Conventions: 2-forms are antisymmetric matrices α[i, j] = α(∂_i, ∂_j); J acts on
1-forms by (Jα)(v) = −α(Jv); the Ricci form is ρ(a, b) = Ric(Ja, b), matching
ω(a, b) = g_K(Ja, b). The Hodge star of a top form uses the Kähler volume
Vol = ω²/2 = Pf(ω) dx⁰∧dx¹∧dx²∧dx³.

``scalar_formula`` is ∗(ω∧ρ), which for a Kähler surface is half the Riemannian
scalar curvature; reports carry both and compare 2·formula with the oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import calculus as calc
from . import jets
from .fields import Field, ScalarField
from .jets import Jet, einsum
from .jstruct import h_gradient_residual
from .kahler import KahlerCandidate, iota_field
from .optics import shear_coefficients

FORMULA_TO_RIEMANNIAN = 2.0


class CurvatureHypothesisError(ValueError):
    """A closed formula was requested outside its hypotheses; ``residual`` names the failing check."""

    def __init__(self, residual: str, value: float, tol: float):
        super().__init__(f"hypothesis '{residual}' fails: residual {value:.3e} > {tol:.1e}")
        self.residual = residual
        self.value = value


# ---------------------------------------------------------------------------
# forms


def wedge22(a: np.ndarray, b: np.ndarray) -> float:
    """Coefficient of dx⁰∧dx¹∧dx²∧dx³ in a∧b for 2-forms on a 4-manifold."""
    return float(a[0, 1] * b[2, 3] - a[0, 2] * b[1, 3] + a[0, 3] * b[1, 2]
                 + a[1, 2] * b[0, 3] - a[1, 3] * b[0, 2] + a[2, 3] * b[0, 1])


def pfaffian(w: np.ndarray) -> float:
    return float(w[0, 1] * w[2, 3] - w[0, 2] * w[1, 3] + w[0, 3] * w[1, 2])


def hodge_top(coeff: float, omega: np.ndarray) -> float:
    """∗ of coeff·dx⁰¹²³ in the Kähler orientation."""
    return coeff / pfaffian(omega)


def star_vol_residual(cand: KahlerCandidate, p) -> float:
    """|∗Vol − 1| with Vol = ω²/2 checked against sqrt(det g_K)."""
    w = cand.omega(p)
    return abs(abs(pfaffian(w)) / np.sqrt(np.linalg.det(cand.gK(p))) - 1.0)


def J_one_form_jet(J: Field, alpha_jet: Jet, p, order: int) -> Jet:
    """(Jα)_i = −α_a J^a_i."""
    return -einsum("a,ai->i", alpha_jet, J.jet(p, order))


def dJd_jet(J: Field, L: Field, p, order: int = 0) -> Jet:
    """d(J dL) as a 2-form jet."""
    dL = L.jet(p, order + 2).grad()
    beta = J_one_form_jet(J, dL, p, order + 1)
    D = beta.grad()
    return D.T - D


def ricci_form_general(mu: Field, nu: Field, J: Field, p) -> np.ndarray:
    """ρ = −½ dJd log(μ/ν)."""
    p = tuple(float(v) for v in p)
    ratio = float(mu(p)) / float(nu(p))
    if not ratio > 0:
        raise ValueError(f"mu/nu must be positive, got {ratio:.6g}")
    L = ScalarField(mu.chart, lambda q, n: jets.log(mu.jet(q, n) / nu.jet(q, n)), "log(mu/nu)")
    return -0.5 * dJd_jet(J, L, p).value


def ricci_form_oracle(cand: KahlerCandidate, p) -> np.ndarray:
    """ρ(a, b) = Ric_K(Ja, b) from the Levi-Civita curvature of g_K."""
    ric = calc.curvature(cand.gK, p)["ricci"]
    Jm = cand.J(p)
    return Jm.T @ ric


def scalar_oracle(cand: KahlerCandidate, p) -> float:
    p = tuple(float(v) for v in p)
    ev = np.linalg.eigvalsh(cand.gK(p))
    if ev.min() <= 0:
        raise ValueError(f"g_K is not positive definite at {p}")
    return calc.curvature(cand.gK, p)["scalar"]


# ---------------------------------------------------------------------------
# functions of τ


def tau_derivative(F: Field, tau: Field) -> ScalarField:
    """F′ = dF/dτ for F a function of τ, via dF·dτ/|dτ|² in coordinates."""

    def fn(q, n):
        dF = F.jet(q, n + 1).grad()
        dt = tau.jet(q, n + 1).grad()
        return (dF @ dt) / (dt @ dt)

    return ScalarField(F.chart, fn, f"{F.name}'")


@dataclass
class CurvatureInputs:
    """Scalar pieces of the closed formulas, all as jet fields."""

    cand: KahlerCandidate
    f: ScalarField
    fprime: ScalarField
    ell: Field
    iota: ScalarField
    r_base: Field
    a_coeff: ScalarField
    b_coeff: ScalarField
    p_len: ScalarField
    q_len: ScalarField
    mu: ScalarField = None
    nu: Field = None


def _solve_a_b(cand: KahlerCandidate, q, n):
    """Jdτ = a k♭ + b dτ, solved on (k, t)."""
    g, k, t, tau = cand.g, cand.k, cand.t, cand.tau
    G = g.jet(q, n)
    K, T = k.jet(q, n), t.jet(q, n)
    dtau = tau.jet(q, n + 1).grad()
    Jd = J_one_form_jet(cand.J, dtau, q, n)
    r1, r2 = Jd @ K, Jd @ T
    kk, kt = K @ (G @ K), K @ (G @ T)
    dk, dt = dtau @ K, dtau @ T
    det = kk * dt - kt * dk
    a = (r1 * dt - r2 * dk) / det
    b = (kk * r2 - kt * r1) / det
    return a, b


def curvature_inputs(cand: KahlerCandidate, p, r_base: Field | None = None) -> CurvatureInputs:
    g, k, t, tau = cand.g, cand.k, cand.t, cand.tau
    chart = g.chart
    fr = cand.frame(p)
    f = ScalarField(chart, lambda q, n: cand.f(tau.jet(q, n)), "f")
    fp = ScalarField(chart, lambda q, n: cand.f.prime(tau.jet(q, n)), "f'")
    r = r_base if r_base is not None else ScalarField(chart, lambda q, n: jets.algebra(chart.dim, n).constant(1.0), "r")
    return CurvatureInputs(
        cand=cand, f=f, fprime=fp, ell=cand.ell, iota=iota_field(g, k, fr), r_base=r,
        a_coeff=ScalarField(chart, lambda q, n: _solve_a_b(cand, q, n)[0], "a"),
        b_coeff=ScalarField(chart, lambda q, n: _solve_a_b(cand, q, n)[1], "b"),
        p_len=calc.inner_field(g, k, k), q_len=calc.inner_field(g, t, t),
    )


# ---------------------------------------------------------------------------
# hypotheses


def _require(checks: dict, tol: float):
    for name, val in checks.items():
        if not val <= tol:
            raise CurvatureHypothesisError(name, float(val), tol)


def _dk_block_residual(cand: KahlerCandidate, p) -> float:
    """dk♭ has no H⊗V components."""
    fr = cand.frame(p)
    dk = calc.exterior_derivative(calc.flat_field(cand.g, cand.k), p)
    V = np.column_stack([cand.k(p), cand.t(p)])
    H = np.column_stack([fr.x, fr.y])
    return float(np.max(np.abs(H.T @ dk @ V)))


def common_hypotheses(cand: KahlerCandidate, p) -> dict:
    g, k, t = cand.g, cand.k, cand.t
    fr = cand.frame(p)
    sk = shear_coefficients(g, k, fr)
    st = shear_coefficients(g, t, fr)
    return {
        "commute": float(np.linalg.norm(calc.lie_bracket(k, t, p))),
        "k_shear_free": float(np.hypot(*sk)),
        "t_shear_free": float(np.hypot(*st)),
        "ell_of_tau": h_gradient_residual(g, cand.ell, fr),
        "dk_block": _dk_block_residual(cand, p),
    }


def geodesic_hypotheses(cand: KahlerCandidate, p) -> dict:
    g, k = cand.g, cand.k
    out = common_hypotheses(cand, p)
    out["k_geodesic"] = float(np.linalg.norm(calc.covariant_derivative(g, k, k, p)))
    out["k_constant_length"] = float(np.linalg.norm(calc.inner_field(g, k, k).jet(p, 1).grad().value))
    kk = float(k(p) @ g(p) @ k(p))
    out["k_nonnull"] = 0.0 if abs(kk) > 1e-9 else 1.0
    return out


def killing_hypotheses(cand: KahlerCandidate, p) -> dict:
    g, k, t = cand.g, cand.k, cand.t
    fr = cand.frame(p)
    out = common_hypotheses(cand, p)
    G = g(p)
    out["k_killing"] = float(np.max(np.abs(calc.lie_derivative_metric(g, k, p))))
    out["kt_zero"] = abs(float(k(p) @ G @ t(p)))
    out["q_nonzero"] = 0.0 if abs(float(t(p) @ G @ t(p))) > 1e-9 else 1.0
    out["p_nonzero"] = 0.0 if abs(float(k(p) @ G @ k(p))) > 1e-9 else 1.0
    out["p_of_tau"] = h_gradient_residual(g, calc.inner_field(g, k, k), fr)
    out["iota_of_tau"] = h_gradient_residual(g, iota_field(g, k, fr), fr)
    return out


# ---------------------------------------------------------------------------
# closed formulas


def _mu_geodesic(inp: CurvatureInputs) -> ScalarField:
    chart = inp.f.chart
    return ScalarField(chart, lambda q, n: -(inp.f.jet(q, n) * inp.fprime.jet(q, n) * inp.r_base.jet(q, n)
                                             * inp.iota.jet(q, n)), "mu")


def _mu_killing(inp: CurvatureInputs) -> ScalarField:
    chart = inp.f.chart

    def fn(q, n):
        f, fp = inp.f.jet(q, n), inp.fprime.jet(q, n)
        P = inp.p_len.jet(q, n)
        dP = tau_derivative(inp.p_len, inp.cand.tau).jet(q, n)
        return -(f * (fp + f * dP / P) * inp.r_base.jet(q, n) * inp.iota.jet(q, n) * P)

    return ScalarField(chart, fn, "mu")


def _second_term(cand: KahlerCandidate, L: Field, p) -> float:
    """∗[½ ω∧dJd L]."""
    w = cand.omega(p)
    return hodge_top(0.5 * wedge22(w, dJd_jet(cand.J, L, p).value), w)


def scalar_geodesic_case(inp: CurvatureInputs, p, tol: float = 1e-7, check: bool = True,
                         plus_sign: bool = False) -> float:
    """−½((log(f′f/ℓ))′ a f)′/(f f′) − ∗[½ ω∧dJd log(−rι)].

    Dividing ½((log(f′f/ℓ))′af)′ rι dτ∧k♭∧dx∧dy by Vol = −ff′rι dτ∧k♭∧dx∧dy
    gives the minus sign on the first term; ``plus_sign`` keeps the plus
    sign for comparison (the oracle rejects it whenever a is not constant).
    """
    cand = inp.cand
    p = tuple(float(v) for v in p)
    if check:
        _require(geodesic_hypotheses(cand, p), tol)
    chart, tau = cand.g.chart, cand.tau
    Lf = ScalarField(chart, lambda q, n: jets.log(inp.fprime.jet(q, n) * inp.f.jet(q, n) / inp.ell.jet(q, n)))
    A1 = tau_derivative(Lf, tau)
    A2 = ScalarField(chart, lambda q, n: A1.jet(q, n) * inp.a_coeff.jet(q, n) * inp.f.jet(q, n))
    first = 0.5 * float(tau_derivative(A2, tau)(p)) / (float(inp.f(p)) * float(inp.fprime(p)))
    if not plus_sign:
        first = -first
    Lr = ScalarField(chart, lambda q, n: jets.log(-(inp.r_base.jet(q, n) * inp.iota.jet(q, n))))
    return first - _second_term(cand, Lr, p)


def scalar_killing_case(inp: CurvatureInputs, p, tol: float = 1e-7, check: bool = True) -> float:
    """((f a P′)′ + 2 f a P′ p′/p)/(f(f′ + f p′/p)) − ½∗[ω∧dJd log r], a = −q/(pℓ)."""
    cand = inp.cand
    p = tuple(float(v) for v in p)
    if check:
        _require(killing_hypotheses(cand, p), tol)
    chart, tau = cand.g.chart, cand.tau
    dp = tau_derivative(inp.p_len, tau)
    a = ScalarField(chart, lambda q, n: -inp.q_len.jet(q, n) / (inp.p_len.jet(q, n) * inp.ell.jet(q, n)))

    def big_f(q, n):
        f = inp.f.jet(q, n)
        return f * (inp.fprime.jet(q, n) + f * dp.jet(q, n) / inp.p_len.jet(q, n))

    Pfun = ScalarField(chart, lambda q, n: -0.5 * jets.log(
        -(big_f(q, n) * inp.p_len.jet(q, n) * inp.iota.jet(q, n) / inp.ell.jet(q, n))))
    dP = tau_derivative(Pfun, tau)
    faP = ScalarField(chart, lambda q, n: inp.f.jet(q, n) * a.jet(q, n) * dP.jet(q, n))
    num = float(tau_derivative(faP, tau)(p)) + 2 * float(faP(p)) * float(dp(p)) / float(inp.p_len(p))
    first = num / float(ScalarField(chart, big_f)(p))
    Lr = ScalarField(chart, lambda q, n: jets.log(inp.r_base.jet(q, n)))
    return first - _second_term(cand, Lr, p)


def ricci_form_case(inp: CurvatureInputs, p, case: str) -> np.ndarray:
    inp.mu = _mu_geodesic(inp) if case == "geodesic" else _mu_killing(inp)
    inp.nu = inp.ell
    return ricci_form_general(inp.mu, inp.nu, inp.cand.J, p)


# ---------------------------------------------------------------------------
# reports


@dataclass
class CurvatureReport:
    point: tuple
    case: str
    ricci_form: np.ndarray
    scalar_formula: float
    scalar_oracle: float
    discrepancy: float
    ricci_discrepancy: float
    j_invariance: float
    b_coeff: Optional[float] = None
    extras: dict = field(default_factory=dict)

    @property
    def scalar_riemannian(self) -> float:
        return FORMULA_TO_RIEMANNIAN * self.scalar_formula


def curvature_report(cand: KahlerCandidate, p, case: str = "geodesic", r_base: Field | None = None,
                     tol: float = 1e-7) -> CurvatureReport:
    """Formula values for ``case`` (geodesic | killing) next to the oracle.

    Raises CurvatureHypothesisError naming the first failing hypothesis.
    """
    if case not in ("geodesic", "killing"):
        raise ValueError(f"unknown curvature case '{case}'")
    p = tuple(float(v) for v in p)
    inp = curvature_inputs(cand, p, r_base)
    if case == "geodesic":
        s = scalar_geodesic_case(inp, p, tol)
    else:
        s = scalar_killing_case(inp, p, tol)
    rho = ricci_form_case(inp, p, case)
    rho_o = ricci_form_oracle(cand, p)
    Jm = cand.J(p)
    so = scalar_oracle(cand, p)
    sr = FORMULA_TO_RIEMANNIAN * s
    return CurvatureReport(
        point=p, case=case, ricci_form=rho, scalar_formula=s, scalar_oracle=so,
        discrepancy=abs(sr - so) / (1 + abs(so)),
        ricci_discrepancy=float(np.max(np.abs(rho - rho_o)) / (1 + np.max(np.abs(rho_o)))),
        j_invariance=float(np.max(np.abs(Jm.T @ rho @ Jm - rho))),
        b_coeff=float(inp.b_coeff(p)),
        extras={"star_vol": star_vol_residual(cand, p)},
    )


def ricci_form_closed_residual(mu: Field, nu: Field, J: Field, p, h: float = 1e-3) -> float:
    """max |dρ| by central differences of the jet-computed ρ."""
    p = np.asarray(p, dtype=float)
    n = len(p)
    D = np.zeros((n, n, n))  # D[k, i, j] = ∂_k ρ_ij
    for kk in range(n):
        e = np.zeros(n)
        e[kk] = h
        D[kk] = (ricci_form_general(mu, nu, J, p + e) - ricci_form_general(mu, nu, J, p - e)) / (2 * h)
    d = np.einsum("kij->kij", D) + np.einsum("kij->ijk", D) + np.einsum("kij->jki", D)
    return float(np.max(np.abs(d)))
