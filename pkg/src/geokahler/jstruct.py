"""The almost complex structure J built from (g, k, t), its Nijenhuis tensor,
and the integrability / admissibility condition suites."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import calculus as calc
from . import jets
from .fields import Field, MetricField, ScalarField, VectorField
from .jets import Jet, einsum
from .optics import SplitFrame, build_frame, pregeodesic_factor, shear_coefficients
from .split import acs_jet, split_jets


class AcsField(Field):
    """J_{g,k,t}: Jk = t, Jt = −k and the quarter turn on the oriented plane H."""

    def __init__(self, g: MetricField, k: Field, t: Field, orientation: int = 1):
        self.g, self.k, self.t = g, k, t
        self.orientation = int(orientation)
        n = g.chart.dim
        super().__init__(g.chart, (n, n), lambda p, order: acs_jet(g, k, t, p, order, self.orientation), "J")

    def opposite(self) -> "AcsField":
        return AcsField(self.g, self.k, self.t, -self.orientation)

    def frame(self, p) -> SplitFrame:
        return build_frame(self.g, self.k, self.t, p, self.orientation)

    def apply(self, X: Field) -> VectorField:
        """The vector field p ↦ J(p) X(p)."""
        return VectorField(self.chart, lambda p, n: self.jet(p, n) @ X.jet(p, n))


def build_J(g: MetricField, k: Field, t: Field, p, orientation: int = 1) -> np.ndarray:
    return acs_jet(g, k, t, tuple(float(v) for v in p), 0, orientation).value


# ---------------------------------------------------------------------------
# Nijenhuis tensor


def nijenhuis_tensor_jet(J: Field, p, order: int = 0) -> Jet:
    """N[k, i, j] = N(∂_i, ∂_j)^k."""
    Jj = J.jet(p, order + 1)
    D = Jj.grad()  # D[k, j, l] = ∂_l J^k_j
    J0 = Jj.truncate(order)
    a = einsum("li,kjl->kij", J0, D)
    b = einsum("kl,lij->kij", J0, D)  # J^k_l ∂_j J^l_i
    return a - a.swapaxes(1, 2) + b - b.swapaxes(1, 2)


def nijenhuis_tensor(J: Field, p) -> np.ndarray:
    return nijenhuis_tensor_jet(J, p, 0).value


def nijenhuis(J: Field, a: Field, b: Field, p) -> np.ndarray:
    """N(a, b) = [Ja, Jb] − J[Ja, b] − J[a, Jb] − [a, b] from brackets of the given fields."""
    chart = J.chart
    Ja = VectorField(chart, lambda q, n: J.jet(q, n) @ a.jet(q, n))
    Jb = VectorField(chart, lambda q, n: J.jet(q, n) @ b.jet(q, n))
    Jp = J(p)
    return (calc.lie_bracket(Ja, Jb, p) - Jp @ calc.lie_bracket(Ja, b, p)
            - Jp @ calc.lie_bracket(a, Jb, p) - calc.lie_bracket(a, b, p))


def nijenhuis_max(J: Field, p) -> float:
    return float(np.max(np.abs(nijenhuis_tensor(J, p))))


def lie_derivative_J(X: Field, J: Field, p) -> np.ndarray:
    """(L_X J)a = [X, Ja] − J[X, a] on the coordinate basis: matrix [k, j]."""
    Jj = J.jet(p, 1)
    Xj = X.jet(p, 1)
    DJ = Jj.grad().value  # [k, j, l] = ∂_l J^k_j
    DX = Xj.grad().value  # [k, l] = ∂_l X^k
    J0, X0 = Jj.value, Xj.value
    return np.einsum("kjl,l->kj", DJ, X0) - np.einsum("lj,kl->kj", J0, DX) + np.einsum("kl,lj->kj", J0, DX)


# ---------------------------------------------------------------------------
# residual helpers


def h_gradient_residual(g: MetricField, f: Field, frame: SplitFrame) -> float:
    """|H-part of ∇f| / (1 + |df|): zero exactly when ∇f is a section of V."""
    p = frame.point
    df = f.jet(p, 1).grad().value
    hx, hy = df @ frame.x, df @ frame.y
    return float(np.hypot(hx, hy) / (1.0 + np.linalg.norm(df)))


def gram_matrix(g: MetricField, k: Field, t: Field, p) -> np.ndarray:
    G = g(p)
    K, T = k(p), t(p)
    return np.array([[K @ G @ K, K @ G @ T], [T @ G @ K, T @ G @ T]])


@dataclass
class IntegrabilityResiduals:
    brackets: dict  # name -> V-component residual
    shear_condition: float
    max_bracket: float
    nijenhuis: float

    @property
    def worst(self) -> float:
        return max(self.max_bracket, self.shear_condition)


def check_integrability_sufficient(g: MetricField, k: Field, t: Field, p, orientation: int = 1,
                                   frame: SplitFrame | None = None) -> IntegrabilityResiduals:
    """Residuals of the sufficient conditions: (i) [k,H], [t,H] ⊂ H and (ii) J∇°k = ∇°t on H."""
    p = tuple(float(v) for v in p)
    frame = frame or build_frame(g, k, t, p, orientation)
    G = g(p)
    K, T = k(p), t(p)
    out = {}
    for vname, V in (("k", k), ("t", t)):
        for hname, Hf in (("x", frame.x_field), ("y", frame.y_field)):
            br = calc.lie_bracket(V, Hf, p)
            out[f"[{vname},{hname}].k"] = float(br @ G @ K)
            out[f"[{vname},{hname}].t"] = float(br @ G @ T)
    s1k, s2k = shear_coefficients(g, k, frame)
    s1t, s2t = shear_coefficients(g, t, frame)
    Sk = np.array([[-s1k, s2k], [s2k, s1k]])
    St = np.array([[-s1t, s2t], [s2t, s1t]])
    Jh = np.array([[0.0, -1.0], [1.0, 0.0]])
    shear_res = float(np.max(np.abs(Jh @ Sk - St)))
    J = AcsField(g, k, t, orientation)
    return IntegrabilityResiduals(out, shear_res, float(max(abs(v) for v in out.values())), nijenhuis_max(J, p))


def check_split_adjoint(g: MetricField, kp: Field, km: Field, p, orientation: int = 1, tol: float = 1e-9) -> dict:
    """Self-adjointness of J on V and condition (i) for the split-adjoint case."""
    p = tuple(float(v) for v in p)
    G = g(p)
    Jm = build_J(g, kp, km, p, orientation)
    basis = [kp(p), km(p)]
    sa = max(abs((Jm @ a) @ G @ b - a @ G @ (Jm @ b)) for a in basis for b in basis)
    scale = 1.0 + max(abs(a @ G @ b) for a in basis for b in basis)
    frame = build_frame(g, kp, km, p, orientation)
    J = AcsField(g, kp, km, orientation)
    Kp, Km = basis
    cond_i = 0.0
    for X in (frame.x_field, frame.y_field):
        JX = J.apply(X)
        val = (calc.lie_bracket(km, JX, p) @ G @ Kp - calc.lie_bracket(kp, JX, p) @ G @ Km
               - calc.lie_bracket(kp, X, p) @ G @ Kp - calc.lie_bracket(km, X, p) @ G @ Km)
        cond_i = max(cond_i, abs(float(val)))
    s1p, s2p = shear_coefficients(g, kp, frame)
    s1m, s2m = shear_coefficients(g, km, frame)
    Jh = np.array([[0.0, -1.0], [1.0, 0.0]])
    Sp = np.array([[-s1p, s2p], [s2p, s1p]])
    Sm = np.array([[-s1m, s2m], [s2m, s1m]])
    cond_ii = float(np.max(np.abs(Jh @ Sp - Sm)))
    return {
        "is_split_adjoint": bool(sa < tol * scale),
        "adjoint_residual": float(sa),
        "condition_i_residual": cond_i,
        "condition_ii_residual": cond_ii,
        "length_sign_test": bool((Kp @ G @ Kp) * (Km @ G @ Km) < 0
                                 or (abs(Kp @ G @ Kp) < tol and abs(Km @ G @ Km) < tol)),
    }


def _killing_residual(g, X, p) -> float:
    return float(np.max(np.abs(calc.lie_derivative_metric(g, X, p))))


def check_geometric_sufficients(g: MetricField, k: Field, t: Field, p, tau: Field | None = None,
                                ell: Field | None = None, orientation: int = 1, tol: float = 1e-7) -> dict:
    """Constant-length, Killing, pre-geodesic, near-gradient and mixed-derivative residuals."""
    p = tuple(float(v) for v in p)
    frame = build_frame(g, k, t, p, orientation)
    out: dict = {}
    for name, X in (("k", k), ("t", t)):
        n2 = calc.inner_field(g, X, X)
        d = n2.jet(p, 1).grad().value
        out[f"{name}.const_length_H"] = float(np.hypot(d @ frame.x, d @ frame.y))
        out[f"{name}.const_length"] = float(np.linalg.norm(d))
        out[f"{name}.killing"] = _killing_residual(g, X, p)
        pg = pregeodesic_factor(g, X, p, tol)
        out[f"{name}.pregeodesic"] = pg.residual
        out[f"{name}.geodesic"] = float(np.linalg.norm(pg.acceleration))
    G = g(p)
    mixed = calc.covariant_derivative(g, k, t, p) + calc.covariant_derivative(g, t, k, p)
    out["semRm.x"] = float(abs(mixed @ G @ frame.x))
    out["semRm.y"] = float(abs(mixed @ G @ frame.y))
    if tau is None:
        out["near_gradient"] = None
        out["notice"] = "tau not supplied: near-gradient checks skipped"
        return out
    ell_f = ell if ell is not None else recovered_ell(g, t, tau)
    grad = calc.gradient(g, tau, p)
    T = t(p)
    out["near_gradient"] = float(np.linalg.norm(T - ell_f(p) * grad) / (1 + np.linalg.norm(T)))
    out["ell_H_gradient"] = h_gradient_residual(g, ell_f, frame)
    return out


def recovered_ell(g: MetricField, t: Field, tau: Field) -> ScalarField:
    """ℓ = g(t,t)/dτ(t) as a smooth field."""

    def fn(p, n):
        T = t.jet(p, n)
        dtau = tau.jet(p, n + 1).grad()
        return (T @ (g.jet(p, n) @ T)) / (dtau @ T)

    return ScalarField(g.chart, fn, "ell")


def frobenius_residual(g: MetricField, t: Field, p) -> float:
    """|t♭ ∧ dt♭| / (1 + |t♭||dt♭|): vanishes iff t is locally proportional to a gradient."""
    tb = calc.flat_field(g, t)
    a = tb(p)
    da = calc.exterior_derivative(tb, p)
    w = (np.einsum("i,jk->ijk", a, da) + np.einsum("j,ki->ijk", a, da) + np.einsum("k,ij->ijk", a, da))
    return float(np.max(np.abs(w)) / (1.0 + np.linalg.norm(a) * np.max(np.abs(da))))


@dataclass
class AdmissibilityReport:
    gram: np.ndarray
    G: float
    residuals: dict
    passes: dict
    ell: Optional[float] = None
    notes: list = field(default_factory=list)

    @property
    def admissible(self) -> bool:
        return all(self.passes.values())

    def failing(self) -> list:
        return [k for k, v in self.passes.items() if not v]


def check_admissible(g: MetricField, k: Field, t: Field, tau: Field | None, p, orientation: int = 1,
                     ell: Field | None = None, tol: float = 1e-7) -> AdmissibilityReport:
    """Full admissibility suite at ``p``.

    i] J integrable (Nijenhuis tensor, plus the sufficient bracket/shear
    conditions for information); ii] t = ℓ∇τ with ℓ recovered as g(t,t)/dτ(t)
    unless supplied; iii] ∇g(k,t) and ∇g(k,k) are sections of V.
    Without τ, ii] falls back to the Frobenius test t♭ ∧ dt♭ = 0.
    """
    p = tuple(float(v) for v in p)
    A = gram_matrix(g, k, t, p)
    Gdet = float(np.linalg.det(A))
    res: dict = {}
    ok: dict = {}
    notes = []
    scale = 1.0 + np.max(np.abs(A))
    res["nnsing"] = abs(Gdet)
    ok["nnsing"] = abs(Gdet) > 1e-10 * scale**2
    if not ok["nnsing"]:
        notes.append("k and t are linearly dependent or V is degenerate")
        return AdmissibilityReport(A, Gdet, res, ok, None, notes)
    try:
        frame = build_frame(g, k, t, p, orientation)
        res["space"] = 0.0
        ok["space"] = True
    except ValueError as exc:
        res["space"] = 1.0
        ok["space"] = False
        notes.append(str(exc))
        return AdmissibilityReport(A, Gdet, res, ok, None, notes)

    J = AcsField(g, k, t, orientation)
    Jp = J(p)
    Jscale = 1.0 + float(np.max(np.abs(Jp))) ** 2
    nmax = nijenhuis_max(J, p)
    res["integrable"] = nmax
    ok["integrable"] = nmax < tol * Jscale
    integ = check_integrability_sufficient(g, k, t, p, orientation, frame)
    res["integ_brackets"] = integ.max_bracket
    res["integ_shear"] = integ.shear_condition

    ell_val = None
    T = t(p)
    if tau is None:
        fr = frobenius_residual(g, t, p)
        res["near_gradient"] = fr
        ok["near_gradient"] = fr < tol
        notes.append("tau not supplied: t tested for local gradient-proportionality only")
    else:
        dtau = tau.jet(p, 1).grad().value
        if ell is None and abs(dtau @ T) < 1e-12 * (1 + np.linalg.norm(dtau) * np.linalg.norm(T)):
            res["near_gradient"] = float("inf")
            ok["near_gradient"] = False
            notes.append("dtau(t) = 0: ell undefined")
        else:
            ell_f = ell if ell is not None else recovered_ell(g, t, tau)
            ell_val = float(ell_f(p))
            grad = np.linalg.solve(g(p), dtau)
            r = float(np.linalg.norm(T - ell_val * grad) / (1 + np.linalg.norm(T)))
            res["near_gradient"] = r
            ok["near_gradient"] = r < tol
    for name, X in (("grad_gkt_in_V", t), ("grad_gkk_in_V", k)):
        r = h_gradient_residual(g, calc.inner_field(g, k, X), frame)
        res[name] = r
        ok[name] = r < tol
    return AdmissibilityReport(A, Gdet, res, ok, ell_val, notes)


def opposite_J(g: MetricField, k: Field, t: Field, p, orientation: int = 1) -> tuple[np.ndarray, float]:
    """J₋ (quarter turn reversed on H) and the max of its Nijenhuis tensor."""
    Jm = AcsField(g, k, t, -orientation)
    return Jm(p), nijenhuis_max(Jm, p)


def rescaled_J(g: MetricField, kp: Field, km: Field, f1: Field, f2: Field, p, orientation: int = 1,
               tol: float = 1e-7) -> dict:
    """Integrability of J for (f₁k₊, f₂k₋) against the criterion ∇(f₁/f₂) ∈ V."""
    p = tuple(float(v) for v in p)
    if abs(float(f1(p))) < 1e-14 or abs(float(f2(p))) < 1e-14:
        raise ValueError("rescaling function vanishes at the point")
    base = AcsField(g, kp, km, orientation)
    base_n = nijenhuis_max(base, p)
    k1 = calc.scaled_field(f1, kp)
    k2 = calc.scaled_field(f2, km)
    J = AcsField(g, k1, k2, orientation)
    n = nijenhuis_max(J, p)
    ratio = calc.scalar_map(lambda a, b: a / b, f1, f2)
    frame = build_frame(g, kp, km, p, orientation)
    hres = h_gradient_residual(g, ratio, frame)
    integrable = n < tol
    criterion = hres < tol
    return {"nijenhuis": n, "base_nijenhuis": base_n, "h_gradient": hres,
            "integrable": integrable, "criterion": criterion, "agree": integrable == criterion}
