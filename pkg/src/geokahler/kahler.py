"""Induced Kähler metrics g_K = d(f k♭)(·, J·), their regions and verification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import calculus as calc
from . import jets
from .expr import parse_expr
from .fields import CovectorField, DomainError, Field, MetricField, ScalarField, VectorField
from .jets import Jet, einsum
from .jstruct import (AcsField, AdmissibilityReport, check_admissible, gram_matrix, h_gradient_residual,
                      nijenhuis_max, recovered_ell)
from .optics import SplitFrame, build_frame, pregeodesic_factor, shear_coefficients, twist
from .split import split_jets


class RegionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# parameter functions


class ParamFn:
    """A function of one variable applied to scalar jets: affine τ − c, e^τ, or an expression in ``tau``."""

    def __init__(self, kind: str, c: float = 0.0, text: str = "", params=None):
        if kind not in ("affine", "exp", "expr"):
            raise ValueError(f"unknown parameter function kind '{kind}'")
        self.kind = kind
        self.c = float(c)
        self.text = text
        self._expr = parse_expr(text, params, ("tau",)) if kind == "expr" else None

    @classmethod
    def affine(cls, c: float = 0.0) -> "ParamFn":
        return cls("affine", c)

    @classmethod
    def exponential(cls) -> "ParamFn":
        return cls("exp")

    @classmethod
    def custom(cls, text: str, params=None) -> "ParamFn":
        return cls("expr", text=text, params=params)

    @classmethod
    def parse(cls, spec: str, params=None) -> "ParamFn":
        """``affine:c``, ``exp`` or ``expr:<expression in tau>``."""
        spec = spec.strip()
        if spec == "exp":
            return cls.exponential()
        if spec.startswith("affine"):
            _, _, c = spec.partition(":")
            return cls.affine(float(c) if c else 0.0)
        if spec.startswith("expr:"):
            return cls.custom(spec[5:], params)
        raise ValueError(f"cannot parse parameter function '{spec}' (use affine:c, exp or expr:...)")

    def __repr__(self):
        return {"affine": f"affine:{self.c:g}", "exp": "exp", "expr": f"expr:{self.text}"}[self.kind]

    def _taylor(self, x0: float, order: int) -> np.ndarray:
        v = self._expr.bind([jets.algebra(1, order).variables([x0])[0]])
        if not isinstance(v, Jet):
            out = np.zeros(order + 1)
            out[0] = float(v)
            return out
        return v.c

    def __call__(self, tau):
        if not isinstance(tau, Jet):
            return float(self(jets.algebra(1, 0).constant(float(tau))).value)
        if self.kind == "affine":
            return tau - self.c
        if self.kind == "exp":
            return jets.exp(tau)
        return jets.compose(self._taylor(float(tau.value), tau.order), tau)

    def prime(self, tau):
        if not isinstance(tau, Jet):
            return float(self.prime(jets.algebra(1, 0).constant(float(tau))).value)
        if self.kind == "affine":
            return tau * 0.0 + 1.0
        if self.kind == "exp":
            return jets.exp(tau)
        t = self._taylor(float(tau.value), tau.order + 1)
        d = np.array([(m + 1) * t[m + 1] for m in range(tau.order + 1)])
        return jets.compose(d, tau)


# ---------------------------------------------------------------------------
# candidates


@dataclass
class RegionResult:
    in_region: bool
    lhs1: float
    lhs2: float
    iota: float
    specialized: dict = field(default_factory=dict)


class _Induced:
    """Shared machinery: ω = dθ for a 1-form θ, g_K = ω(·, J·)."""

    kind = "standard"

    def _setup(self, g: MetricField, k: Field, t: Field, orientation: int):
        self.g, self.k, self.t = g, k, t
        self.orientation = int(orientation)
        self.chart = g.chart
        self.J = AcsField(g, k, t, self.orientation)
        n = self.chart.dim
        self.potential = CovectorField(self.chart, self._potential_jet, "theta")
        self.omega_field = Field(self.chart, (n, n),
                                 lambda p, o: calc.exterior_derivative_jet(self.potential, p, o), "omega")
        self.gK = MetricField(self.chart, lambda p, o: self.omega_field.jet(p, o) @ self.J.jet(p, o),
                              "riemannian", "g_K")

    def _potential_jet(self, p, order):
        raise NotImplementedError

    def frame(self, p) -> SplitFrame:
        return build_frame(self.g, self.k, self.t, p, self.orientation)

    def omega(self, p) -> np.ndarray:
        return self.omega_field(p)

    def symplectic_form(self, p, a, b) -> float:
        return float(np.asarray(a) @ self.omega(p) @ np.asarray(b))

    def kahler_metric(self, p) -> np.ndarray:
        return self.gK(p)

    def iota(self, p, frame: SplitFrame | None = None) -> float:
        return twist(self.g, self.k, frame or self.frame(p))


class KahlerCandidate(_Induced):
    """g_K induced by an admissible (g, k, t) with t = ℓ∇τ and parameter function f."""

    def __init__(self, g: MetricField, k: Field, t: Field, tau: Field, f: ParamFn,
                 ell: Field | None = None, orientation: int = 1):
        self.tau = tau
        self.f = f
        self.ell = ell if ell is not None else recovered_ell(g, t, tau)
        self._setup(g, k, t, orientation)

    def _potential_jet(self, p, order):
        kb = self.g.jet(p, order) @ self.k.jet(p, order)
        return self.f(self.tau.jet(p, order)) * kb

    def f_value(self, p) -> float:
        return float(self.f(self.tau.jet(p, 0)).value)

    def fprime_value(self, p) -> float:
        return float(self.f.prime(self.tau.jet(p, 0)).value)

    def omega_decomposed(self, p) -> np.ndarray:
        """f′ dτ∧k♭ + f dk♭."""
        kb = calc.flat_field(self.g, self.k)
        dtau = self.tau.jet(p, 1).grad().value
        a = kb(p)
        return (self.fprime_value(p) * (np.outer(dtau, a) - np.outer(a, dtau))
                + self.f_value(p) * calc.exterior_derivative(kb, p))

    def _pieces(self, p):
        A = gram_matrix(self.g, self.k, self.t, p)
        G = float(np.linalg.det(A))
        ell = float(self.ell(p))
        if not np.isfinite(ell) or ell == 0:
            raise RegionError("ell is undefined at the point")
        dkb = calc.exterior_derivative(calc.flat_field(self.g, self.k), p)
        return A, G, ell, float(self.k(p) @ dkb @ self.t(p))

    def region(self, p, tol: float = 1e-7) -> RegionResult:
        p = tuple(float(v) for v in p)
        fr = self.frame(p)
        iota = self.iota(p, fr)
        f, fp = self.f_value(p), self.fprime_value(p)
        A, G, ell, dk_kt = self._pieces(p)
        lhs1 = f * iota
        lhs2 = fp * G / ell - f * dk_kt
        spec = self._specializations(p, f, fp, G, ell, A, tol)
        for name, val in list(spec.items()):
            spec[name] = {"value": val, "agrees": abs(val - lhs2) < 1e-9 * (1 + abs(lhs2))}
        return RegionResult(bool(lhs1 < 0 and lhs2 < 0), float(lhs1), float(lhs2), float(iota), spec)

    def _specializations(self, p, f, fp, G, ell, A, tol) -> dict:
        out = {}
        g, k, t = self.g, self.k, self.t
        base = fp * G / ell
        nk = calc.inner_field(g, k, k)
        dkk = nk.jet(p, 1).grad().value
        acc = calc.covariant_derivative(g, k, k, p)
        scale = 1.0 + np.linalg.norm(k(p)) ** 2
        if np.linalg.norm(acc) < tol * scale and np.linalg.norm(dkk) < tol * scale:
            out["geodesic_constant_length"] = base
        if abs(A[0, 0]) < tol * scale:
            pg = pregeodesic_factor(g, k, p, tol)
            if pg.is_pregeodesic and not pg.is_geodesic:
                out["null_pregeodesic"] = base - f * pg.alpha * A[0, 1]
        if np.max(np.abs(calc.lie_derivative_metric(g, k, p))) < tol * scale:
            out["killing"] = base + f * float(dkk @ t(p))
        return out

    def basic_identities(self, p) -> dict:
        """Residuals of g_K(V,H)=0, g_K(k,t)=0, g_K(k,k)=g_K(t,t), g_K|H = −fι g|H."""
        p = tuple(float(v) for v in p)
        fr = self.frame(p)
        GK, G = self.gK(p), self.g(p)
        K, T = self.k(p), self.t(p)
        hs = [fr.x, fr.y]
        fi = self.f_value(p) * self.iota(p, fr)
        vh = max(abs(a @ GK @ b) for a in (K, T) for b in hs)
        hh = max(abs(a @ GK @ b + fi * (a @ G @ b)) for a in hs for b in hs)
        return {"VH": float(vh), "kt": float(abs(K @ GK @ T)), "kk_tt": float(abs(K @ GK @ K - T @ GK @ T)),
                "H": float(hh)}

    def alt_formula(self, p) -> Optional[float]:
        """g_K(k,k) from brackets when g(k,t) is constant, else None."""
        g, k, t = self.g, self.k, self.t
        dkt = calc.inner_field(g, k, t).jet(p, 1).grad().value
        if np.linalg.norm(dkt) > 1e-9:
            return None
        A, G, ell, _ = self._pieces(p)
        f, fp = self.f_value(p), self.fprime_value(p)
        G0 = g(p)
        br = calc.lie_bracket(k, t, p)
        dkk = calc.inner_field(g, k, k).jet(p, 1).grad().value
        return float(-f * (br @ G0 @ k(p)) - f * (dkk @ t(p)) - fp * G / ell)


class PetrovCandidate(_Induced):
    """g_K = d(f(u) p k₊♭)(·, J·) with p = 1/sqrt(−g(k₊, k₋))."""

    kind = "petrov"

    def __init__(self, g: MetricField, kp: Field, km: Field, u: Field, f: ParamFn, orientation: int = 1):
        self.u = u
        self.f = f
        self.p_field = calc.scalar_map(lambda G, a, b: jets.power(-(a @ (G @ b)), -0.5), g, kp, km, name="p")
        self.fp_field = ScalarField(g.chart, lambda q, n: self.f(self.u.jet(q, n)) * self.p_field.jet(q, n), "fp")
        self._setup(g, kp, km, orientation)

    def _potential_jet(self, p, order):
        kb = self.g.jet(p, order) @ self.k.jet(p, order)
        return self.fp_field.jet(p, order) * kb

    def check_preconditions(self, p, tol: float = 1e-7) -> dict:
        p = tuple(float(v) for v in p)
        g, kp, km = self.g, self.k, self.t
        G = g(p)
        Kp, Km = kp(p), km(p)
        fr = self.frame(p)
        out = {
            "kp_null": float(abs(Kp @ G @ Kp)),
            "km_null": float(abs(Km @ G @ Km)),
            "g_kp_km": float(Kp @ G @ Km),
        }
        s1, s2 = shear_coefficients(g, kp, fr)
        out["kp_shear"] = float(math.hypot(s1, s2))
        s1, s2 = shear_coefficients(g, km, fr)
        out["km_shear"] = float(math.hypot(s1, s2))
        out["kp_geodesic"] = float(np.linalg.norm(calc.covariant_derivative(g, kp, kp, p)))
        out["km_pregeodesic"] = pregeodesic_factor(g, km, p, tol).residual
        ratio = ScalarField(self.chart, lambda q, n: self.f(self.u.jet(q, n)) / self.p_field.jet(q, n))
        out["ratio_h_gradient"] = h_gradient_residual(g, ratio, fr)
        out["nijenhuis"] = nijenhuis_max(self.J, p)
        return out

    def region(self, p, tol: float = 1e-7) -> RegionResult:
        p = tuple(float(v) for v in p)
        if float(self.k(p) @ self.g(p) @ self.t(p)) >= 0:
            raise RegionError("g(k+, k-) must be negative")
        iota = self.iota(p)
        d = float(self.fp_field.jet(p, 1).grad().value @ self.k(p))
        return RegionResult(bool(iota < 0 and d < 0), float(iota), d, float(iota))


def petrov_candidate(g, kp, km, u, f, orientation=1) -> PetrovCandidate:
    return PetrovCandidate(g, kp, km, u, f, orientation)


# ---------------------------------------------------------------------------
# verification


@dataclass
class SampleCheck:
    point: tuple
    in_region: bool
    d_omega: float
    symmetry: float
    j_compat: float
    min_eig: float
    nijenhuis: float
    nabla_J: float


@dataclass
class KahlerVerification:
    samples: list

    def _max(self, name):
        vals = [getattr(s, name) for s in self.samples if s.in_region]
        return max(vals) if vals else 0.0

    @property
    def max_d_omega(self):
        return self._max("d_omega")

    @property
    def max_j_compat(self):
        return self._max("j_compat")

    @property
    def max_symmetry(self):
        return self._max("symmetry")

    @property
    def max_nijenhuis(self):
        return self._max("nijenhuis")

    @property
    def max_nabla_J(self):
        return self._max("nabla_J")

    @property
    def min_eig(self):
        vals = [s.min_eig for s in self.samples if s.in_region]
        return min(vals) if vals else float("nan")

    @property
    def in_region_count(self):
        return sum(s.in_region for s in self.samples)

    def passes(self, tol_domega=1e-8, tol_j=1e-9, tol_n=1e-7, tol_nabla=1e-5) -> bool:
        if not self.in_region_count:
            return False
        return (self.max_d_omega < tol_domega and self.max_j_compat < tol_j and self.min_eig > 0
                and self.max_nijenhuis < tol_n and self.max_nabla_J < tol_nabla)


def nabla_J(gK: MetricField, J: Field, p) -> np.ndarray:
    """(∇_i J)^a_b in the Levi-Civita connection of gK, shape [a, b, i]."""
    Jj = J.jet(p, 1)
    dJ = Jj.grad().value
    Gam = calc.christoffel(gK, p)
    J0 = Jj.value
    return dJ + np.einsum("aic,cb->abi", Gam, J0) - np.einsum("cib,ac->abi", Gam, J0)


def check_sample(cand: _Induced, p, with_nabla: bool = True) -> SampleCheck:
    p = tuple(float(v) for v in p)
    try:
        inside = cand.region(p).in_region
    except (RegionError, ValueError):
        inside = False
    dom = calc.exterior_derivative2_jet(cand.omega_field, p, 0).value
    GK = cand.gK(p)
    Jm = cand.J(p)
    sym = float(np.max(np.abs(GK - GK.T)))
    jc = float(np.max(np.abs(Jm.T @ GK @ Jm - GK)))
    ev = float(np.min(np.linalg.eigvalsh(0.5 * (GK + GK.T))))
    nij = nijenhuis_max(cand.J, p)
    nj = float(np.max(np.abs(nabla_J(cand.gK, cand.J, p)))) if with_nabla and inside else 0.0
    return SampleCheck(p, inside, float(np.max(np.abs(dom))), sym, jc, ev, nij, nj)


def verify_kahler(cand: _Induced, samples, with_nabla: bool = True) -> KahlerVerification:
    return KahlerVerification([check_sample(cand, p, with_nabla) for p in samples])


# ---------------------------------------------------------------------------
# transfer properties


@dataclass
class TransferResult:
    skipped: bool
    residuals: dict
    notice: str = ""

    @property
    def worst(self) -> float:
        return max(self.residuals.values()) if self.residuals else float("nan")


def _grad_norm(f: Field, p) -> float:
    return float(np.linalg.norm(f.jet(p, 1).grad().value))


def _gk_singular(cand: KahlerCandidate, p) -> bool:
    G = cand.gK(p)
    return abs(np.linalg.det(G)) <= 1e-12 * (1.0 + np.max(np.abs(G))) ** 4


def transfer_geodesic(cand: KahlerCandidate, p, tol: float = 1e-7) -> TransferResult:
    """k, t stay geodesic of constant length for g_K (f = τ_c, ℓ = 1)."""
    p = tuple(float(v) for v in p)
    g, k, t = cand.g, cand.k, cand.t
    hyp = {
        "k_geodesic": float(np.linalg.norm(calc.covariant_derivative(g, k, k, p))),
        "t_geodesic": float(np.linalg.norm(calc.covariant_derivative(g, t, t, p))),
        "k_length": _grad_norm(calc.inner_field(g, k, k), p),
        "t_length": _grad_norm(calc.inner_field(g, t, t), p),
        "kt_constant": _grad_norm(calc.inner_field(g, k, t), p),
        "ell_one": abs(float(cand.ell(p)) - 1.0),
    }
    bad = [n for n, v in hyp.items() if v > tol]
    if cand.f.kind != "affine":
        bad.append("f_affine")
    if bad:
        return TransferResult(True, {}, "skipped: hypotheses fail (" + ", ".join(bad) + ")")
    gK = cand.gK
    if _gk_singular(cand, p):
        return TransferResult(True, {}, "skipped: g_K is degenerate at the point")
    res = {
        "k_geodesic_K": float(np.linalg.norm(calc.covariant_derivative(gK, k, k, p))),
        "t_geodesic_K": float(np.linalg.norm(calc.covariant_derivative(gK, t, t, p))),
        "k_length_K": _grad_norm(calc.inner_field(gK, k, k), p),
        "t_length_K": _grad_norm(calc.inner_field(gK, t, t), p),
    }
    return TransferResult(False, res)


def iota_field(g: MetricField, X: Field, frame: SplitFrame) -> ScalarField:
    """ι = g(X, [x, y]) as a smooth field near the frame's point (frozen pivot)."""
    xf, yf = frame.x_field, frame.y_field
    return ScalarField(g.chart, lambda q, n: X.jet(q, n) @ (g.jet(q, n) @ calc.lie_bracket_jet(xf, yf, q, n)), "iota")


def transfer_killing(cand: KahlerCandidate, p, tol: float = 1e-7) -> TransferResult:
    """k stays Killing for g_K; also reports the g_K pre-geodesic data of t."""
    p = tuple(float(v) for v in p)
    g, k, t = cand.g, cand.k, cand.t
    fr = cand.frame(p)
    G = g(p)
    hyp = {
        "k_killing": float(np.max(np.abs(calc.lie_derivative_metric(g, k, p)))),
        "ell_of_tau": h_gradient_residual(g, cand.ell, fr),
        "iota_of_tau": h_gradient_residual(g, iota_field(g, k, fr), fr),
        "kt_zero": float(abs(k(p) @ G @ t(p))),
        "kt_commute": float(np.linalg.norm(calc.lie_bracket(k, t, p))),
    }
    bad = [n for n, v in hyp.items() if v > tol]
    if bad:
        return TransferResult(True, {}, "skipped: hypotheses fail (" + ", ".join(bad) + ")")
    if _gk_singular(cand, p):
        return TransferResult(True, {}, "skipped: g_K is degenerate at the point")
    res = {"k_killing_K": float(np.max(np.abs(calc.lie_derivative_metric(cand.gK, k, p))))}
    pg = pregeodesic_factor(cand.gK, t, p, tol)
    res["t_pregeodesic_K"] = pg.residual
    return TransferResult(False, res, f"t: alpha_K = {pg.alpha}, |nabla^K_t t| = {np.linalg.norm(pg.acceleration):.3e}")


def k_frame(cand: KahlerCandidate, frame: SplitFrame) -> SplitFrame:
    """The g_K-orthonormal frame (x/s, y/s), s = sqrt(−fι)."""
    g = cand.g
    iota = iota_field(g, cand.k, frame)
    s = ScalarField(g.chart, lambda q, n: jets.power(-(cand.f(cand.tau.jet(q, n)) * iota.jet(q, n)), -0.5))
    xf = calc.scaled_field(s, frame.x_field)
    yf = calc.scaled_field(s, frame.y_field)
    p = frame.point
    return SplitFrame(p, frame.vfields, xf(p), yf(p), frame.orientation_sign, frame.pivot, xf, yf)


def shear_transfer(cand: KahlerCandidate, p) -> TransferResult:
    p = tuple(float(v) for v in p)
    reg = cand.region(p)
    if not reg.in_region:
        raise RegionError("shear transfer needs a point inside the Kähler region")
    fr = cand.frame(p)
    frK = k_frame(cand, fr)
    res = {}
    for name, X in (("k", cand.k), ("t", cand.t)):
        s = shear_coefficients(cand.g, X, fr)
        sK = shear_coefficients(cand.gK, X, frK)
        res[f"{name}.sigma1"] = abs(s[0] - sK[0])
        res[f"{name}.sigma2"] = abs(s[1] - sK[1])
    return TransferResult(False, res)


def shear_pairs(cand: KahlerCandidate, p) -> dict:
    """Shear coefficients of k and t for g and for g_K in matched frames."""
    fr = cand.frame(p)
    frK = k_frame(cand, fr)
    return {name: (shear_coefficients(cand.g, X, fr), shear_coefficients(cand.gK, X, frK))
            for name, X in (("k", cand.k), ("t", cand.t))}


def repeated_admissibility(cand: KahlerCandidate, p, tol: float = 1e-7):
    """Admissibility of (g_K, k, t); returns (AdmissibilityReport | None, notice)."""
    p = tuple(float(v) for v in p)
    g, k, t = cand.g, cand.k, cand.t
    fr = cand.frame(p)
    hyp = {
        "kt_zero": float(abs(k(p) @ g(p) @ t(p))),
        "ell_of_tau": h_gradient_residual(g, cand.ell, fr),
        "tt_of_tau": h_gradient_residual(g, calc.inner_field(g, t, t), fr),
        "bracket_of_tau": h_gradient_residual(g, calc.inner_field(g, calc.bracket_field(k, t), k), fr),
    }
    bad = [n for n, v in hyp.items() if v > tol]
    if bad:
        return None, "skipped: hypotheses fail (" + ", ".join(bad) + ")"
    rep = check_admissible(cand.gK, k, t, cand.tau, p, cand.orientation, tol=tol)
    return rep, ""


def iterate(cand: KahlerCandidate) -> KahlerCandidate:
    """The next candidate (g_K, k, t, τ, f)."""
    return KahlerCandidate(cand.gK, cand.k, cand.t, cand.tau, cand.f, None, cand.orientation)


# ---------------------------------------------------------------------------
# metric variations


def biconformal_metric(g: MetricField, k: Field, t: Field, beta: Field) -> MetricField:
    """(g|V, β² g|H)."""

    def fn(p, n):
        s = split_jets(g, (k, t), p, n)
        G = s.G
        b2 = beta.jet(p, n) * beta.jet(p, n)
        return s.PV.T @ G @ s.PV + (s.PH.T @ G @ s.PH) * b2

    return MetricField(g.chart, fn, g.signature, "g_biconformal")


def variation_biconformal(cand: KahlerCandidate, beta: Field, p) -> dict:
    p = tuple(float(v) for v in p)
    b = float(beta(p))
    if abs(b) < 1e-12:
        raise ValueError("beta vanishes at the point")
    gt = biconformal_metric(cand.g, cand.k, cand.t, beta)
    other = KahlerCandidate(gt, cand.k, cand.t, cand.tau, cand.f, None, cand.orientation)
    iota = cand.iota(p)
    iota_t = other.iota(p)
    return {"g_K": float(np.max(np.abs(cand.gK(p) - other.gK(p)))),
            "iota_ratio": float(abs(iota_t - iota / b**2)), "iota": iota, "iota_tilde": iota_t}


def variation_vertical(cand: KahlerCandidate, eps: float, p, tol: float = 1e-7) -> dict:
    """ḡ = g + ε dτ² leaves ω, ι and g_K unchanged when dτ(k) is constant."""
    p = tuple(float(v) for v in p)
    g, tau = cand.g, cand.tau

    def fn(q, n):
        d = tau.jet(q, n + 1).grad()
        return g.jet(q, n) + einsum("i,j->ij", d, d) * eps

    gb = MetricField(g.chart, fn, g.signature, "g_bar")
    try:
        gb.check_signature(p)
    except DomainError as exc:
        return {"skipped": True, "notice": f"skipped: {exc}"}
    dtk = calc.scalar_map(lambda a, b: a @ b, calc.differential_field(tau), cand.k)
    if _grad_norm(dtk, p) > tol:
        return {"skipped": True, "notice": "skipped: dtau(k) is not constant"}
    other = KahlerCandidate(gb, cand.k, cand.t, tau, cand.f, None, cand.orientation)
    A = gram_matrix(g, cand.k, cand.t, p)
    Ab = gram_matrix(gb, cand.k, cand.t, p)
    dt_t = float(tau.jet(p, 1).grad().value @ cand.t(p))
    out = {
        "skipped": False,
        "g_K": float(np.max(np.abs(cand.gK(p) - other.gK(p)))),
        "omega": float(np.max(np.abs(cand.omega(p) - other.omega(p)))),
        "iota": float(abs(other.iota(p) - cand.iota(p))),
    }
    # det ḡ|V = G(1 + ε dτ(t)) needs ℓ = 1
    if abs(float(cand.ell(p)) - 1.0) < tol:
        out["G"] = float(abs(np.linalg.det(Ab) - np.linalg.det(A) * (1 + eps * dt_t)))
    return out


def conformal_invariance(g: MetricField, X: Field, beta: Field, vfields, p, orientation: int = 1) -> dict:
    """Twist and shear of X for g and for β²g, each in its own oriented orthonormal frame."""
    p = tuple(float(v) for v in p)
    gh = MetricField(g.chart, lambda q, n: g.jet(q, n) * (beta.jet(q, n) * beta.jet(q, n)), g.signature, "g_hat")
    vf = tuple(vfields)
    t = vf[1] if len(vf) > 1 else None
    fr = build_frame(g, vf[0], t, p, orientation)
    frh = build_frame(gh, vf[0], t, p, orientation)
    iota, iota_h = twist(g, X, fr), twist(gh, X, frh)
    s, sh = shear_coefficients(g, X, fr), shear_coefficients(gh, X, frh)
    return {"iota": iota, "iota_hat": iota_h, "iota_residual": abs(iota - iota_h),
            "shear_residual": float(max(abs(s[0] - sh[0]), abs(s[1] - sh[1]))),
            "sigma": s, "sigma_hat": sh}
