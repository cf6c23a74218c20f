"""Ready-made spacetimes with their distinguished fields and expected closed-form values."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import calculus as calc
from .fields import Chart, Field, MetricField, ScalarField, VectorField, constant_field
from .kahler import KahlerCandidate, ParamFn, PetrovCandidate
from .sampling import halton_points
from .optics import build_frame, frame_from_fields, pregeodesic_factor, riemannian3_optics, shear_coefficients, twist


class CatalogError(ValueError):
    pass


@dataclass
class Expected:
    """A closed-form value the engine must reproduce at every sample."""

    name: str
    formula: str
    compute: Callable  # (spec, p) -> (got, want)
    tol: float
    provenance: str = "REFERENCE"
    negative: bool = False  # passes when the value does NOT match
    note: str = ""

    def check(self, spec, p) -> tuple:
        """(got, want, residual, passed)."""
        got, want = self.compute(spec, p)
        res = abs(got - want) if np.isfinite(got) else float("inf")
        ok = res <= self.tol * (1 + abs(want))
        return float(got), float(want), float(res), (not ok) if self.negative else ok


@dataclass
class SpacetimeSpec:
    id: str
    description: str
    chart: Chart
    g: MetricField
    k: Field
    t: Field
    tau: Optional[Field]
    f: ParamFn
    kind: str = "standard"
    orientation: int = 1
    box: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    ell: Optional[Field] = None
    u: Optional[Field] = None  # petrov potential
    expected: list = field(default_factory=list)
    expected_negative: tuple = ()
    extras: dict = field(default_factory=dict)

    def candidate(self, f: ParamFn | None = None):
        f = f or self.f
        if self.kind == "petrov":
            return PetrovCandidate(self.g, self.k, self.t, self.u, f, self.orientation)
        return KahlerCandidate(self.g, self.k, self.t, self.tau, f, self.ell, self.orientation)

    def frame(self, p):
        return build_frame(self.g, self.k, self.t, p, self.orientation)


def _sub(text: str, **macros) -> str:
    for name, val in macros.items():
        text = text.replace("{" + name + "}", f"({val})")
    return text


def _vec(chart, comps, params, name=""):
    return VectorField.from_expr(chart, [str(c) for c in comps], params, name)


def _scalar(chart, text, params, name=""):
    return ScalarField.from_expr(chart, text, params, name)


def _max_abs(a) -> float:
    return float(np.max(np.abs(a)))


# ---------------------------------------------------------------------------
# three-sphere pieces


S3_METRIC = {("psi", "psi"): "R^2/4", ("th", "th"): "R^2/4", ("ph", "ph"): "R^2/4", ("psi", "ph"): "R^2*cos(th)/4"}


def _s3_domain(i):
    return lambda p: 0.0 < p[i] < math.pi


def round_s3(radius: float = 1.0):
    """Round S³ of the given radius in Euler angles (ψ, θ, φ) with the unit Hopf field (2/R)∂ψ."""
    chart = Chart("S3", ("psi", "th", "ph"), _s3_domain(1))
    params = {"R": radius}
    gbar = MetricField.from_expr(chart, S3_METRIC, "riemannian", params, "round S3")
    kbar = _vec(chart, ["2/R", "0", "0"], params, "hopf")
    return chart, gbar, kbar


def _warped(name: str, w_text: str, params: dict, radius: float = 1.0):
    chart = Chart(name, ("t", "psi", "th", "ph"), _s3_domain(2))
    comps = {("t", "t"): "-1"}
    for key, val in S3_METRIC.items():
        comps[key] = f"({w_text})^2*{val}"
    pr = dict(params, R=radius)
    g = MetricField.from_expr(chart, comps, "lorentzian", pr)
    k = _vec(chart, ["1", f"2/(R*({w_text}))", "0", "0"], pr, "k")
    t = _vec(chart, ["-1", "0", "0", "0"], pr, "t")
    tau = _scalar(chart, "t", pr, "tau")
    return chart, g, k, t, tau


def _validate_hopf(gbar, kbar, points):
    for p in points:
        rep = riemannian3_optics(gbar, kbar, p)
        if rep.killing_residual > 1e-9 or rep.geodesic_residual > 1e-9 or rep.shear_invariant > 1e-18:
            raise CatalogError("Hopf field validation failed (Killing/geodesic/shear)")


_S3_POINTS = [(0.4, 1.1, 2.0), (5.0, 2.3, 0.7), (3.0, 0.6, 4.1)]


def _warped_expected(spec_w: Callable[[float], tuple], gbar, kbar) -> list:
    """α = w′/w and ι = ῑ/w for warped products over (S³, ḡ, k̄)."""

    def alpha(spec, p):
        w, wp = spec_w(p[0])
        acc = calc.covariant_derivative(spec.g, spec.k, spec.k, p)
        K = spec.k(p)
        a = float(acc @ K / (K @ K))
        return (a, wp / w) if np.linalg.norm(acc - a * K) < 1e-9 else (float("nan"), wp / w)

    def iota(spec, p):
        w, _ = spec_w(p[0])
        fr = spec.frame(p)
        bar = riemannian3_optics(gbar, kbar, p[1:], spec.extras["bar_orientation"])
        return twist(spec.g, spec.k, fr), bar.iota / w

    return [
        Expected("alpha", "w'/w", alpha, 1e-9),
        Expected("iota", "iota_bar/w", iota, 1e-9),
        Expected("k_null", "0", lambda s, p: (float(s.k(p) @ s.g(p) @ s.k(p)), 0.0), 1e-10, "TRIVIAL"),
        Expected("k_shear", "0", lambda s, p: (float(np.hypot(*shear_coefficients(s.g, s.k, s.frame(p)))), 0.0),
                 1e-9),
    ]


_WARPED_BOX = {"t": (-1.0, 1.0), "psi": (0.0, 2 * math.pi), "th": (0.3, math.pi - 0.3), "ph": (0.0, 2 * math.pi)}


def _bar_orientation(chart3, gbar, kbar) -> int:
    """Orientation of k̄^⊥ for which the Hopf twist is negative."""
    rep = riemannian3_optics(gbar, kbar, _S3_POINTS[0], 1)
    return 1 if rep.iota < 0 else -1


def _orientation_for_negative_twist(g, k, t, p) -> int:
    return 1 if twist(g, k, build_frame(g, k, t, p, 1)) < 0 else -1


def direct_product_hopf(radius: float = 1.0) -> SpacetimeSpec:
    """−dt² ⊕ round S³ with k = ∂_t + k̄ (Hopf) and t = ∇t."""
    if radius <= 0:
        raise CatalogError("radius must be positive")
    c3, gbar, kbar = round_s3(radius)
    _validate_hopf(gbar, kbar, _S3_POINTS)
    chart, g, k, t, tau = _warped("direct_product_hopf", "1", {}, radius)
    p0 = (0.0,) + _S3_POINTS[0]
    spec = SpacetimeSpec(
        "direct_product_hopf", "R x S^3 with the Hopf field, w = 1", chart, g, k, t, tau, ParamFn.exponential(),
        orientation=_orientation_for_negative_twist(g, k, t, p0), box=dict(_WARPED_BOX), params={"radius": radius},
        extras={"gbar": gbar, "kbar": kbar, "chart3": c3, "bar_orientation": _bar_orientation(c3, gbar, kbar)},
    )

    def iota_sq(s, p):
        rep = riemannian3_optics(gbar, kbar, p[1:], s.extras["bar_orientation"])
        return rep.iota**2, 2.0

    def iota_ric(s, p):
        rep = riemannian3_optics(gbar, kbar, p[1:], s.extras["bar_orientation"])
        ric = calc.curvature(gbar, p[1:])["ricci"]
        K = kbar(p[1:])
        return rep.iota**2, 2 * float(K @ ric @ K)

    spec.expected = _warped_expected(lambda t: (1.0, 0.0), gbar, kbar) + [
        Expected("hopf_iota_sq", "2", iota_sq, 1e-8,
                 note="iota^2 = 2 Ric(kbar, kbar) equals 4 on the unit sphere and 2 only for radius sqrt(2)"),
        Expected("hopf_iota_sq_ricci", "2 Ric(kbar, kbar)", iota_ric, 1e-8, "DERIVED"),
    ]
    return spec


def de_sitter(r: float = 2.0, w_variant: str = "square") -> SpacetimeSpec:
    """−dt² + w²ḡ over the unit S³; w = r²cosh²(t/r) by default, or r·cosh(t/r) with ``w_variant='cosh'``."""
    if r <= 0:
        raise CatalogError("de Sitter requires r > 0")
    if w_variant == "square":
        w_text = "r^2*cosh(t/r)^2"

        def wfun(t):
            w = r * r * math.cosh(t / r) ** 2
            return w, 2 * r * math.cosh(t / r) * math.sinh(t / r)
    elif w_variant == "cosh":
        w_text = "r*cosh(t/r)"

        def wfun(t):
            return r * math.cosh(t / r), math.sinh(t / r)
    else:
        raise CatalogError("w_variant must be 'square' or 'cosh'")
    c3, gbar, kbar = round_s3(1.0)
    chart, g, k, t, tau = _warped("de_sitter", w_text, {"r": r}, 1.0)
    p0 = (0.0,) + _S3_POINTS[0]
    spec = SpacetimeSpec(
        "de_sitter", "de Sitter as a warped product over the unit S^3", chart, g, k, t, tau, ParamFn.exponential(),
        orientation=_orientation_for_negative_twist(g, k, t, p0), box=dict(_WARPED_BOX),
        params={"r": r, "w_variant": w_variant},
        extras={"gbar": gbar, "kbar": kbar, "chart3": c3, "bar_orientation": _bar_orientation(c3, gbar, kbar),
                "w": wfun},
    )

    def wratio(s, p):
        w, wp = wfun(p[0])
        return (1.0, 1.0) if wp / w > -1 else (0.0, 1.0)

    spec.expected = _warped_expected(wfun, gbar, kbar) + [
        Expected("wprime_over_w_gt_minus_one", "w'/w > -1", wratio, 0.5)]
    return spec


# ---------------------------------------------------------------------------
# pp-waves


def pp_bar(k_expr: str = "-y", h_expr: str = "x", params=None):
    """(R³, ḡ) with coframe dv − k dx − h dy, dx, dy and the unit Killing field k̄ = ∂_v."""
    params = dict(params or {})
    chart = Chart("pp_bar", ("v", "x", "y"))
    K, H = f"({k_expr})", f"({h_expr})"
    comps = {("v", "v"): "1", ("v", "x"): f"-{K}", ("v", "y"): f"-{H}", ("x", "x"): f"1 + {K}^2",
             ("y", "y"): f"1 + {H}^2", ("x", "y"): f"{K}*{H}"}
    gbar = MetricField.from_expr(chart, comps, "riemannian", params, "gbar")
    kbar = _vec(chart, ["1", "0", "0"], params, "kbar")
    xbar = _vec(chart, [k_expr, "1", "0"], params, "xbar")
    ybar = _vec(chart, [h_expr, "0", "1"], params, "ybar")
    return chart, gbar, kbar, xbar, ybar


def pp_truncated(k_expr: str = "-y", h_expr: str = "x", w: str = "exp(T/2)", params=None) -> SpacetimeSpec:
    """−dT² + w(T)² ḡ over the truncated pp-wave ḡ, k = k̄/w + ∂_T, t = ∇T."""
    params = dict(params or {})
    c3, gbar, kbar, xbar, ybar = pp_bar(k_expr, h_expr, params)
    chart = Chart("pp_truncated", ("T", "v", "x", "y"))
    W = f"({w})"
    K, H = f"({k_expr})", f"({h_expr})"
    comps = {("T", "T"): "-1", ("v", "v"): f"{W}^2", ("v", "x"): f"-{W}^2*{K}", ("v", "y"): f"-{W}^2*{H}",
             ("x", "x"): f"{W}^2*(1 + {K}^2)", ("y", "y"): f"{W}^2*(1 + {H}^2)", ("x", "y"): f"{W}^2*{K}*{H}"}
    g = MetricField.from_expr(chart, comps, "lorentzian", params)
    k = _vec(chart, ["1", f"1/{W}", "0", "0"], params, "k")
    t = _vec(chart, ["-1", "0", "0", "0"], params, "t")
    tau = _scalar(chart, "T", params, "tau")
    wf = ScalarField.from_expr(chart, w, params, "w")

    def ibar_signed(q3):
        fr = frame_from_fields(gbar, (kbar,), xbar, ybar, q3)
        return float(kbar(q3) @ gbar(q3) @ calc.lie_bracket(xbar, ybar, q3)), fr.orientation_sign

    kf = ScalarField.from_expr(c3, k_expr, params)
    hf = ScalarField.from_expr(c3, h_expr, params)

    def hx_minus_ky(q3):
        return float(hf.jet(q3, 1).grad().value[1] - kf.jet(q3, 1).grad().value[2])

    box = {"T": (-1.0, 1.0), "v": (-1.0, 1.0), "x": (-1.0, 1.0), "y": (-1.0, 1.0)}
    for q in halton_points(chart, box, 16):
        if abs(hx_minus_ky(tuple(q[1:]))) < 1e-12:
            raise CatalogError(f"pp_truncated: h_x - k_y vanishes at {tuple(float(v) for v in q)}")
    p0 = (0.0, 0.3, 0.2, -0.4)
    spec = SpacetimeSpec(
        "pp_truncated", "warped product over a truncated pp-wave 3-metric", chart, g, k, t, tau,
        ParamFn.exponential(), orientation=_orientation_for_negative_twist(g, k, t, p0),
        box=box,
        params={"k": k_expr, "h": h_expr, "w": w, **params},
        extras={"gbar": gbar, "kbar": kbar, "xbar": xbar, "ybar": ybar, "chart3": c3},
    )

    def twist_bar(s, p):
        q3 = tuple(p[1:])
        val, _ = ibar_signed(q3)
        return val, hx_minus_ky(q3)

    def iota(s, p):
        val, _ = ibar_signed(tuple(p[1:]))
        return twist(s.g, s.k, s.frame(p)), -abs(val) / float(wf(p))

    def killing(s, p):
        return _max_abs(calc.lie_derivative_metric(gbar, kbar, tuple(p[1:]))), 0.0

    def alpha(s, p):
        wj = wf.jet(p, 1)
        want = float(wj.grad().value[0] / wj.value)
        acc = calc.covariant_derivative(s.g, s.k, s.k, p)
        K = s.k(p)
        return float(acc @ K / (K @ K)), want

    spec.expected = [
        Expected("iota_bar", "h_x - k_y", twist_bar, 1e-9),
        Expected("kbar_killing", "0", killing, 1e-9),
        Expected("kbar_unit", "1", lambda s, p: (float(kbar(p[1:]) @ gbar(p[1:]) @ kbar(p[1:])), 1.0), 1e-12),
        Expected("iota", "-|iota_bar|/w", iota, 1e-9),
        Expected("alpha", "w'/w", alpha, 1e-9),
    ]
    return spec


def plane_wave() -> SpacetimeSpec:
    """Plane wave H = −x² − y² with Z = −∂_u − y∂_x + x∂_y and t = ∇u = ∂_v."""
    chart = Chart("plane_wave", ("u", "v", "x", "y"))
    g = MetricField.from_expr(chart, {("u", "u"): "-x^2 - y^2", ("u", "v"): "1", ("x", "x"): "1", ("y", "y"): "1"},
                              "lorentzian")
    Z = _vec(chart, ["-1", "0", "-y", "x"], {}, "Z")
    t = _vec(chart, ["0", "1", "0", "0"], {}, "d_v")
    tau = _scalar(chart, "u", {}, "tau")
    xf = _vec(chart, ["0", "-y", "1", "0"], {}, "x")
    yf = _vec(chart, ["0", "x", "0", "1"], {}, "y")
    p0 = (0.1, 0.2, 0.3, 0.4)
    orient = frame_from_fields(g, (Z, t), xf, yf, p0).orientation_sign
    spec = SpacetimeSpec(
        "plane_wave", "plane wave with H = -x^2 - y^2, k = Z, t = grad u", chart, g, Z, t, tau, ParamFn.exponential(),
        orientation=orient, box={"u": (-2.0, 2.0), "v": (-2.0, 2.0), "x": (-2.0, 2.0), "y": (-2.0, 2.0)},
        ell=constant_field(chart, 1.0), extras={"x": xf, "y": yf},
    )

    def geo(s, p):
        acc = calc.covariant_derivative(s.g, Z, Z, p)
        G = s.g(p)
        return float(max(abs(acc @ G @ xf(p)), abs(acc @ G @ yf(p)), np.linalg.norm(acc))), 0.0

    def shear(s, p):
        fr = frame_from_fields(s.g, (Z, t), xf, yf, p)
        return float(np.hypot(*shear_coefficients(s.g, Z, fr))), 0.0

    spec.expected = [
        Expected("iota", "k_y - h_x = -2", lambda s, p: (twist(s.g, Z, s.frame(p)), -2.0), 1e-12),
        Expected("iota_given_frame", "-2",
                 lambda s, p: (twist(s.g, Z, frame_from_fields(s.g, (Z, t), xf, yf, p)), -2.0), 1e-12),
        Expected("Z_geodesic", "0", geo, 1e-10),
        Expected("Z_shear", "0", shear, 1e-12),
        Expected("grad_u", "d_v", lambda s, p: (_max_abs(calc.gradient(s.g, tau, p) - t(p)), 0.0), 1e-12),
    ]
    return spec


# ---------------------------------------------------------------------------
# Petrov type D


KERR_RHO2 = "r^2 + a^2*cos(th)^2"
KERR_DELTA = "r^2 - 2*m*r + a^2"


def _kerr_metric_components(factor: str = "1"):
    rho2, D = KERR_RHO2, KERR_DELTA
    F = f"({factor})"
    return {
        ("t", "t"): _sub(f"{F}*(-1 + 2*m*r/{{rho2}})", rho2=rho2),
        ("r", "r"): _sub(f"{F}*{{rho2}}/{{D}}", rho2=rho2, D=D),
        ("th", "th"): _sub(f"{F}*{{rho2}}", rho2=rho2),
        ("ph", "ph"): _sub(f"{F}*(r^2 + a^2 + 2*m*r*a^2*sin(th)^2/{{rho2}})*sin(th)^2", rho2=rho2),
        ("t", "ph"): _sub(f"{F}*(-2*m*r*a*sin(th)^2/{{rho2}})", rho2=rho2),
    }


def _kerr_chart(name):
    return Chart(name, ("t", "r", "th", "ph"), lambda p: 0.0 < p[2] < math.pi and p[1] ** 2 + 1e-300 > 0
                 and not (abs(p[1]) < 1e-12 and abs(math.cos(p[2])) < 1e-12))


def _kerr_fields(chart, params):
    D = KERR_DELTA
    kp = _vec(chart, [_sub("(r^2 + a^2)/{D}", D=D), "1", "0", _sub("a/{D}", D=D)], params, "k+")
    km = _vec(chart, [_sub("(r^2 + a^2)/{D}", D=D), "-1", "0", _sub("a/{D}", D=D)], params, "k-")
    E2 = _vec(chart, ["0", "0", _sub("1/sqrt({rho2})", rho2=KERR_RHO2), "0"], params, "E2")
    E3 = _vec(chart, [_sub("a*sin(th)/sqrt({rho2})", rho2=KERR_RHO2), "0", "0",
                      _sub("1/(sqrt({rho2})*sin(th))", rho2=KERR_RHO2)], params, "E3")
    return kp, km, E2, E3


def _check_rapid(a, m):
    if not (a > m > 0):
        raise CatalogError(f"kerr requires a > m > 0 (rapid rotation), got a={a:g}, m={m:g}")


def _orientation_from(g, vfields, x, y, p) -> int:
    return frame_from_fields(g, vfields, x, y, p).orientation_sign


KERR_BOX = {"t": (-1.0, 1.0), "r": (0.5, 10.0), "th": (math.pi / 2 + 0.1, math.pi - 0.1), "ph": (0.0, 2 * math.pi)}


def kerr(a: float = 2.0, m: float = 1.0) -> SpacetimeSpec:
    """Rapidly rotating Kerr with k± and the Petrov candidate u = e^{h}p, f(u) = u.

    The orientation is the one in which JE₂ = −E₃: with it the oriented twist of
    k₊ equals 2a cosθ/ρ² and is negative below the equator.
    """
    _check_rapid(a, m)
    params = {"a": a, "m": m}
    chart = _kerr_chart("kerr")
    g = MetricField.from_expr(chart, _kerr_metric_components(), "lorentzian", params, "kerr")
    kp, km, E2, E3 = _kerr_fields(chart, params)
    p_text = _sub("sqrt({D}/2)/sqrt({rho2})", D=KERR_DELTA, rho2=KERR_RHO2)
    u = _scalar(chart, _sub("(r^2 + a^2 + 1)/{D}*{p}", D=KERR_DELTA, p=p_text), params, "u")
    p0 = (0.0, 3.0, 2.2, 0.5)
    orient = -_orientation_from(g, (kp, km), E2, E3, p0)
    spec = SpacetimeSpec(
        "kerr", "rapidly rotating Kerr, Petrov variant (not admissible)", chart, g, kp, km, None, ParamFn.affine(0.0),
        kind="petrov", orientation=orient, box=dict(KERR_BOX), params=params, u=u,
        expected_negative=("admissible",), extras={"E2": E2, "E3": E3, "p": _scalar(chart, p_text, params, "p")},
    )
    rho2 = _scalar(chart, KERR_RHO2, params)

    def iota(s, p):
        _, _, th, _ = p
        return twist(s.g, kp, s.frame(p)), 2 * a * math.cos(th) / float(rho2(p))

    def bracket(s, p, sign, E):
        want = -sign * p[1] / float(rho2(p)) * E(p)
        X = kp if sign > 0 else km
        return _max_abs(calc.lie_bracket(X, E, p) - want), 0.0

    def p_check(s, p):
        G = s.g(p)
        return 1 / math.sqrt(-float(kp(p) @ G @ km(p))), float(s.extras["p"](p))

    def JE2(s, p):
        from .jstruct import build_J
        Jm = build_J(s.g, kp, km, p, s.orientation)
        return _max_abs(Jm @ E2(p) + E3(p)), 0.0

    spec.expected = [
        Expected("iota", "2 a cos(th)/rho^2", iota, 1e-8),
        Expected("ricci", "0", lambda s, p: (_max_abs(calc.curvature(s.g, p)["ricci"]), 0.0), 1e-6),
        Expected("bracket_kp_E2", "[k+,E2] = -(r/rho^2) E2", lambda s, p: bracket(s, p, 1, E2), 1e-9),
        Expected("bracket_km_E3", "[k-,E3] = +(r/rho^2) E3", lambda s, p: bracket(s, p, -1, E3), 1e-9),
        Expected("kp_shear", "0", lambda s, p: (float(np.hypot(*shear_coefficients(s.g, kp, s.frame(p)))), 0.0), 1e-8),
        Expected("km_shear", "0", lambda s, p: (float(np.hypot(*shear_coefficients(s.g, km, s.frame(p)))), 0.0), 1e-8),
        Expected("kp_geodesic", "0", lambda s, p: (float(np.linalg.norm(calc.covariant_derivative(s.g, kp, kp, p))),
                                                   0.0), 1e-9),
        Expected("p", "sqrt(Delta/2)/rho", p_check, 1e-10),
        Expected("J_E2", "J E2 = -E3", JE2, 1e-10, "DERIVED"),
    ]
    return spec


NUT_PHI = "(r^2 - 2*m*r - l^2)/(r^2 + l^2)"


def nut(m: float = 1.0, l: float = 1.0) -> SpacetimeSpec:
    """NUT spacetime in (u, r, x, y) with k₊ = ∂_r, k₋ = ∂_u − ½Φ∂_r, potential −r and f = exp."""
    if l <= 0:
        raise CatalogError("nut requires l > 0")
    params = {"m": m, "l": l}
    chart = Chart("nut", ("u", "r", "x", "y"), lambda p: math.sin(p[2]) != 0.0)
    P = NUT_PHI
    comps = {
        ("u", "u"): _sub("-{P}", P=P), ("u", "r"): "-1", ("r", "y"): "2*l*cos(x)",
        ("u", "y"): _sub("2*{P}*l*cos(x)", P=P), ("x", "x"): "r^2 + l^2",
        ("y", "y"): _sub("-{P}*4*l^2*cos(x)^2 + (r^2 + l^2)*sin(x)^2", P=P),
    }
    g = MetricField.from_expr(chart, comps, "lorentzian", params, "nut")
    kp = _vec(chart, ["0", "1", "0", "0"], params, "k+")
    km = _vec(chart, ["1", _sub("-{P}/2", P=P), "0", "0"], params, "k-")
    s = "(r^2 + l^2)"
    # E2 = (rA − lB)/s, E3 = −(lA + rB)/s with A = ∂_x, B = 2l cot x ∂_u + csc x ∂_y
    E2 = _vec(chart, [f"-l*2*l*cos(x)/sin(x)/{s}", "0", f"r/{s}", f"-l/sin(x)/{s}"], params, "E2")
    E3 = _vec(chart, [f"-r*2*l*cos(x)/sin(x)/{s}", "0", f"-l/{s}", f"-r/sin(x)/{s}"], params, "E3")
    u = _scalar(chart, "-r", params, "u")
    p0 = (0.0, 0.7, 1.2, 0.3)
    probe = PetrovCandidate(g, kp, km, u, ParamFn.exponential(), 1)
    orient = 1 if probe.iota(p0) < 0 else -1
    spec = SpacetimeSpec(
        "nut", "NUT spacetime, Petrov variant with p = 1", chart, g, kp, km, None, ParamFn.exponential(),
        kind="petrov", orientation=orient,
        box={"u": (-1.0, 1.0), "r": (-3.0, 3.0), "x": (0.3, math.pi - 0.3), "y": (0.0, 2 * math.pi)},
        params=params, u=u, extras={"E2": E2, "E3": E3},
    )

    def frame_span(sp, p):
        fr = sp.frame(p)
        G = sp.g(p)
        B = np.column_stack([E2(p), E3(p)])
        res = []
        for v in (fr.x, fr.y):
            c = np.linalg.solve(B.T @ G @ B, B.T @ G @ v)
            res.append(np.linalg.norm(v - B @ c))
        return float(max(res)), 0.0

    spec.expected = [
        Expected("iota", "-2l/(r^2+l^2)", lambda sp, p: (twist(sp.g, kp, sp.frame(p)), -2 * l / (p[1] ** 2 + l * l)),
                 1e-9),
        Expected("g_ur", "-1", lambda sp, p: (float(sp.g(p)[0, 1]), -1.0), 1e-12),
        Expected("g_kp_km", "-1", lambda sp, p: (float(kp(p) @ sp.g(p) @ km(p)), -1.0), 1e-12),
        Expected("ricci", "0", lambda sp, p: (_max_abs(calc.curvature(sp.g, p)["ricci"]), 0.0), 1e-6),
        Expected("frame_span", "span(E2, E3)", frame_span, 1e-9, "DERIVED"),
    ]
    return spec


def conformal_kerr(a: float = 2.0, m: float = 1.0, r0: float = 1.0) -> SpacetimeSpec:
    """g̃ = (Δ/ρ²) g_Kerr with k = k₊, t = ∇̃r = ∂_r, τ = r and f = e^{−h}, h = log Δ − 2 log r + const."""
    _check_rapid(a, m)
    if r0 <= 0:
        raise CatalogError("conformal_kerr requires r0 > 0")
    params = {"a": a, "m": m, "r0": r0}
    chart = Chart("conformal_kerr", ("t", "r", "th", "ph"), lambda p: 0.0 < p[2] < math.pi and p[1] != 0.0)
    factor = _sub("{D}/({rho2})", D=KERR_DELTA, rho2=KERR_RHO2)
    g = MetricField.from_expr(chart, _kerr_metric_components(factor), "lorentzian", params, "conformal kerr")
    kp, km, E2, E3 = _kerr_fields(chart, params)
    t = _vec(chart, ["0", "1", "0", "0"], params, "d_r")
    tau = _scalar(chart, "r", params, "tau")
    f = ParamFn.custom("tau^2/(tau^2 - 2*m*tau + a^2)*(r0^2 - 2*m*r0 + a^2)/r0^2", params)
    sc = _scalar(chart, f"sqrt({KERR_RHO2})/sqrt({KERR_DELTA})", params)
    E2t = calc.scaled_field(sc, E2)
    E3t = calc.scaled_field(sc, E3)
    p0 = (0.0, 3.0, 2.2, 0.5)
    orient = -_orientation_from(g, (kp, t), E2t, E3t, p0)
    spec = SpacetimeSpec(
        "conformal_kerr", "conformally Kerr, admissible with k = k+ and t = grad r", chart, g, kp, t, tau, f,
        orientation=orient, box=dict(KERR_BOX), params=params, extras={"E2": E2t, "E3": E3t},
    )
    rho2 = _scalar(chart, KERR_RHO2, params)
    delta = _scalar(chart, KERR_DELTA, params)

    def alpha(s, p):
        acc = calc.covariant_derivative(s.g, kp, kp, p)
        K = kp(p)
        j = np.argmax(np.abs(K))
        r = p[1]
        return float(acc[j] / K[j]), 2 * ((r - m) / float(delta(p)) - r / float(rho2(p)))

    spec.expected = [
        Expected("grad_r_unit", "1", lambda s, p: (float(t(p) @ s.g(p) @ t(p)), 1.0), 1e-10),
        Expected("grad_r", "d_r", lambda s, p: (_max_abs(calc.gradient(s.g, tau, p) - t(p)), 0.0), 1e-10),
        Expected("alpha", "2((r-m)/Delta - r/rho^2)", alpha, 1e-8),
        Expected("iota", "2 a cos(th)/rho^2",
                 lambda s, p: (twist(s.g, kp, s.frame(p)), 2 * a * math.cos(p[2]) / float(rho2(p))), 1e-8),
        Expected("g_kt", "1", lambda s, p: (float(kp(p) @ s.g(p) @ t(p)), 1.0), 1e-10),
    ]
    return spec


# ---------------------------------------------------------------------------
# solvable Lie group


def _lie_exp_texts(r: float):
    """Entries of E(b) = exp(bM), M = [[0, r], [−1, 1]], as expressions in b."""
    disc = 1 - 4 * r
    if disc > 0:
        mu = math.sqrt(disc) / 2
        C, S = "cosh(mu*{b})", "sinh(mu*{b})/mu"
    elif disc < 0:
        mu = math.sqrt(-disc) / 2
        C, S = "cos(mu*{b})", "sin(mu*{b})/mu"
    else:
        mu = 0.0
        C, S = "1", "{b}"

    def E(b):
        c, s = C.replace("{b}", b), S.replace("{b}", b)
        e = f"exp({b}/2)"
        return [[f"{e}*({c} - ({s})/2)", f"{e}*r*({s})"], [f"-{e}*({s})", f"{e}*({c} + ({s})/2)"]]

    return E, mu


_HALF_NOTE = "with the 1/2-normalized shear coefficients the engine finds -1/2; -1 is the unnormalized entry"


def solvable_lie_group(r: float = -1.0) -> SpacetimeSpec:
    """Left-invariant orthonormal frame with [k,x]=y, [t,y]=y, [t,k]=k, [x,y]=y+rk in coordinates (s, b, n1, n2).

    t = ∂_s, x = ∂_b, (k, y) = e^s E(b) ∂_n with E(b) = exp(bM); the coframe is
    ds, db and e^{−s}E(−b)dn, so g = k̂² − ds² + db² + ŷ² and t = ∇(−s).
    """
    if r == 0:
        raise CatalogError("solvable_lie_group requires r != 0")
    E, mu = _lie_exp_texts(r)
    params = {"r": r, "mu": mu}
    chart = Chart("lie_group", ("s", "b", "n1", "n2"))
    F = E("(-b)")
    # n-block: e^{−2s} FᵀF
    def ftf(i, j):
        return f"exp(-2*s)*(({F[0][i]})*({F[0][j]}) + ({F[1][i]})*({F[1][j]}))"

    comps = {("s", "s"): "-1", ("b", "b"): "1", ("n1", "n1"): ftf(0, 0), ("n1", "n2"): ftf(0, 1),
             ("n2", "n2"): ftf(1, 1)}
    g = MetricField.from_expr(chart, comps, "lorentzian", params, "lie group")
    Eb = E("b")
    k = _vec(chart, ["0", "0", f"exp(s)*{Eb[0][0]}", f"exp(s)*{Eb[1][0]}"], params, "k")
    y = _vec(chart, ["0", "0", f"exp(s)*{Eb[0][1]}", f"exp(s)*{Eb[1][1]}"], params, "y")
    t = _vec(chart, ["1", "0", "0", "0"], params, "t")
    x = _vec(chart, ["0", "1", "0", "0"], params, "x")
    tau = _scalar(chart, "-s", params, "tau")
    orient = _orientation_from(g, (k, t), x, y, (0.1, 0.2, 0.3, 0.4))
    spec = SpacetimeSpec(
        "solvable_lie_group", "solvable Lie group with non-shear-free k, t", chart, g, k, t, tau,
        ParamFn.exponential(), orientation=orient,
        box={"s": (-1.0, 1.0), "b": (-1.0, 1.0), "n1": (-1.0, 1.0), "n2": (-1.0, 1.0)}, params={"r": r},
        extras={"x": x, "y": y},
    )
    frame = {"k": k, "t": t, "x": x, "y": y}
    spec.extras["frame"] = frame
    for p in [(0.1, 0.2, 0.3, 0.4), (-0.5, 0.7, -0.2, 0.9)]:
        res = lie_bracket_residuals(frame, r, p)
        bad = [n for n, v in res.items() if v > 1e-9]
        if bad:
            raise CatalogError(f"Lie group frame fails bracket relations {bad}")
        G = g(p)
        M = np.array([[v(p) @ G @ w(p) for w in frame.values()] for v in frame.values()])
        if _max_abs(M - np.diag([1.0, -1.0, 1.0, 1.0])) > 1e-9:
            raise CatalogError("Lie group frame is not orthonormal")

    def given(s, p):
        return frame_from_fields(s.g, (k, t), x, y, p)

    spec.expected = [
        Expected("brackets", "Lie algebra relations", lambda s, p: (max(lie_bracket_residuals(frame, r, p).values()),
                                                                    0.0), 1e-9),
        Expected("sigma2_k", "-1", lambda s, p: (shear_coefficients(s.g, k, given(s, p))[1], -1.0), 1e-9,
                 note=_HALF_NOTE),
        Expected("sigma1_t", "-1", lambda s, p: (shear_coefficients(s.g, t, given(s, p))[0], -1.0), 1e-9,
                 note=_HALF_NOTE),
        Expected("sigma2_k_half", "-1/2", lambda s, p: (shear_coefficients(s.g, k, given(s, p))[1], -0.5), 1e-9,
                 "DERIVED"),
        Expected("sigma1_t_half", "-1/2", lambda s, p: (shear_coefficients(s.g, t, given(s, p))[0], -0.5), 1e-9,
                 "DERIVED"),
        Expected("sigma1_k", "0", lambda s, p: (shear_coefficients(s.g, k, given(s, p))[0], 0.0), 1e-9),
        Expected("sigma2_t", "0", lambda s, p: (shear_coefficients(s.g, t, given(s, p))[1], 0.0), 1e-9),
        Expected("abs_iota", "|r|", lambda s, p: (abs(twist(s.g, k, s.frame(p))), abs(r)), 1e-9),
        Expected("t_geodesic", "0", lambda s, p: (float(np.linalg.norm(calc.covariant_derivative(s.g, t, t, p))),
                                                  0.0), 1e-9),
        Expected("k_not_geodesic", "nabla_k k != 0",
                 lambda s, p: (float(np.linalg.norm(calc.covariant_derivative(s.g, k, k, p))), 0.0), 1e-9,
                 "REFERENCE", negative=True),
        Expected("k_not_pregeodesic", "nabla_k k not parallel to k",
                 lambda s, p: (pregeodesic_factor(s.g, k, p).residual, 0.0), 1e-9, "REFERENCE", negative=True),
        Expected("k_not_killing", "L_k g != 0", lambda s, p: (_max_abs(calc.lie_derivative_metric(s.g, k, p)), 0.0),
                 1e-9, "REFERENCE", negative=True),
    ]
    return spec


def lie_bracket_residuals(frame: dict, r: float, p) -> dict:
    """All ten brackets [a, b], a ≤ b in the order k, t, x, y, against [k,x]=y, [t,y]=y, [t,k]=k, [x,y]=y+rk."""
    names = ["k", "t", "x", "y"]
    want = {("k", "x"): {"y": 1.0}, ("t", "y"): {"y": 1.0}, ("t", "k"): {"k": 1.0}, ("x", "y"): {"y": 1.0, "k": r}}
    vals = {n: frame[n](p) for n in names}
    out = {}
    for i, a in enumerate(names):
        for b in names[i:]:
            target = np.zeros(len(p))
            if (a, b) in want:
                for n, c in want[(a, b)].items():
                    target += c * vals[n]
            elif (b, a) in want:
                for n, c in want[(b, a)].items():
                    target -= c * vals[n]
            out[f"[{a},{b}]"] = _max_abs(calc.lie_bracket(frame[a], frame[b], p) - target)
    return out


# ---------------------------------------------------------------------------
# SKR


def skr_model(Q_expr: str = "tau^2 + 1", a_const: float = 1.0, c_const: float = 0.0, p_expr: str = "tau - c",
              q_const: float = -1.0, entry_id: str = "skr"):
    """(g_S, g) on the chart (τ, θ, x, y) over the flat base with connection form A = x dy − y dx.

    u = ∂_θ, v = Q∂_τ, horizontal lifts w_x = ∂_x + y∂_θ, w_y = ∂_y − x∂_θ.
    g_S = dτ²/Q + (Q/a²)û² + 2τ_c(dx² + dy²), û = a(dθ + A);
    g = p(dθ + A)² + (q/Q²)dτ² + dx² + dy², k = u, t = −v, f = τ_c/p.
    """
    if q_const >= 0:
        raise CatalogError("skr requires q < 0")
    params = {"a": a_const, "c": c_const, "q": q_const}
    chart = Chart(entry_id, ("tau", "th", "x", "y"), lambda p: p[0] > c_const)
    Qs, Ps = f"({Q_expr})", f"({p_expr})"

    def connection_metric(P: str, hfac: str):
        return {("th", "th"): P, ("th", "x"): f"-{P}*y", ("th", "y"): f"{P}*x", ("x", "x"): f"{P}*y^2 + {hfac}",
                ("y", "y"): f"{P}*x^2 + {hfac}", ("x", "y"): f"-{P}*x*y"}

    comps = connection_metric(Ps, "1")
    comps[("tau", "tau")] = f"q/{Qs}^2"
    g = MetricField.from_expr(chart, comps, "lorentzian", params, "skr ansatz")
    cS = connection_metric(f"({Qs}/a^2*a^2)", "2*(tau - c)")
    cS[("tau", "tau")] = f"1/{Qs}"
    gS = MetricField.from_expr(chart, cS, "riemannian", params, "g_S")
    k = _vec(chart, ["0", "1", "0", "0"], params, "u")
    t = _vec(chart, [f"-{Qs}", "0", "0", "0"], params, "-v")
    v = _vec(chart, [Qs, "0", "0", "0"], params, "v")
    wx = _vec(chart, ["0", "y", "1", "0"], params, "w_x")
    wy = _vec(chart, ["0", "-x", "0", "1"], params, "w_y")
    tau = _scalar(chart, "tau", params, "tau")
    f = ParamFn.custom(f"(tau - c)/{Ps}", params)
    p0 = (c_const + 1.3, 0.2, 0.3, -0.4)
    orient = _orientation_from(g, (k, t), wx, wy, p0)
    box = {"tau": (c_const + 0.5, c_const + 3.0), "th": (-1.0, 1.0), "x": (-1.0, 1.0), "y": (-1.0, 1.0)}
    for p in [p0, (c_const + 2.1, -0.5, 0.7, 0.1)]:
        res = skr_relations(gS, k, v, wx, wy, p)
        bad = [n for n, val in res.items() if val > 1e-8]
        if bad:
            raise CatalogError(f"SKR relations fail: {bad}")
    pf = _scalar(chart, p_expr, params, "p")
    Qf = _scalar(chart, Q_expr, params, "Q")
    spec = SpacetimeSpec(
        entry_id, f"SKR ansatz, Q = {Q_expr}, p = {p_expr}", chart, g, k, t, tau, f, orientation=orient, box=box,
        params={"Q": Q_expr, "a": a_const, "c": c_const, "p": p_expr, "q": q_const},
        extras={"gS": gS, "v": v, "w_x": wx, "w_y": wy, "p": pf, "Q": Qf},
    )

    def gk_gs(s, p):
        cand = s.extras.get("_cand") or s.candidate()
        s.extras["_cand"] = cand
        return _max_abs(cand.gK(p) - gS(p)), 0.0

    def ell(s, p):
        cand = s.extras.get("_cand") or s.candidate()
        s.extras["_cand"] = cand
        return float(cand.ell(p)), -q_const / float(Qf(p))

    spec.expected = [
        Expected("gK_equals_gS", "g_K = g_S", gk_gs, 1e-7),
        Expected("ell", "-q/Q", ell, 1e-8),
        Expected("iota", "-2p", lambda s, p: (twist(s.g, k, s.frame(p)), -2 * float(pf(p))), 1e-8),
        Expected("k_killing", "0", lambda s, p: (_max_abs(calc.lie_derivative_metric(s.g, k, p)), 0.0), 1e-8),
        Expected("relations", "SKR relations i-vi", lambda s, p: (max(skr_relations(gS, k, v, wx, wy, p).values()),
                                                                  0.0), 1e-8, "DERIVED"),
    ]
    return spec


def skr_relations(gS, u, v, wx, wy, p) -> dict:
    G = gS(p)
    U, V = u(p), v(p)
    out = {
        "i": abs(float(U @ G @ V)),
        "ii": 0.0 if float(V @ G @ V) > 0 else 1.0,
        "iii": _max_abs(calc.lie_bracket(u, v, p)),
        "iv": max(_max_abs(calc.lie_bracket(v, w, p)) for w in (wx, wy)),
        "v": max(_max_abs(calc.lie_bracket(u, w, p)) for w in (wx, wy)),
    }
    br = calc.lie_bracket(wx, wy, p)
    # vertical part of [w_x, w_y] must be −2 ω^h(w_x, w_y) u = −2u
    Bv = np.column_stack([U, V])
    coef = np.linalg.solve(Bv.T @ G @ Bv, Bv.T @ G @ br)
    out["vi"] = float(np.max(np.abs(coef - np.array([-2.0, 0.0]))))
    return out


def skr(Q: str = "tau^2 + 1", a: float = 1.0, c: float = 0.0, p: str = "tau - c", q: float = -1.0) -> SpacetimeSpec:
    """SKR ansatz with k = u Killing and g(k, k) = p(τ); g_K recovers the Kähler model g_S."""
    return skr_model(Q, a, c, p, q, "skr")


def skr_geodesic(Q: str = "tau^2 + 1", a: float = 1.0, c: float = 0.0, p: str = "1", q: float = -1.0) -> SpacetimeSpec:
    """SKR ansatz with p = 1, so k is also geodesic of constant length."""
    return skr_model(Q, a, c, p, q, "skr_geodesic")


# ---------------------------------------------------------------------------
# registry


REGISTRY = {
    "conformal_kerr": (conformal_kerr, {"a": 2.0, "m": 1.0, "r0": 1.0}),
    "de_sitter": (de_sitter, {"r": 2.0, "w_variant": "square"}),
    "direct_product_hopf": (direct_product_hopf, {"radius": 1.0}),
    "kerr": (kerr, {"a": 2.0, "m": 1.0}),
    "nut": (nut, {"m": 1.0, "l": 1.0}),
    "plane_wave": (plane_wave, {}),
    "pp_truncated": (pp_truncated, {"k_expr": "-y", "h_expr": "x", "w": "exp(T/2)"}),
    "skr": (skr, {"Q": "tau^2 + 1", "a": 1.0, "c": 0.0, "p": "tau - c", "q": -1.0}),
    "skr_geodesic": (skr_geodesic, {"Q": "tau^2 + 1", "a": 1.0, "c": 0.0, "p": "1", "q": -1.0}),
    "solvable_lie_group": (solvable_lie_group, {"r": -1.0}),
}


def entry_ids() -> list:
    return sorted(REGISTRY)


def describe(entry_id: str) -> str:
    fn, _ = REGISTRY[entry_id]
    return (fn.__doc__ or "").strip().splitlines()[0]


def build(entry_id: str, **overrides) -> SpacetimeSpec:
    """Construct an entry, converting override strings to the default's type."""
    if entry_id not in REGISTRY:
        raise CatalogError(f"unknown entry '{entry_id}' (known: {', '.join(entry_ids())})")
    fn, defaults = REGISTRY[entry_id]
    kwargs = dict(defaults)
    for name, val in overrides.items():
        if name not in defaults:
            raise CatalogError(f"entry '{entry_id}' has no parameter '{name}'")
        if isinstance(defaults[name], float) and isinstance(val, str):
            try:
                val = float(val)
            except ValueError as exc:
                raise CatalogError(f"parameter {name} must be a number, got '{val}'") from exc
        kwargs[name] = val
    return fn(**kwargs)
