"""Relative shear and twist of a vector field with respect to V ⊕ H."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import calculus as calc
from .fields import Field, MetricField, VectorField
from .split import DegenerateSplitError, frame_jets, pick_pivot, split_jets


@dataclass(frozen=True)
class SplitFrame:
    """Oriented orthonormal frame (x, y) of H at ``point``, with smooth extensions."""

    point: tuple
    vfields: tuple
    x: np.ndarray
    y: np.ndarray
    orientation_sign: int
    pivot: int
    x_field: VectorField = field(repr=False)
    y_field: VectorField = field(repr=False)

    @property
    def k(self) -> np.ndarray:
        return self.vfields[0](self.point)

    @property
    def t(self) -> np.ndarray:
        return self.vfields[1](self.point)

    def determinant(self) -> float:
        cols = [X(self.point) for X in self.vfields] + [self.x, self.y]
        return float(np.linalg.det(np.column_stack(cols)))

    def rotated(self, s: float) -> "SplitFrame":
        """Frame turned by angle ``s`` inside H (same orientation)."""
        c, n = np.cos(s), np.sin(s)
        xf, yf = self.x_field, self.y_field
        chart = xf.chart
        x2 = VectorField(chart, lambda p, o: xf.jet(p, o) * c + yf.jet(p, o) * n)
        y2 = VectorField(chart, lambda p, o: xf.jet(p, o) * -n + yf.jet(p, o) * c)
        return SplitFrame(self.point, self.vfields, c * self.x + n * self.y, -n * self.x + c * self.y,
                          self.orientation_sign, self.pivot, x2, y2)


def build_frame(g: MetricField, k: Field, t: Field | None, p, chart_orientation: int = 1) -> SplitFrame:
    """Frame for H = span(k, t)^⊥ (or k^⊥ when ``t`` is None on a 3-manifold).

    The first frame vector is the normalized H-projection of a coordinate
    direction chosen at ``p`` and then frozen; the second is its quarter turn,
    which makes (k, t, x, y) positively oriented relative to ``chart_orientation``.
    """
    vfields = (k,) if t is None else (k, t)
    p = tuple(float(v) for v in p)
    s = split_jets(g, vfields, p, 0, chart_orientation)
    hgram = s.PH.value.T @ s.G.value @ s.PH.value
    ev = np.linalg.eigvalsh(0.5 * (hgram + hgram.T))
    scale = max(1.0, float(np.max(np.abs(ev))))
    nonzero = ev[np.abs(ev) > 1e-9 * scale]
    if len(nonzero) != 2 or np.any(nonzero < 0):
        signs = "".join("+" if e > 0 else "-" for e in nonzero)
        raise DegenerateSplitError(f"H is not positive definite (eigenvalue signs: {signs or 'none'})")
    pivot = pick_pivot(s)
    chart = g.chart

    def xfn(q, order):
        return frame_jets(g, vfields, q, order, chart_orientation, pivot)[0]

    def yfn(q, order):
        return frame_jets(g, vfields, q, order, chart_orientation, pivot)[1]

    xf = VectorField(chart, xfn, "x")
    yf = VectorField(chart, yfn, "y")
    return SplitFrame(p, vfields, xf(p), yf(p), int(chart_orientation), pivot, xf, yf)


def frame_from_fields(g: MetricField, vfields, x_field: Field, y_field: Field, p) -> SplitFrame:
    """Wrap an explicitly given frame; its orientation sign is read off the determinant."""
    p = tuple(float(v) for v in p)
    x, y = x_field(p), y_field(p)
    cols = [X(p) for X in vfields] + [x, y]
    sign = 1 if np.linalg.det(np.column_stack(cols)) > 0 else -1
    return SplitFrame(p, tuple(vfields), x, y, sign, -1, x_field, y_field)


def frame_error(g: MetricField, frame: SplitFrame) -> float:
    """Largest deviation from orthonormality of (x, y) and orthogonality to V."""
    G = g(frame.point)
    x, y = frame.x, frame.y
    errs = [x @ G @ x - 1, y @ G @ y - 1, x @ G @ y]
    for X in frame.vfields:
        v = X(frame.point)
        errs += [x @ G @ v, y @ G @ v]
    return float(np.max(np.abs(errs)))


@dataclass
class OpticalReport:
    sigma1: float
    sigma2: float
    iota: float
    shear_matrix: np.ndarray
    twist_matrix: np.ndarray
    twist_function: float
    shear_invariant: float
    alpha: Optional[float] = None
    route_discrepancy: float = 0.0
    divergence: Optional[float] = None
    killing_residual: Optional[float] = None
    geodesic_residual: Optional[float] = None


def _operator_on_h(g: MetricField, X: Field, frame: SplitFrame) -> np.ndarray:
    """Mh[a, b] = ⟨∇_{e_b} X, e_a⟩ for e = (x, y)."""
    p = frame.point
    M = calc.nabla_jet(g, X, p, 0).value
    G = g(p)
    E = np.column_stack([frame.x, frame.y])
    return E.T @ G @ M @ E


def _bracket_route(g: MetricField, X: Field, frame: SplitFrame):
    p = frame.point
    G = g(p)
    bx = calc.lie_bracket(X, frame.x_field, p)
    by = calc.lie_bracket(X, frame.y_field, p)
    x, y = frame.x, frame.y
    s1 = 0.5 * (bx @ G @ x - by @ G @ y)
    s2 = -0.5 * (bx @ G @ y + by @ G @ x)
    iota = X(p) @ G @ calc.lie_bracket(frame.x_field, frame.y_field, p)
    return s1, s2, iota


def shear_coefficients(g: MetricField, X: Field, frame: SplitFrame) -> tuple[float, float]:
    Mh = _operator_on_h(g, X, frame)
    return 0.5 * (Mh[1, 1] - Mh[0, 0]), 0.5 * (Mh[0, 1] + Mh[1, 0])


def shear_coefficients_bracket(g: MetricField, X: Field, frame: SplitFrame) -> tuple[float, float]:
    s1, s2, _ = _bracket_route(g, X, frame)
    return s1, s2


def twist(g: MetricField, X: Field, frame: SplitFrame) -> float:
    """Signed twist ⟨∇_y X, x⟩ − ⟨∇_x X, y⟩ in the oriented frame."""
    Mh = _operator_on_h(g, X, frame)
    return float(Mh[0, 1] - Mh[1, 0])


def twist_bracket(g: MetricField, X: Field, frame: SplitFrame) -> float:
    return float(_bracket_route(g, X, frame)[2])


def twist_function(g: MetricField, X: Field, p, splitting) -> float:
    """|ι| = 2·sqrt(det of the skew part of π∘∇X on H), with no frame choice.

    ``splitting`` is the tuple of fields spanning V.
    """
    p = tuple(float(v) for v in p)
    s = split_jets(g, tuple(splitting), p, 0, 1)
    G = s.G.value
    PH = s.PH.value
    pivot = pick_pivot(s)
    cols = [PH[:, pivot]]
    for a in range(PH.shape[0]):
        if a == pivot:
            continue
        cand = PH[:, a]
        if abs(np.linalg.det(np.array([[c @ G @ d for d in cols + [cand]] for c in cols + [cand]]))) > 1e-10:
            cols.append(cand)
            break
    B = np.column_stack(cols)
    gram = B.T @ G @ B
    M = calc.nabla_jet(g, X, p, 0).value
    S = np.linalg.solve(gram, B.T @ G @ M @ B)
    adj = np.linalg.solve(gram, S.T @ gram)
    skew = 0.5 * (S - adj)
    return float(2.0 * np.sqrt(max(np.linalg.det(skew), 0.0)))


@dataclass
class PregeodesicResult:
    alpha: Optional[float]
    residual: float
    is_pregeodesic: bool
    is_geodesic: bool
    acceleration: np.ndarray


def pregeodesic_factor(g: MetricField, X: Field, p, tol: float = 1e-7) -> PregeodesicResult:
    """Least-squares α in ∇_X X ≈ αX, accepted when the residual is below tol·(1+|∇_X X|)."""
    acc = calc.covariant_derivative(g, X, X, p)
    v = X(p)
    alpha = float(acc @ v / (v @ v))
    residual = float(np.linalg.norm(acc - alpha * v))
    threshold = tol * (1.0 + float(np.linalg.norm(acc)))
    ok = residual < threshold
    return PregeodesicResult(alpha if ok else None, residual, ok, ok and abs(alpha) < threshold, acc)


def optical_report(g: MetricField, X: Field, frame: SplitFrame, tol: float = 1e-7) -> OpticalReport:
    Mh = _operator_on_h(g, X, frame)
    s1 = 0.5 * (Mh[1, 1] - Mh[0, 0])
    s2 = 0.5 * (Mh[0, 1] + Mh[1, 0])
    iota = float(Mh[0, 1] - Mh[1, 0])
    b1, b2, bi = _bracket_route(g, X, frame)
    shear = np.array([[-s1, s2], [s2, s1]])
    tw = np.array([[0.0, iota / 2], [-iota / 2, 0.0]])
    pg = pregeodesic_factor(g, X, frame.point, tol)
    return OpticalReport(
        sigma1=float(s1), sigma2=float(s2), iota=iota, shear_matrix=shear, twist_matrix=tw,
        twist_function=abs(iota), shear_invariant=float(s1 * s1 + s2 * s2), alpha=pg.alpha,
        route_discrepancy=float(max(abs(b1 - s1), abs(b2 - s2), abs(bi - iota))),
    )


def riemannian3_optics(gbar: MetricField, kbar: Field, p, orientation: int = 1, tol: float = 1e-7) -> OpticalReport:
    """Optics of a unit field on a Riemannian 3-manifold, plus Killing data."""
    if gbar.chart.dim != 3:
        raise ValueError("riemannian3_optics needs a 3-dimensional chart")
    p = tuple(float(v) for v in p)
    v = kbar(p)
    norm = float(v @ gbar(p) @ v)
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"field is not unit length (g(k,k) = {norm:.12g})")
    frame = build_frame(gbar, kbar, None, p, orientation)
    rep = optical_report(gbar, kbar, frame, tol)
    M = calc.nabla_jet(gbar, kbar, p, 0).value
    rep.divergence = float(np.trace(M))
    rep.killing_residual = float(np.max(np.abs(calc.lie_derivative_metric(gbar, kbar, p))))
    rep.geodesic_residual = float(np.linalg.norm(M @ v))
    return rep
