"""Generic tensor calculus on jet-evaluable fields.

Functions ending in ``_jet`` return :class:`~geokahler.jets.Jet` objects of a
requested order and pull whatever higher order they need from their inputs.
The plain-named functions return numpy values at a point.

Index conventions: vectors ``X[i]``, covectors ``a[i]``, endomorphisms
``A[i, j]`` acting as ``(A v)^i = A[i, j] v^j``, and the trailing axis of
``Jet.grad()`` is the differentiation index.  The Riemann tensor is stored as
``R[l, k, i, j]`` with ``R(d_i, d_j) d_k = R[l, k, i, j] d_l``.
"""

from __future__ import annotations

import numpy as np

from . import jets
from .fields import CovectorField, Field, MetricField, ScalarField, VectorField
from .jets import Jet, einsum


class SingularMetricError(ValueError):
    pass


def _inverse(G: Jet) -> Jet:
    v = G.value
    if not np.all(np.isfinite(v)):
        raise SingularMetricError("metric has non-finite components")
    cond = np.linalg.cond(v)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularMetricError("metric is singular at the evaluation point")
    return jets.inv(G)


def metric_inverse_jet(g: MetricField, p, order: int) -> Jet:
    return _inverse(g.jet(p, order))


def christoffel_jet(g: MetricField, p, order: int) -> Jet:
    """Γ[k, i, j] = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)."""
    G = g.jet(p, order + 1)
    Ginv = _inverse(G.truncate(order))
    D = G.grad()  # D[a, b, c] = ∂_c g_ab
    lowered = D.transpose(2, 0, 1) + D.transpose(0, 2, 1) - D
    # lowered[i, j, l] = ∂_i g_jl + ∂_j g_il − ∂_l g_ij
    return 0.5 * einsum("kl,ijl->kij", Ginv, lowered)


def christoffel(g: MetricField, p) -> np.ndarray:
    return christoffel_jet(g, p, 0).value


def nabla_jet(g: MetricField, X: Field, p, order: int) -> Jet:
    """M[k, i] = (∇_{∂_i} X)^k."""
    Xj = X.jet(p, order + 1)
    Gam = christoffel_jet(g, p, order)
    return Xj.grad() + einsum("kij,j->ki", Gam, Xj.truncate(order))


def covariant_derivative_jet(g: MetricField, X: Field, Y: Field, p, order: int) -> Jet:
    """(∇_X Y)^k = X^i ∂_i Y^k + Γ^k_ij X^i Y^j."""
    return nabla_jet(g, Y, p, order) @ X.jet(p, order)


def covariant_derivative(g, X, Y, p) -> np.ndarray:
    return covariant_derivative_jet(g, X, Y, p, 0).value


def lie_bracket_jet(X: Field, Y: Field, p, order: int) -> Jet:
    if X.chart is not Y.chart:
        raise ValueError("vector fields live on different charts")
    Xj = X.jet(p, order + 1)
    Yj = Y.jet(p, order + 1)
    return Yj.grad() @ Xj.truncate(order) - Xj.grad() @ Yj.truncate(order)


def lie_bracket(X: Field, Y: Field, p) -> np.ndarray:
    return lie_bracket_jet(X, Y, p, 0).value


def gradient_jet(g: MetricField, f: Field, p, order: int) -> Jet:
    df = f.jet(p, order + 1).grad()
    return metric_inverse_jet(g, p, order) @ df


def gradient(g: MetricField, f: Field, p) -> np.ndarray:
    return gradient_jet(g, f, p, 0).value


def flat(g: MetricField, X: Field, p) -> np.ndarray:
    return g(p) @ X(p)


def sharp(g: MetricField, alpha: Field, p) -> np.ndarray:
    return np.linalg.solve(g(p), alpha(p))


def exterior_derivative_jet(alpha: Field, p, order: int) -> Jet:
    """(dα)[i, j] = ∂_i α_j − ∂_j α_i for a 1-form."""
    D = alpha.jet(p, order + 1).grad()  # D[j, i] = ∂_i α_j
    return D.T - D


def exterior_derivative(alpha: Field, p) -> np.ndarray:
    return exterior_derivative_jet(alpha, p, 0).value


def exterior_derivative2_jet(beta: Field, p, order: int) -> Jet:
    """(dβ)[i, j, k] = ∂_i β_jk + ∂_j β_ki + ∂_k β_ij for a 2-form."""
    D = beta.jet(p, order + 1).grad()  # D[a, b, c] = ∂_c β_ab
    return D.transpose(2, 0, 1) + D.transpose(1, 2, 0) + D


def riemann_jet(g: MetricField, p, order: int) -> Jet:
    Gam = christoffel_jet(g, p, order + 1)
    dG = Gam.grad()  # dG[l, j, k, i] = ∂_i Γ^l_jk
    G0 = Gam.truncate(order)
    quad = einsum("lim,mjk->lkij", G0, G0)
    # R^l_kij = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik
    lin = dG.transpose(0, 2, 3, 1)  # lin[l, k, i, j] = ∂_i Γ^l_jk
    return lin - lin.swapaxes(2, 3) + quad - quad.swapaxes(2, 3)


def curvature(g: MetricField, p) -> dict:
    """Riemann, Ricci and scalar curvature of ``g`` at ``p``."""
    R = riemann_jet(g, p, 0).value
    ric = np.einsum("ikij->kj", R)
    ginv = np.linalg.inv(g(p))
    return {"riemann": R, "ricci": ric, "scalar": float(np.einsum("kj,kj->", ginv, ric))}


def lie_derivative_metric_jet(g: MetricField, X: Field, p, order: int) -> Jet:
    """(L_X g)_ij = X^l ∂_l g_ij + g_lj ∂_i X^l + g_il ∂_j X^l."""
    G = g.jet(p, order + 1)
    Xj = X.jet(p, order + 1)
    dX = Xj.grad()  # dX[l, i] = ∂_i X^l
    G0 = G.truncate(order)
    first = einsum("ijl,l->ij", G.grad(), Xj.truncate(order))
    second = einsum("lj,li->ij", G0, dX)
    return first + second + second.T


def lie_derivative_metric(g, X, p) -> np.ndarray:
    return lie_derivative_metric_jet(g, X, p, 0).value


# ---------------------------------------------------------------------------
# derived fields


def flat_field(g: MetricField, X: Field) -> CovectorField:
    return CovectorField(g.chart, lambda p, n: g.jet(p, n) @ X.jet(p, n), f"{X.name}_flat")


def sharp_field(g: MetricField, alpha: Field) -> VectorField:
    return VectorField(g.chart, lambda p, n: metric_inverse_jet(g, p, n) @ alpha.jet(p, n))


def gradient_field(g: MetricField, f: Field) -> VectorField:
    return VectorField(g.chart, lambda p, n: gradient_jet(g, f, p, n), f"grad_{f.name}")


def differential_field(f: Field) -> CovectorField:
    return CovectorField(f.chart, lambda p, n: f.jet(p, n + 1).grad(), f"d{f.name}")


def bracket_field(X: Field, Y: Field) -> VectorField:
    return VectorField(X.chart, lambda p, n: lie_bracket_jet(X, Y, p, n))


def exterior_derivative_field(alpha: Field) -> Field:
    return Field(alpha.chart, (alpha.chart.dim,) * 2, lambda p, n: exterior_derivative_jet(alpha, p, n), "d" + alpha.name)


def scaled_field(f: Field, X: Field, cls=VectorField) -> Field:
    return cls(X.chart, lambda p, n: f.jet(p, n) * X.jet(p, n))


def scalar_map(fn, *fields: Field, name="") -> ScalarField:
    """Scalar field computed pointwise from the jets of other fields."""
    chart = fields[0].chart
    return ScalarField(chart, lambda p, n: fn(*(F.jet(p, n) for F in fields)), name)


def inner_field(g: MetricField, X: Field, Y: Field) -> ScalarField:
    return ScalarField(g.chart, lambda p, n: X.jet(p, n) @ (g.jet(p, n) @ Y.jet(p, n)))
