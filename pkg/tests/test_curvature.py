from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geokahler import calculus as calc
from geokahler import catalog, jets
from geokahler.cli import sample_points
from geokahler.curvature_kahler import (FORMULA_TO_RIEMANNIAN, CurvatureHypothesisError, curvature_inputs,
                                        curvature_report, hodge_top, pfaffian, ricci_form_closed_residual,
                                        ricci_form_case, ricci_form_general, ricci_form_oracle,
                                        scalar_geodesic_case,
                                        scalar_oracle, star_vol_residual, wedge22)
from geokahler.fields import Chart, Field, MetricField, ScalarField

# S²(R1) × S²(R2) in stereographic coordinates with the standard complex structure
R1, R2 = 1.0, 2.0
S2S2 = Chart("s2s2", ("x", "y", "u", "v"))
g_ss = MetricField.from_expr(S2S2, {
    ("x", "x"): "4*A^2/(1+x^2+y^2)^2", ("y", "y"): "4*A^2/(1+x^2+y^2)^2",
    ("u", "u"): "4*B^2/(1+u^2+v^2)^2", ("v", "v"): "4*B^2/(1+u^2+v^2)^2"}, "riemannian", {"A": R1, "B": R2})
J0 = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], float)
J_ss = Field(S2S2, (4, 4), lambda p, n: jets.algebra(4, n).constant(J0), "J")
product = SimpleNamespace(gK=g_ss, J=J_ss)

pts4 = st.tuples(*[st.floats(-1, 1)] * 4)


def _omega(G):
    return J0.T @ G  # ω(a, b) = g(Ja, b)


@given(pts4)
@settings(max_examples=20)
def test_ricci_form_is_omega_over_radius_squared(p):
    rho = ricci_form_oracle(product, p)
    w = _omega(g_ss(p))
    assert np.allclose(rho[:2, :2], w[:2, :2] / R1**2, atol=1e-10)
    assert np.allclose(rho[2:, 2:], w[2:, 2:] / R2**2, atol=1e-10)
    assert np.allclose(rho[:2, 2:], 0.0, atol=1e-10)


@given(pts4)
@settings(max_examples=20)
def test_star_omega_wedge_rho_is_half_scalar(p):
    s = calc.curvature(g_ss, p)["scalar"]
    assert s == pytest.approx(2 / R1**2 + 2 / R2**2, rel=1e-10)
    w = _omega(g_ss(p))
    val = hodge_top(wedge22(w, ricci_form_oracle(product, p)), w)
    assert FORMULA_TO_RIEMANNIAN * val == pytest.approx(s, rel=1e-10)


@given(pts4)
@settings(max_examples=10)
def test_ricci_form_from_volume_density(p):
    mu = ScalarField(S2S2, lambda q, n: jets.sqrt(jets.det(g_ss.jet(q, n))))
    one = ScalarField(S2S2, lambda q, n: jets.algebra(4, n).constant(1.0))
    assert np.allclose(ricci_form_general(mu, one, J_ss, p), ricci_form_oracle(product, p), atol=1e-9)


def test_ricci_form_general_rejects_nonpositive_ratio():
    neg = ScalarField(S2S2, lambda q, n: jets.algebra(4, n).constant(-1.0))
    one = ScalarField(S2S2, lambda q, n: jets.algebra(4, n).constant(1.0))
    with pytest.raises(ValueError):
        ricci_form_general(neg, one, J_ss, (0, 0, 0, 0))


@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6), st.lists(st.floats(-3, 3), min_size=6, max_size=6))
def test_wedge_and_pfaffian(a6, b6):
    def form(c):
        w = np.zeros((4, 4))
        w[np.triu_indices(4, 1)] = c
        return w - w.T

    a, b = form(a6), form(b6)
    assert wedge22(a, b) == pytest.approx(wedge22(b, a), abs=1e-9)
    assert wedge22(a, a) == pytest.approx(2 * pfaffian(a), abs=1e-9)
    assert pfaffian(a) ** 2 == pytest.approx(np.linalg.det(a), rel=1e-8, abs=1e-8)


@pytest.fixture(scope="module")
def skr():
    return catalog.build("skr")


@pytest.fixture(scope="module")
def skr_geo():
    return catalog.build("skr_geodesic")


def test_killing_case_matches_oracle(skr):
    cand = skr.candidate()
    for p in sample_points(skr, 6):
        r = curvature_report(cand, p, "killing")
        assert r.discrepancy < 1e-4
        assert r.ricci_discrepancy < 1e-6
        assert r.j_invariance < 1e-8
        assert r.extras["star_vol"] < 1e-9
        assert r.scalar_riemannian == pytest.approx(r.scalar_oracle, rel=1e-6)


def test_geodesic_case_matches_oracle(skr_geo):
    cand = skr_geo.candidate()
    for p in sample_points(skr_geo, 6):
        r = curvature_report(cand, p, "geodesic")
        assert r.discrepancy < 1e-4
        assert r.ricci_discrepancy < 1e-6


def test_plus_sign_disagrees_when_a_varies(skr_geo):
    cand = skr_geo.candidate()
    p = tuple(sample_points(skr_geo, 1)[0])
    inp = curvature_inputs(cand, p)
    good = scalar_geodesic_case(inp, p)
    plus = scalar_geodesic_case(inp, p, plus_sign=True)
    assert abs(FORMULA_TO_RIEMANNIAN * good - scalar_oracle(cand, p)) < 1e-6
    assert abs(FORMULA_TO_RIEMANNIAN * plus - scalar_oracle(cand, p)) > 1e-3


def test_hypothesis_refusals(skr, skr_geo):
    p = tuple(sample_points(skr, 1)[0])
    with pytest.raises(CurvatureHypothesisError) as exc:
        curvature_report(skr.candidate(), p, "geodesic")
    assert exc.value.residual.startswith("k_")
    spec = catalog.build("direct_product_hopf")
    with pytest.raises(CurvatureHypothesisError):
        curvature_report(spec.candidate(), tuple(sample_points(spec, 1)[0]), "geodesic")
    with pytest.raises(ValueError, match="unknown curvature case"):
        curvature_report(skr.candidate(), p, "other")


def test_ricci_form_closed(skr):
    cand = skr.candidate()
    p = tuple(sample_points(skr, 1)[0])
    inp = curvature_inputs(cand, p)
    r = curvature_report(cand, p, "killing")
    assert r.ricci_form.shape == (4, 4)
    ricci_form_case(inp, p, "killing")
    assert ricci_form_closed_residual(inp.mu, inp.nu, cand.J, p) < 1e-5


def test_direct_product_is_flat_with_unit_volume():
    spec = catalog.build("direct_product_hopf")
    cand = spec.candidate()
    for p in sample_points(spec, 5):
        assert abs(scalar_oracle(cand, p)) < 1e-9
        assert star_vol_residual(cand, tuple(p)) < 1e-9
