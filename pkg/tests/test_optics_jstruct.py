import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geokahler import catalog, jets
from geokahler.fields import Chart, Field, MetricField, ScalarField, VectorField
from geokahler.jstruct import (AcsField, build_J, check_admissible, check_split_adjoint, nijenhuis,
                               nijenhuis_max, nijenhuis_tensor)
from geokahler.kahler import conformal_invariance
from geokahler.optics import (build_frame, frame_error, optical_report, pregeodesic_factor, riemannian3_optics,
                              shear_coefficients, twist, twist_bracket)

R3 = Chart("R3", ("x", "y", "z"))
flat3 = MetricField.from_expr(R3, {("x", "x"): "1", ("y", "y"): "1", ("z", "z"): "1"}, "riemannian")
MINK = Chart("mink", ("t", "x", "y", "z"))
mink = MetricField.from_expr(MINK, {("t", "t"): "-1", ("x", "x"): "1", ("y", "y"): "1", ("z", "z"): "1"},
                             "lorentzian")
O = (0.0, 0.0, 0.0)


@pytest.mark.parametrize("eps", [0.1, 0.5, 2.0])
def test_rotation_twists_without_shear(eps):
    X = VectorField.from_expr(R3, ["-e*y", "e*x", "1"], {"e": eps})
    rep = optical_report(flat3, X, build_frame(flat3, X, None, O))
    assert abs(rep.iota) == pytest.approx(2 * eps, rel=1e-12)
    assert rep.shear_invariant < 1e-24
    assert rep.route_discrepancy < 1e-12


@pytest.mark.parametrize("eps", [0.1, 0.5, 2.0])
def test_strain_shears_without_twist(eps):
    X = VectorField.from_expr(R3, ["e*x", "-e*y", "1"], {"e": eps})
    fr = build_frame(flat3, X, None, O)
    s1, s2 = shear_coefficients(flat3, X, fr)
    assert math.hypot(s1, s2) == pytest.approx(eps, rel=1e-12)
    assert abs(twist(flat3, X, fr)) < 1e-14
    assert abs(twist_bracket(flat3, X, fr)) < 1e-14


def test_twist_flips_with_orientation():
    X = VectorField.from_expr(R3, ["-y", "x", "1"])
    a = twist(flat3, X, build_frame(flat3, X, None, O, 1))
    b = twist(flat3, X, build_frame(flat3, X, None, O, -1))
    assert a == pytest.approx(-b)


def test_frame_is_orthonormal_on_h():
    spec = catalog.build("kerr")
    p = (0.1, 3.0, 2.5, 1.0)
    fr = build_frame(spec.g, spec.k, spec.t, p)
    assert frame_error(spec.g, fr) < 1e-12
    G = spec.g(p)
    for v in (fr.x, fr.y):
        assert abs(v @ G @ spec.k(p)) < 1e-12 and abs(v @ G @ spec.t(p)) < 1e-12


@pytest.mark.parametrize("radius", [1.0, 2.0, 0.5])
def test_hopf_field_killing_geodesic_shearfree(radius):
    chart, gbar, kbar = catalog.round_s3(radius)
    rep = riemannian3_optics(gbar, kbar, (0.4, 1.1, 2.0))
    assert rep.killing_residual < 1e-12
    assert rep.geodesic_residual < 1e-12
    assert rep.shear_invariant < 1e-24
    # unit Hopf field on the sphere of radius R twists at rate 2/R
    assert abs(rep.iota) == pytest.approx(2 / radius, rel=1e-12)
    assert rep.divergence == pytest.approx(0.0, abs=1e-12)


def test_pregeodesic_factor():
    X = VectorField.from_expr(MINK, ["exp(t)", "exp(t)", "0", "0"])
    r = pregeodesic_factor(mink, X, (0.3, 0, 0, 0))
    assert r.is_pregeodesic and not r.is_geodesic
    assert r.alpha == pytest.approx(math.exp(0.3))
    Y = VectorField.from_expr(MINK, ["1", "x", "0", "0"])
    assert not pregeodesic_factor(mink, Y, (0.0, 0.5, 0, 0)).is_pregeodesic


def test_conformal_twist_invariance():
    spec = catalog.build("plane_wave")
    beta = ScalarField.from_expr(spec.chart, "1.2 + 0.3*sin(x)")
    r = conformal_invariance(spec.g, spec.k, beta, (spec.k, spec.t), (0.1, 0.2, 0.3, 0.4), spec.orientation)
    assert r["iota_residual"] < 1e-12
    assert r["shear_residual"] < 1e-12


# --- almost complex structures ---------------------------------------------

def _matrix_field(chart, fn):
    return Field(chart, (4, 4), fn, "J")


J0 = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], float)


def _pullback_J(p, n):
    # J = DΦ⁻¹ J0 DΦ for Φ(x) = (x0 + x1², x1, x2 + sin x3, x3 + x0³)
    x = jets.algebra(4, n + 1).variables(p)
    phi = jets.stack([x[0] + x[1] * x[1], x[1], x[2] + jets.sin(x[3]), x[3] + x[0] * x[0] * x[0]])
    D = phi.grad()
    return jets.matmul(jets.inv(D), jets.matmul(jets.as_jet(J0, D), D))


def _rotated_J(p, n):
    x = jets.algebra(4, n).variables(p)
    c, s = jets.cos(x[0]), jets.sin(x[0])
    z, o = x[0] * 0.0, x[0] * 0.0 + 1.0
    R = jets.stack([jets.stack([c, z, -s, z]), jets.stack([z, o, z, z]),
                    jets.stack([s, z, c, z]), jets.stack([z, z, z, o])])
    Rinv = jets.stack([jets.stack([c, z, s, z]), jets.stack([z, o, z, z]),
                       jets.stack([-s, z, c, z]), jets.stack([z, z, z, o])])
    return jets.matmul(R, jets.matmul(jets.as_jet(J0, R), Rinv))


pts4 = st.tuples(*[st.floats(-1, 1)] * 4)


@given(pts4)
@settings(max_examples=25)
def test_pullback_of_flat_structure_is_integrable(p):
    J = _matrix_field(MINK, _pullback_J)
    assert np.allclose(J(p) @ J(p), -np.eye(4))
    assert nijenhuis_max(J, p) < 1e-9


@given(pts4)
@settings(max_examples=15)
def test_nijenhuis_tensor_agrees_with_bracket_route(p):
    J = _matrix_field(MINK, _rotated_J)
    N = nijenhuis_tensor(J, p)
    basis = [VectorField(MINK, lambda q, n, i=i: jets.algebra(4, n).constant(np.eye(4)[i])) for i in range(4)]
    for i in range(4):
        for j in range(4):
            assert np.allclose(N[:, i, j], nijenhuis(J, basis[i], basis[j], p), atol=1e-12)
    assert np.max(np.abs(N)) > 1e-2


@pytest.mark.parametrize("entry", ["plane_wave", "de_sitter", "skr", "kerr", "nut", "solvable_lie_group"])
def test_acs_is_complex_structure_and_orthogonal(entry):
    spec = catalog.build(entry)
    p = tuple(np.mean(np.array(list(spec.box.values())), axis=1))
    J = build_J(spec.g, spec.k, spec.t, p, spec.orientation)
    G = spec.g(p)
    fr = build_frame(spec.g, spec.k, spec.t, p, spec.orientation)
    H = np.stack([fr.x, fr.y], axis=1)
    assert np.allclose(J @ J, -np.eye(4), atol=1e-12)
    # J preserves H and is a g-isometry there
    assert np.allclose(J @ fr.x, fr.y, atol=1e-12)
    assert np.allclose((J @ H).T @ G @ (J @ H), H.T @ G @ H, atol=1e-10)
    assert np.allclose(J @ spec.k(p), spec.t(p), atol=1e-12)
    assert np.allclose(J @ spec.t(p), -spec.k(p), atol=1e-12)


def test_opposite_structure():
    spec = catalog.build("plane_wave")
    J = AcsField(spec.g, spec.k, spec.t, spec.orientation)
    p = (0.1, 0.2, 0.3, 0.4)
    fr = J.frame(p)
    Jo = J.opposite()
    assert np.allclose(J(p) @ fr.x, fr.y)
    assert np.allclose(Jo(p) @ fr.x, -fr.y)
    assert np.allclose(Jo(p) @ spec.k(p), spec.t(p))


def test_admissibility_on_plane_wave_and_failure_modes():
    spec = catalog.build("plane_wave")
    p = (0.1, 0.2, 0.3, 0.4)
    rep = check_admissible(spec.g, spec.k, spec.t, spec.tau, p, spec.orientation, spec.ell)
    assert rep.admissible and rep.failing() == []
    rep = check_admissible(spec.g, spec.k, spec.k, spec.tau, p, spec.orientation, spec.ell)
    assert not rep.admissible and "nnsing" in rep.failing()
    kerr = catalog.build("kerr")
    q = (0.0, 3.0, 2.4, 1.0)
    bad = check_admissible(kerr.g, kerr.k, kerr.t, None, q, kerr.orientation)
    assert not bad.admissible


def test_split_adjoint_iff_lengths_cancel():
    # null pair: g(k,k) + g(t,t) = 0, so J is self-adjoint on V
    spec = catalog.build("kerr")
    p = (0.0, 3.0, 2.4, 1.0)
    r = check_split_adjoint(spec.g, spec.k, spec.t, p, spec.orientation)
    assert r["is_split_adjoint"] and r["length_sign_test"]
    t2 = VectorField(spec.chart, lambda q, n: spec.t.jet(q, n) + spec.k.jet(q, n) * 0.5)
    r = check_split_adjoint(spec.g, spec.k, t2, p, spec.orientation)
    G = spec.g(p)
    K, T = spec.k(p), t2(p)
    assert abs(K @ G @ K + T @ G @ T) > 1e-3
    assert not r["is_split_adjoint"]
