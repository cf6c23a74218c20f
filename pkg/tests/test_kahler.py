import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geokahler import catalog, jets
from geokahler.cli import sample_points
from geokahler.fields import ScalarField, VectorField
from geokahler.kahler import (KahlerCandidate, ParamFn, PetrovCandidate, RegionError, check_sample, iterate,
                              repeated_admissibility, shear_transfer, transfer_geodesic, transfer_killing, variation_biconformal,
                              variation_vertical, verify_kahler)


@pytest.fixture(scope="module")
def plane():
    return catalog.build("plane_wave")


@pytest.fixture(scope="module")
def skr():
    return catalog.build("skr")


@given(st.floats(-2, 2))
def test_paramfn_values_and_derivatives(x):
    for f, val, der in [
        (ParamFn.affine(0.5), x - 0.5, 1.0),
        (ParamFn.exponential(), math.exp(x), math.exp(x)),
        (ParamFn.custom("tau^3 + sin(tau)"), x**3 + math.sin(x), 3 * x**2 + math.cos(x)),
    ]:
        assert f(x) == pytest.approx(val, rel=1e-12, abs=1e-12)
        assert f.prime(x) == pytest.approx(der, rel=1e-12, abs=1e-12)
        J = f(jets.algebra(1, 2).variables([x])[0])
        assert J.partials(1)[0] == pytest.approx(der, rel=1e-12, abs=1e-12)


def test_paramfn_parse_and_repr():
    assert repr(ParamFn.parse("affine:2")) == "affine:2"
    assert repr(ParamFn.parse("affine")) == "affine:0"
    assert repr(ParamFn.parse("exp")) == "exp"
    assert ParamFn.parse("expr:a*tau", {"a": 3.0})(2.0) == 6.0
    with pytest.raises(ValueError):
        ParamFn.parse("cubic")


def _fd_kahler_metric(cand, p, h=1e-5):
    # ω = dθ with θ = f(τ) k♭ by central differences, g_K = ω J
    def theta(q):
        q = tuple(q)
        return cand.f(float(cand.tau(q))) * (cand.g(q) @ cand.k(q))

    p = np.asarray(p, float)
    D = np.zeros((4, 4))  # D[j, i] = ∂_i θ_j
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        D[:, i] = (theta(p + e) - theta(p - e)) / (2 * h)
    omega = D.T - D
    return omega @ cand.J(tuple(p))


@pytest.mark.parametrize("entry", ["plane_wave", "de_sitter", "skr", "pp_truncated", "solvable_lie_group"])
def test_gk_matches_finite_difference_oracle(entry):
    spec = catalog.build(entry)
    cand = spec.candidate()
    for p in sample_points(spec, 3):
        GK = cand.gK(tuple(p))
        assert np.allclose(GK, _fd_kahler_metric(cand, p), rtol=1e-6, atol=1e-7)


@pytest.mark.parametrize("entry", ["plane_wave", "de_sitter", "skr", "pp_truncated", "direct_product_hopf"])
def test_basic_identities(entry):
    spec = catalog.build(entry)
    cand = spec.candidate()
    for p in sample_points(spec, 5):
        r = cand.basic_identities(p)
        assert max(r.values()) < 1e-9
        assert np.allclose(cand.omega(tuple(p)), cand.omega_decomposed(tuple(p)), atol=1e-10)


@pytest.mark.parametrize("entry", ["plane_wave", "de_sitter", "skr", "direct_product_hopf"])
def test_region_specializations_agree(entry):
    spec = catalog.build(entry)
    cand = spec.candidate()
    for p in sample_points(spec, 8):
        r = cand.region(p)
        assert all(v["agrees"] for v in r.specialized.values())
        alt = cand.alt_formula(tuple(p))
        if alt is not None:
            kk = spec.k(tuple(p)) @ cand.gK(tuple(p)) @ spec.k(tuple(p))
            assert alt == pytest.approx(kk, rel=1e-8, abs=1e-10)


def test_region_sign_rule_controls_positivity(plane):
    cand = plane.candidate()
    for p in sample_points(plane, 20):
        s = check_sample(cand, p)
        assert s.in_region == (s.min_eig > 0)


def test_opposite_orientation_leaves_region(plane):
    cand = KahlerCandidate(plane.g, plane.k, plane.t, plane.tau, plane.f, plane.ell, -plane.orientation)
    assert not any(check_sample(cand, p, False).in_region for p in sample_points(plane, 10))


def test_full_verification_plane_wave(plane):
    v = verify_kahler(plane.candidate(), sample_points(plane, 20))
    assert v.in_region_count == 20
    assert v.passes()
    assert v.max_nabla_J < 1e-5


def test_petrov_region_requires_timelike_pair():
    nut = catalog.build("nut")
    cand = nut.candidate()
    p = tuple(sample_points(nut, 1)[0])
    assert cand.region(p).in_region
    neg = PetrovCandidate(nut.g, nut.k, _neg(nut.t), nut.u, nut.f)
    with pytest.raises(RegionError):
        neg.region(p)


def _neg(X):
    return VectorField(X.chart, lambda q, n: X.jet(q, n) * -1.0)


def test_transfer_killing_on_skr(skr):
    cand = skr.candidate()
    for p in sample_points(skr, 5):
        r = transfer_killing(cand, p)
        assert not r.skipped and r.worst < 1e-9


def test_transfer_geodesic_skips_on_hypothesis_failure(skr):
    r = transfer_geodesic(skr.candidate(), tuple(sample_points(skr, 1)[0]))
    assert r.skipped and "hypotheses fail" in r.notice


def test_transfer_geodesic_direct_product():
    spec = catalog.build("direct_product_hopf")
    cand = spec.candidate(ParamFn.affine(-2.0))
    for p in sample_points(spec, 5):
        r = transfer_geodesic(cand, p)
        assert not r.skipped and r.worst < 1e-9


def test_shear_transfer_on_lie_group():
    spec = catalog.build("solvable_lie_group")
    cand = spec.candidate()
    for p in sample_points(spec, 5):
        assert shear_transfer(cand, p).worst < 1e-10


def test_shear_transfer_outside_region(plane):
    cand = KahlerCandidate(plane.g, plane.k, plane.t, plane.tau, plane.f, plane.ell, -plane.orientation)
    with pytest.raises(RegionError):
        shear_transfer(cand, (0.1, 0.2, 0.3, 0.4))


@pytest.mark.parametrize("entry", ["plane_wave", "de_sitter", "skr", "pp_truncated"])
def test_biconformal_variation(entry):
    spec = catalog.build(entry)
    cand = spec.candidate()
    beta = ScalarField.from_expr(spec.chart, f"1.5 + 0.25*sin({spec.chart.coords[1]})")
    for p in sample_points(spec, 4):
        r = variation_biconformal(cand, beta, p)
        assert r["g_K"] < 1e-8
        assert r["iota_tilde"] == pytest.approx(r["iota"] / float(beta(tuple(p))) ** 2, rel=1e-10)


@pytest.mark.parametrize("entry,eps", [("plane_wave", 0.1), ("de_sitter", 0.1), ("skr", -0.1)])
def test_vertical_variation(entry, eps):
    spec = catalog.build(entry)
    cand = spec.candidate()
    for p in sample_points(spec, 4):
        r = variation_vertical(cand, eps, p)
        assert not r["skipped"]
        assert max(r["g_K"], r["omega"], r["iota"], r.get("G", 0.0)) < 1e-8
        assert ("G" in r) == (abs(float(cand.ell(tuple(p))) - 1) < 1e-7)


def test_vertical_variation_skips_on_signature_flip(skr):
    r = variation_vertical(skr.candidate(), 0.1, tuple(sample_points(skr, 1)[0]))
    assert r["skipped"] and "skipped" in r["notice"]


def test_iterate_keeps_fields(plane):
    cand = plane.candidate()
    nxt = iterate(cand)
    assert nxt.g is cand.gK and nxt.k is cand.k
    rep, notice = repeated_admissibility(cand, (0.1, 0.2, 0.3, 0.4))
    assert (rep is None) == bool(notice)
