import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geokahler import jets
from geokahler.jets import JetOrderError

coord = st.floats(-1.5, 1.5, allow_nan=False)
point3 = st.tuples(coord, coord, coord)


def _vars(p, order=3):
    return jets.algebra(len(p), order).variables(p)


def _fd_grad(f, p, h=1e-5):
    p = np.asarray(p, float)
    out = []
    for i in range(len(p)):
        e = np.zeros_like(p)
        e[i] = h
        out.append((f(p + e) - f(p - e)) / (2 * h))
    return np.array(out)


def _fd_hess(f, p, h=1e-4):
    p = np.asarray(p, float)
    n = len(p)
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            H[i, j] = (f(p + ei + ej) - f(p + ei - ej) - f(p - ei + ej) + f(p - ei - ej)) / (4 * h * h)
    return H


def _sample(x):
    return jets.exp(jets.sin(x[0]) * x[1]) + jets.sqrt(x[2] * x[2] + 1.0) * jets.cos(x[0] - x[2])


def _sample_np(q):
    return math.exp(math.sin(q[0]) * q[1]) + math.sqrt(q[2] ** 2 + 1) * math.cos(q[0] - q[2])


# closed form first partials of _sample
def _sample_grad(q):
    x, y, z = q
    e = math.exp(math.sin(x) * y)
    s = math.sqrt(z * z + 1)
    return np.array([
        e * math.cos(x) * y - s * math.sin(x - z),
        e * math.sin(x),
        z / s * math.cos(x - z) + s * math.sin(x - z),
    ])


@given(point3)
def test_first_partials_match_closed_form(p):
    J = _sample(_vars(p, 1))
    assert np.allclose(J.partials(1), _sample_grad(p), rtol=1e-12, atol=1e-12)


@given(point3)
@settings(max_examples=30)
def test_second_partials_match_fd(p):
    J = _sample(_vars(p, 2))
    H = _fd_hess(_sample_np, p)
    assert np.allclose(J.partials(2), H, rtol=1e-4, atol=1e-5)


@given(point3)
@settings(max_examples=30)
def test_third_partials_match_fd_of_second(p):
    J = _sample(_vars(p, 3))
    third = J.partials(3)
    fd = _fd_grad(lambda q: _sample(_vars(q, 2)).partials(2), p)
    assert np.allclose(np.moveaxis(fd, 0, -1), third, rtol=1e-4, atol=1e-5)
    assert np.allclose(third, np.transpose(third, (1, 0, 2)))
    assert np.allclose(third, np.transpose(third, (2, 1, 0)))


@given(point3)
def test_product_rule(p):
    x = _vars(p, 2)
    a, b = jets.sin(x[0] * x[1]), jets.exp(x[2])
    ab = (a * b).partials(1)
    assert np.allclose(ab, a.value * b.partials(1) + b.value * a.partials(1))


@given(st.floats(0.2, 3.0), st.floats(-2.5, 2.5))
def test_power_and_log_consistent(x0, e):
    x = jets.algebra(1, 3).variables([x0])[0]
    lhs = jets.power(x, e)
    rhs = jets.exp(jets.log(x) * e)
    assert np.allclose(lhs.c, rhs.c, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("fn,np_fn", [
    (jets.sin, np.sin), (jets.cos, np.cos), (jets.tan, np.tan), (jets.sinh, np.sinh),
    (jets.cosh, np.cosh), (jets.exp, np.exp), (jets.log, np.log), (jets.sqrt, np.sqrt),
    (jets.reciprocal, lambda v: 1 / v),
])
def test_univariate_derivatives_match_fd(fn, np_fn):
    x0 = 0.7
    J = fn(jets.algebra(1, 3).variables([x0])[0])
    h = 1e-3
    d1 = (np_fn(x0 + h) - np_fn(x0 - h)) / (2 * h)
    d2 = (np_fn(x0 + h) - 2 * np_fn(x0) + np_fn(x0 - h)) / h**2
    d3 = (np_fn(x0 + 2 * h) - 2 * np_fn(x0 + h) + 2 * np_fn(x0 - h) - np_fn(x0 - 2 * h)) / (2 * h**3)
    assert J.value == pytest.approx(np_fn(x0))
    assert J.partials(1)[0] == pytest.approx(d1, rel=1e-5)
    assert J.partials(2)[0, 0] == pytest.approx(d2, rel=1e-5)
    assert J.partials(3)[0, 0, 0] == pytest.approx(d3, rel=1e-4)


def _mat(q, order=0):
    x = _vars(q, order)
    return jets.stack([
        jets.stack([x[0] * 0 + 3.0, jets.sin(x[1]), x[2]]),
        jets.stack([jets.sin(x[1]), x[0] * 0 + 2.0 + x[0] * x[0], x[0] * 0]),
        jets.stack([x[2], x[0] * 0, jets.exp(x[1])]),
    ])


@given(point3)
@settings(max_examples=40)
def test_inverse_and_det(p):
    A = _mat(p, 2)
    Ainv = jets.inv(A)
    eye = jets.matmul(A, Ainv)
    assert np.allclose(eye.c[..., 0], np.eye(3))
    # higher coefficients carry the inverse twice, so rounding grows like cond²
    assert np.allclose(eye.c[..., 1:], 0.0, atol=1e-14 * np.linalg.cond(A.value) ** 2)
    d = jets.det(A)
    assert d.value == pytest.approx(np.linalg.det(A.value), rel=1e-12)
    fd = _fd_grad(lambda q: np.linalg.det(_mat(q).value), p)
    assert np.allclose(d.partials(1), fd, rtol=1e-6, atol=1e-6)


def test_grad_appends_axis_and_lowers_order():
    x = _vars((0.1, 0.2, 0.3), 3)
    v = jets.stack([x[0] * x[1], x[2]])
    g = v.grad()
    assert g.shape == (2, 3)
    assert g.order == 2
    assert np.allclose(g.value, [[0.2, 0.1, 0.0], [0.0, 0.0, 1.0]])


def test_order_errors():
    x = _vars((0.1, 0.2, 0.3), 1)
    with pytest.raises(JetOrderError):
        x.partials(2)
    with pytest.raises(JetOrderError):
        x.truncate(2)
    with pytest.raises(JetOrderError):
        x.truncate(0).deriv(0)


def test_einsum_matches_numpy_on_values():
    x = _vars((0.3, -0.2, 0.5), 1)
    A = jets.stack([x, x * 2.0, jets.sin(x)])
    out = jets.einsum("ij,jk->ik", A, A)
    assert np.allclose(out.value, A.value @ A.value)
    assert np.allclose(jets.matmul(A, A).c, out.c)
