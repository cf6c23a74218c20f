"""Truncated multivariate Taylor arithmetic.

A :class:`Jet` stores, for every entry of an array of shape ``S``, the Taylor
coefficients of a smooth function about a base point up to a fixed total
degree.  Coefficients are kept in the monomial basis (``c_alpha`` multiplies
``delta**alpha``), which turns products into a fixed sparse convolution and
elementary functions into short univariate series in the nilpotent part.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

MAX_ORDER = 3


class JetOrderError(ValueError):
    """Raised when a derivative is requested beyond the stored order."""


class JetAlgebra:
    """Monomial bookkeeping for jets in ``dim`` variables up to ``order``."""

    def __init__(self, dim: int, order: int):
        self.dim = dim
        self.order = order
        monos = []
        for deg in range(order + 1):
            for combo in itertools.combinations_with_replacement(range(dim), deg):
                m = [0] * dim
                for i in combo:
                    m[i] += 1
                monos.append(tuple(m))
        self.monomials = monos
        self.index = {m: i for i, m in enumerate(monos)}
        self.size = len(monos)
        self.degree = np.array([sum(m) for m in monos])

        left, right, target = [], [], []
        for i, a in enumerate(monos):
            for j, b in enumerate(monos):
                if self.degree[i] + self.degree[j] <= order:
                    left.append(i)
                    right.append(j)
                    target.append(self.index[tuple(x + y for x, y in zip(a, b))])
        self._left = np.array(left)
        self._right = np.array(right)
        scatter = np.zeros((len(left), self.size))
        scatter[np.arange(len(left)), target] = 1.0
        self._scatter = scatter

        self._dsrc = []
        self._dfac = []
        if order > 0:
            lower = algebra(dim, order - 1)
            for i in range(dim):
                src, fac = [], []
                for beta in lower.monomials:
                    alpha = list(beta)
                    alpha[i] += 1
                    src.append(self.index[tuple(alpha)])
                    fac.append(beta[i] + 1)
                self._dsrc.append(np.array(src))
                self._dfac.append(np.array(fac, dtype=float))

    def __repr__(self):
        return f"JetAlgebra(dim={self.dim}, order={self.order})"

    def constant(self, value) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (self.size,))
        c[..., 0] = value
        return Jet(self, c)

    def variables(self, point) -> "Jet":
        """Jet of the coordinate functions about ``point`` (shape ``(dim,)``)."""
        point = np.asarray(point, dtype=float)
        c = np.zeros((self.dim, self.size))
        c[:, 0] = point
        if self.order > 0:
            for i in range(self.dim):
                e = [0] * self.dim
                e[i] = 1
                c[i, self.index[tuple(e)]] = 1.0
        return Jet(self, c)

    def product(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return (a[..., self._left] * b[..., self._right]) @ self._scatter


@lru_cache(maxsize=None)
def algebra(dim: int, order: int) -> JetAlgebra:
    return JetAlgebra(dim, order)


def _coerce(a, b):
    """Bring two jets to a common algebra by truncating the higher one."""
    if a.alg is b.alg:
        return a, b
    if a.alg.dim != b.alg.dim:
        raise ValueError("jets over different numbers of variables")
    if a.alg.order > b.alg.order:
        return a.truncate(b.alg.order), b
    return a, b.truncate(a.alg.order)


class Jet:
    """Array of truncated Taylor expansions sharing one :class:`JetAlgebra`."""

    __slots__ = ("alg", "c")
    __array_priority__ = 1000

    def __init__(self, alg: JetAlgebra, c: np.ndarray):
        self.alg = alg
        self.c = c

    # -- inspection -------------------------------------------------------
    @property
    def shape(self):
        return self.c.shape[:-1]

    @property
    def order(self) -> int:
        return self.alg.order

    @property
    def dim(self) -> int:
        return self.alg.dim

    @property
    def value(self) -> np.ndarray:
        return self.c[..., 0]

    def __repr__(self):
        return f"Jet(shape={self.shape}, order={self.order}, value={self.value!r})"

    def __len__(self):
        return self.shape[0]

    def partials(self, k: int) -> np.ndarray:
        """Dense symmetric tensor of k-th partial derivatives, shape ``S + (dim,)*k``."""
        if k > self.order:
            raise JetOrderError(f"order-{k} partials requested from an order-{self.order} jet")
        out = np.zeros(self.shape + (self.dim,) * k)
        for idx in itertools.product(range(self.dim), repeat=k):
            m = [0] * self.dim
            for i in idx:
                m[i] += 1
            weight = math.prod(math.factorial(e) for e in m)
            out[(Ellipsis,) + idx] = weight * self.c[..., self.alg.index[tuple(m)]]
        return out

    # -- structural -------------------------------------------------------
    def truncate(self, order: int) -> "Jet":
        if order == self.order:
            return self
        if order > self.order:
            raise JetOrderError(f"cannot raise a jet from order {self.order} to {order}")
        low = algebra(self.dim, order)
        return Jet(low, self.c[..., : low.size])

    def deriv(self, i: int) -> "Jet":
        """Partial derivative in coordinate ``i``; the result has one order less."""
        if self.order == 0:
            raise JetOrderError("cannot differentiate an order-0 jet")
        low = algebra(self.dim, self.order - 1)
        return Jet(low, self.c[..., self.alg._dsrc[i]] * self.alg._dfac[i])

    def grad(self) -> "Jet":
        """All first partials stacked on a new trailing axis."""
        return stack([self.deriv(i) for i in range(self.dim)], axis=-1)

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(i is Ellipsis for i in idx):
            raise IndexError("Ellipsis indexing is not supported on jets")
        return Jet(self.alg, self.c[idx])

    @property
    def T(self) -> "Jet":
        return self.swapaxes(-1, -2)

    def swapaxes(self, a: int, b: int) -> "Jet":
        n = len(self.shape)
        return Jet(self.alg, np.swapaxes(self.c, a % n, b % n))

    def transpose(self, *axes) -> "Jet":
        return Jet(self.alg, np.transpose(self.c, tuple(axes) + (len(axes),)))

    def reshape(self, *shape) -> "Jet":
        return Jet(self.alg, self.c.reshape(tuple(shape) + (self.alg.size,)))

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axis = tuple(range(len(self.shape)))
        return Jet(self.alg, self.c.sum(axis=axis))

    # -- arithmetic -------------------------------------------------------
    def _const_add(self, k, sign=1.0):
        k = np.asarray(k, dtype=float)
        shape = np.broadcast_shapes(self.shape, k.shape)
        c = np.broadcast_to(sign * self.c, shape + (self.alg.size,)).copy()
        c[..., 0] += k
        return Jet(self.alg, c)

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = _coerce(self, other)
            return Jet(a.alg, a.c + b.c)
        return self._const_add(other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            a, b = _coerce(self, other)
            return Jet(a.alg, a.c - b.c)
        return self._const_add(-np.asarray(other, dtype=float))

    def __rsub__(self, other):
        return self._const_add(other, sign=-1.0)

    def __neg__(self):
        return Jet(self.alg, -self.c)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = _coerce(self, other)
            return Jet(a.alg, a.alg.product(a.c, b.c))
        other = np.asarray(other, dtype=float)
        return Jet(self.alg, self.c * other[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        other = np.asarray(other, dtype=float)
        return Jet(self.alg, self.c / other[..., None])

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)


# ---------------------------------------------------------------------------
# construction helpers


def stack(items, axis=0) -> Jet:
    items = list(items)
    alg = min((it.alg for it in items if isinstance(it, Jet)), key=lambda a: a.order)
    cs = []
    for it in items:
        if isinstance(it, Jet):
            cs.append(it.truncate(alg.order).c)
        else:
            cs.append(alg.constant(it).c)
    n = len(np.broadcast_shapes(*[c.shape[:-1] for c in cs]))
    ax = axis if axis >= 0 else n + 1 + axis
    return Jet(alg, np.stack(cs, axis=ax))


def as_jet(x, like: Jet) -> Jet:
    return x if isinstance(x, Jet) else like.alg.constant(x)


def value(x):
    return x.value if isinstance(x, Jet) else np.asarray(x, dtype=float)


# ---------------------------------------------------------------------------
# univariate composition


def _series(a: Jet, derivs) -> Jet:
    """Compose with a univariate function given its derivatives at ``a.value``."""
    n = a.order
    delta_c = a.c.copy()
    delta_c[..., 0] = 0.0
    delta = Jet(a.alg, delta_c)
    res = a.alg.constant(derivs[n] / math.factorial(n))
    for m in range(n - 1, -1, -1):
        res = (res * delta)._const_add(derivs[m] / math.factorial(m))
    return res


def compose(coeffs, a: Jet) -> Jet:
    """Compose ``a`` with a univariate Taylor polynomial.

    ``coeffs[m]`` is the m-th Taylor coefficient (already divided by ``m!``)
    about ``a.value``; missing high coefficients are treated as zero.
    """
    derivs = [np.asarray(coeffs[m], float) * math.factorial(m) if m < len(coeffs) else np.zeros(a.shape)
              for m in range(a.order + 1)]
    return _series(a, derivs)


def _falling(p, m):
    out = 1.0
    for j in range(m):
        out *= p - j
    return out


def exp(a):
    if not isinstance(a, Jet):
        return np.exp(a)
    e = np.exp(a.value)
    return _series(a, [e] * (a.order + 1))


def log(a):
    if not isinstance(a, Jet):
        return np.log(a)
    v = a.value
    derivs = [np.log(v)] + [(-1.0) ** (m - 1) * math.factorial(m - 1) / v**m for m in range(1, a.order + 1)]
    return _series(a, derivs)


def sin(a):
    if not isinstance(a, Jet):
        return np.sin(a)
    s, c = np.sin(a.value), np.cos(a.value)
    cycle = [s, c, -s, -c]
    return _series(a, [cycle[m % 4] for m in range(a.order + 1)])


def cos(a):
    if not isinstance(a, Jet):
        return np.cos(a)
    s, c = np.sin(a.value), np.cos(a.value)
    cycle = [c, -s, -c, s]
    return _series(a, [cycle[m % 4] for m in range(a.order + 1)])


def tan(a):
    if not isinstance(a, Jet):
        return np.tan(a)
    return sin(a) / cos(a)


def sinh(a):
    if not isinstance(a, Jet):
        return np.sinh(a)
    s, c = np.sinh(a.value), np.cosh(a.value)
    return _series(a, [s if m % 2 == 0 else c for m in range(a.order + 1)])


def cosh(a):
    if not isinstance(a, Jet):
        return np.cosh(a)
    s, c = np.sinh(a.value), np.cosh(a.value)
    return _series(a, [c if m % 2 == 0 else s for m in range(a.order + 1)])


def sqrt(a):
    if not isinstance(a, Jet):
        return np.sqrt(a)
    return power(a, 0.5)


def fabs(a):
    if not isinstance(a, Jet):
        return np.abs(a)
    return a * np.sign(a.value)


def reciprocal(a):
    if not isinstance(a, Jet):
        return 1.0 / np.asarray(a, float)
    v = a.value
    derivs = [(-1.0) ** m * math.factorial(m) / v ** (m + 1) for m in range(a.order + 1)]
    return _series(a, derivs)


def power(a, p):
    """``a**p`` for a real constant exponent or a jet exponent."""
    if isinstance(p, Jet):
        return exp(p * log(a))
    if not isinstance(a, Jet):
        return np.power(a, p)
    p = float(p)
    if p.is_integer() and abs(p) <= 16:
        n = int(abs(p))
        res = a.alg.constant(np.ones(a.shape))
        base = a
        while n:
            if n & 1:
                res = res * base
            n >>= 1
            if n:
                base = base * base
        return reciprocal(res) if p < 0 else res
    v = a.value
    derivs = [_falling(p, m) * v ** (p - m) for m in range(a.order + 1)]
    return _series(a, derivs)


# ---------------------------------------------------------------------------
# tensor algebra


_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _einsum2(sub_a, sub_b, sub_out, a, b):
    free = next(ch for ch in _LETTERS if ch not in sub_a + sub_b + sub_out)
    if isinstance(a, Jet) and isinstance(b, Jet):
        a, b = _coerce(a, b)
        alg = a.alg
        pa = a.c[..., alg._left]
        pb = b.c[..., alg._right]
        pairs = np.einsum(f"{sub_a}{free},{sub_b}{free}->{sub_out}{free}", pa, pb)
        return Jet(alg, pairs @ alg._scatter)
    if isinstance(a, Jet):
        return Jet(a.alg, np.einsum(f"{sub_a}{free},{sub_b}->{sub_out}{free}", a.c, np.asarray(b, float)))
    if isinstance(b, Jet):
        return Jet(b.alg, np.einsum(f"{sub_a},{sub_b}{free}->{sub_out}{free}", np.asarray(a, float), b.c))
    return np.einsum(f"{sub_a},{sub_b}->{sub_out}", a, b)


def einsum(subscripts: str, *operands):
    """Einstein summation over jets and/or constant arrays (explicit output only)."""
    lhs, out = subscripts.replace(" ", "").split("->")
    subs = lhs.split(",")
    if len(subs) == 1:
        a = operands[0]
        if isinstance(a, Jet):
            free = next(ch for ch in _LETTERS if ch not in subs[0] + out)
            return Jet(a.alg, np.einsum(f"{subs[0]}{free}->{out}{free}", a.c))
        return np.einsum(subscripts, a)
    acc, acc_sub = operands[0], subs[0]
    for k in range(1, len(subs)):
        rest = "".join(subs[k + 1:]) + out
        keep = "".join(dict.fromkeys(ch for ch in acc_sub + subs[k] if ch in rest))
        target = out if k == len(subs) - 1 else keep
        acc = _einsum2(acc_sub, subs[k], target, acc, operands[k])
        acc_sub = target
    return acc


def matmul(a, b):
    """Matrix/vector products over the trailing one or two shape axes."""
    nda = len(a.shape) if isinstance(a, Jet) else np.ndim(a)
    ndb = len(b.shape) if isinstance(b, Jet) else np.ndim(b)
    if nda == 2 and ndb == 2:
        return einsum("ij,jk->ik", a, b)
    if nda == 2 and ndb == 1:
        return einsum("ij,j->i", a, b)
    if nda == 1 and ndb == 2:
        return einsum("j,jk->k", a, b)
    if nda == 1 and ndb == 1:
        return einsum("j,j->", a, b)
    raise ValueError("matmul supports only 1-d and 2-d jet operands")


def dot(a, b):
    return matmul(a, b)


def inv(a: Jet) -> Jet:
    """Matrix inverse by a terminating Neumann series about the base value."""
    a0 = a.value
    a0inv = np.linalg.inv(a0)
    if a.order == 0:
        return a.alg.constant(a0inv)
    nil_c = a.c.copy()
    nil_c[..., 0] = 0.0
    x = -(einsum("ij,jk->ik", a0inv, Jet(a.alg, nil_c)))
    term = a.alg.constant(np.eye(a0.shape[0]))
    total = term
    for _ in range(a.order):
        term = einsum("ij,jk->ik", x, term)
        total = total + term
    return einsum("ij,jk->ik", total, a0inv)


def levi_civita(n: int) -> np.ndarray:
    eps = np.zeros((n,) * n)
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        eps[perm] = -1.0 if inversions % 2 else 1.0
    return eps


@lru_cache(maxsize=None)
def _levi(n: int) -> np.ndarray:
    return levi_civita(n)


def det(a):
    """Determinant of a square jet matrix (n ≤ 4) via the Levi-Civita symbol."""
    if not isinstance(a, Jet):
        return np.linalg.det(a)
    n = a.shape[0]
    if n == 1:
        return a[0, 0]
    if n == 2:
        return a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    eps = _levi(n)
    letters = _LETTERS[:n]
    acc = einsum(f"{letters},{letters[0]}->{letters[1:]}", eps, a[0])
    for r in range(1, n):
        rest = letters[r + 1:]
        acc = einsum(f"{letters[r:]},{letters[r]}->{rest}", acc, a[r])
    return acc
